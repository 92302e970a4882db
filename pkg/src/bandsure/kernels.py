"""Hot numeric loops, each with a numba and a pure-numpy implementation.

Public callers go through the dispatch functions at the bottom of the module;
both implementations must agree to floating-point roundoff (tests check this).
"""

from __future__ import annotations

import numpy as np

from ._accel import get_backend, njit

BLOCK = 3

# relative Ritz residual reachable in double precision is about eps * sqrt(n)
_EPS = np.finfo(np.float64).eps
# Ritz values this close (relative) to the top count as one cluster
_WINDOW = 1e-2


def start_block(n, b=BLOCK):
    """Deterministic start: all-ones first, then fixed quasi-random columns."""
    t = np.arange(1, n + 1, dtype=np.float64)
    cols = [
        np.ones(n),
        np.sin(t * np.sqrt(2.0)) + 0.5 * np.cos(t * np.sqrt(3.0)),
        np.cos(t * np.sqrt(5.0)) - 0.5 * np.sin(t * np.sqrt(7.0)),
    ]
    return np.ascontiguousarray(np.column_stack(cols[: min(b, n, len(cols))]))


# ---------------------------------------------------------------------------
# block power iteration on A^T A with Rayleigh-Ritz extraction
# ---------------------------------------------------------------------------
#
# The block (a few columns) makes convergence depend on the gap between the
# top singular value and the first one outside the block, so near-equal top
# singular values do not stall it. The returned Ritz value never exceeds the
# true squared norm.
#
# Stopping uses Ritz residuals r_i = ||B y_i - theta_i y_i|| of B = A^T A,
# which cost nothing extra since B q is already formed. Some eigenvalue of B
# lies within r_1 of the top Ritz value, so r_1 <= 2 * tol * theta bounds the
# relative error of sqrt(theta) by tol. That alone is fooled inside a tight
# cluster: a Ritz vector close to the second member has a tiny residual too.
# So every Ritz pair within _WINDOW of the top must meet the same bound,
# which keeps iterating until the block has settled on the whole cluster and
# Rayleigh-Ritz resolves it. Residuals at roundoff level also stop. Cheaper
# rules (a step-size tail estimate, a Ritz-gap quadratic estimate) were tried
# and stopped early on near-degenerate spectra.


def _stop(w, res, tol, floor):
    theta = w[-1]
    for i in range(w.shape[0]):
        if w[i] >= (1.0 - _WINDOW) * theta:
            r = res[i]
            if r > 2.0 * tol * theta and r > floor * theta:
                return False
    return True


_stop_nb = njit(_stop)


@njit
def _power_iter_nb(a, at, v0, tol, max_iter):
    q = np.ascontiguousarray(np.linalg.qr(v0)[0])
    floor = 4.0 * _EPS * np.sqrt(a.shape[1])
    theta = 0.0
    top = q[:, 0].copy()
    for it in range(1, max_iter + 1):
        z = np.dot(at, np.dot(a, q))
        h = np.dot(np.ascontiguousarray(q.T), z)
        h = 0.5 * (h + h.T)
        w, u = np.linalg.eigh(h)
        theta = w[-1]
        u1 = np.ascontiguousarray(u[:, -1])
        top = np.dot(q, u1)
        if theta <= 0.0:
            return 0.0, top, it, True
        res = np.sqrt(np.sum((np.dot(z, u) - np.dot(q, u) * w) ** 2, axis=0))
        if _stop_nb(w, res, tol, floor):
            return theta, top, it, True
        q = np.ascontiguousarray(np.linalg.qr(z)[0])
    return theta, top, max_iter, False


def _power_iter_np(a, at, v0, tol, max_iter):
    q, _ = np.linalg.qr(v0)
    floor = 4.0 * _EPS * np.sqrt(a.shape[1])
    theta = 0.0
    top = q[:, 0].copy()
    for it in range(1, max_iter + 1):
        z = at @ (a @ q)
        h = q.T @ z
        h = 0.5 * (h + h.T)
        w, u = np.linalg.eigh(h)
        theta = float(w[-1])
        top = q @ u[:, -1]
        if theta <= 0.0:
            return 0.0, top, it, True
        res = np.linalg.norm(z @ u - (q @ u) * w, axis=0)
        if _stop(w, res, tol, floor):
            return theta, top, it, True
        q, _ = np.linalg.qr(z)
    return theta, top, max_iter, False


# ---------------------------------------------------------------------------
# per-diagonal sums for the Sure criteria
# ---------------------------------------------------------------------------


@njit
def _diag_sums_nb(s, a, b, c, d):
    p = s.shape[0]
    var = np.zeros(p)
    bias = np.zeros(p)
    for m in range(p):
        vs = 0.0
        bs = 0.0
        for i in range(p - m):
            prod = s[i, i] * s[i + m, i + m]
            sq = s[i, i + m] * s[i, i + m]
            vs += a * prod + b * sq
            bs += c * prod + d * sq
        if m > 0:
            vs *= 2.0
            bs *= 2.0
        var[m] = vs
        bias[m] = bs
    return var, bias


def _diag_sums_np(s, a, b, c, d):
    p = s.shape[0]
    dg = np.diag(s)
    var = np.empty(p)
    bias = np.empty(p)
    for m in range(p):
        prod = dg[: p - m] * dg[m:]
        sq = np.diagonal(s, m) ** 2
        mult = 1.0 if m == 0 else 2.0
        var[m] = mult * np.sum(a * prod + b * sq)
        bias[m] = mult * np.sum(c * prod + d * sq)
    return var, bias


# ---------------------------------------------------------------------------
# banding
# ---------------------------------------------------------------------------


@njit
def _band_nb(a, k):
    p, q = a.shape
    out = np.zeros((p, q))
    for i in range(p):
        lo = max(0, i - k + 1)
        hi = min(q, i + k)
        for j in range(lo, hi):
            out[i, j] = a[i, j]
    return out


def _band_np(a, k):
    p, q = a.shape
    offs = np.abs(np.arange(p)[:, None] - np.arange(q)[None, :])
    return np.where(offs <= k - 1, a, 0.0)


# ---------------------------------------------------------------------------
# cross-validation loss curves over K = 1..p
# ---------------------------------------------------------------------------


@njit
def _l11_curve_nb(train, test):
    p = train.shape[0]
    rows = np.zeros(p)
    for i in range(p):
        acc = 0.0
        for j in range(p):
            acc += abs(test[i, j])
        rows[i] = acc
    out = np.empty(p)
    for k in range(1, p + 1):
        m = k - 1
        for i in range(p):
            j = i + m
            if j < p:
                rows[i] += abs(train[i, j] - test[i, j]) - abs(test[i, j])
            if m > 0:
                j = i - m
                if j >= 0:
                    rows[i] += abs(train[i, j] - test[i, j]) - abs(test[i, j])
        best = rows[0]
        for i in range(1, p):
            if rows[i] > best:
                best = rows[i]
        out[k - 1] = best
    return out


def _l11_curve_np(train, test):
    p = train.shape[0]
    delta = np.abs(train - test) - np.abs(test)
    base = np.abs(test).sum(axis=1)
    gain = np.zeros((p, p))
    idx = np.arange(p)
    for m in range(p):
        up = idx[: p - m]
        gain[up, m] += delta[up, up + m]
        if m > 0:
            dn = idx[m:]
            gain[dn, m] += delta[dn, dn - m]
    rows = base[:, None] + np.cumsum(gain, axis=1)
    return rows.max(axis=0)


@njit
def _op_curve_nb(train, test, block, tol, max_iter):
    p = train.shape[0]
    diff = np.ascontiguousarray(-test)
    out = np.empty(p)
    iters = np.empty(p, dtype=np.int64)
    ones = np.ones(p) / np.sqrt(p)
    for k in range(1, p + 1):
        m = k - 1
        for i in range(p - m):
            diff[i, i + m] += train[i, i + m]
            if m > 0:
                diff[i + m, i] += train[i + m, i]
        theta, x, it, ok = _power_iter_nb(diff, diff, block, tol, max_iter)
        # largest squared column norm bounds theta from below; falling short
        # means the warm start missed the top subspace
        # diff is symmetric, so row norms equal column norms
        best = 0
        floor = 0.0
        for j in range(p):
            c = np.dot(diff[j], diff[j])
            if c > floor:
                floor = c
                best = j
        if ok and theta < floor * (1.0 - 1e-12):
            retry = block.copy()
            retry[:, 0] = 0.0
            retry[best, 0] = 1.0
            theta2, x2, it2, ok = _power_iter_nb(diff, diff, retry, tol, max_iter)
            it += it2
            if theta2 > theta:
                theta, x = theta2, x2
        block[:, 0] = x + 0.1 * ones
        if not ok:
            iters[k - 1] = -1
        else:
            iters[k - 1] = it
        out[k - 1] = theta
    return out, iters


def _op_curve_np(train, test, block, tol, max_iter):
    p = train.shape[0]
    diff = -test.copy()
    out = np.empty(p)
    iters = np.empty(p, dtype=np.int64)
    ones = np.ones(p) / np.sqrt(p)
    idx = np.arange(p)
    for k in range(1, p + 1):
        m = k - 1
        i = idx[: p - m]
        diff[i, i + m] += train[i, i + m]
        if m > 0:
            diff[i + m, i] += train[i + m, i]
        theta, x, it, ok = _power_iter_np(diff, diff, block, tol, max_iter)
        col_sq = np.einsum("ij,ij->j", diff, diff)
        best = int(np.argmax(col_sq))
        if ok and theta < col_sq[best] * (1.0 - 1e-12):
            retry = block.copy()
            retry[:, 0] = 0.0
            retry[best, 0] = 1.0
            theta2, x2, it2, ok = _power_iter_np(diff, diff, retry, tol, max_iter)
            it += it2
            if theta2 > theta:
                theta, x = theta2, x2
        block[:, 0] = x + 0.1 * ones
        iters[k - 1] = it if ok else -1
        out[k - 1] = theta
    return out, iters


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def power_iter(a, at, v0, tol, max_iter):
    """Block power iteration on ``at @ a`` from the columns of ``v0``.

    Returns (top Ritz value, its Ritz vector, iterations, converged).
    """
    a, at, v0 = _f64(a), _f64(at), _f64(v0)
    if v0.ndim == 1:
        v0 = v0[:, None].copy()
    if get_backend() == "numba":
        theta, x, it, ok = _power_iter_nb(a, at, v0, float(tol), int(max_iter))
    else:
        theta, x, it, ok = _power_iter_np(a, at, v0, float(tol), int(max_iter))
    return float(theta), x, int(it), bool(ok)


def diag_sums(s, a, b, c, d):
    s = _f64(s)
    if get_backend() == "numba":
        return _diag_sums_nb(s, float(a), float(b), float(c), float(d))
    return _diag_sums_np(s, a, b, c, d)


def band(a, k):
    a = _f64(a)
    if get_backend() == "numba":
        return _band_nb(a, int(k))
    return _band_np(a, int(k))


def l11_curve(train, test):
    train, test = _f64(train), _f64(test)
    if get_backend() == "numba":
        return _l11_curve_nb(train, test)
    return _l11_curve_np(train, test)


def op_curve(train, test, tol, max_iter):
    """Squared operator norms of ``band(train, K) - test`` for K = 1..p.

    Consecutive K are warm-started from the previous top Ritz vector blended
    with the all-ones direction. Entries of the returned iteration
    count are -1 where the iteration did not converge.
    """
    train, test = _f64(train), _f64(test)
    if get_backend() == "numba":
        return _op_curve_nb(train, test, start_block(train.shape[0]), float(tol), int(max_iter))
    return _op_curve_np(train, test, start_block(train.shape[0]), float(tol), int(max_iter))
