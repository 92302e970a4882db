"""Monte Carlo and deterministic oracles for the moment, MGF, trace and tail
results behind the banding estimator, plus the block-structure inequalities.

Every check returns :class:`OracleReport` rows. Monte Carlo checks pass within
4 standard errors; deterministic checks allow only floating-point slack.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Callable, Iterable

import numpy as np
from numpy.typing import NDArray

from .bandwidth import sure_constants
from .datagen import make_rng
from .matcore import (
    band,
    block,
    block_compress,
    cholesky,
    jacobi_eigh,
    max_abs_row_sum,
    n_blocks,
    op_norm,
    sym_sqrt,
)

__all__ = [
    "OracleReport",
    "SUITES",
    "check_moment_identities",
    "check_mgf_identity",
    "check_trace_bound",
    "check_tail_bound",
    "check_band_structure",
    "check_l11_bound",
    "check_scalar_lemmas",
    "run_suite",
    "mgf_matrix",
]

N_SE = 4.0
FP_SLACK = 1e-10
TIGHT_TOL = 1e-13


@dataclass(frozen=True)
class OracleReport:
    """One oracle comparison.

    ``kind`` says how ``value`` is compared with ``reference``: ``equal``
    passes when ``|value - reference| <= tolerance``, ``upper`` when
    ``value <= reference + tolerance`` and ``lower`` when
    ``value >= reference - tolerance``.
    """

    check: str
    target: str
    value: float
    reference: float
    tolerance: float
    passed: bool
    stderr: float | None = None
    kind: str = "equal"

    @classmethod
    def compare(cls, check, target, value, reference, tolerance, stderr=None, kind="equal"):
        value, reference, tolerance = float(value), float(reference), float(tolerance)
        if kind == "equal":
            ok = abs(value - reference) <= tolerance
        elif kind == "upper":
            ok = value <= reference + tolerance
        elif kind == "lower":
            ok = value >= reference - tolerance
        else:
            raise ValueError(f"unknown comparison kind {kind!r}")
        return cls(check, target, value, reference, tolerance, bool(ok),
                   None if stderr is None else float(stderr), kind)

    def as_row(self) -> dict:
        return asdict(self)


CSV_FIELDS = tuple(f.name for f in fields(OracleReport))


def _mc(check, target, samples: NDArray[np.float64], reference: float) -> OracleReport:
    mean = float(np.mean(samples))
    se = float(np.std(samples, ddof=1) / math.sqrt(samples.size))
    return OracleReport.compare(check, target, mean, reference, N_SE * se, stderr=se)


def _slack(*vals: float) -> float:
    return FP_SLACK * max(1.0, *(abs(v) for v in vals))


def _gaussian_draws(sigma: NDArray[np.float64], shape: tuple[int, ...], rng) -> NDArray[np.float64]:
    L = cholesky(sigma)
    z = rng.standard_normal(shape + (L.shape[0],))
    return z @ L.T


# ---------------------------------------------------------------------------
# second moments of sample covariance entries
# ---------------------------------------------------------------------------


def check_moment_identities(
    n: int,
    sigma,
    reps: int,
    rng: np.random.Generator,
    pairs: Iterable[tuple[int, int]] | None = None,
    chunk: int = 20_000,
) -> list[OracleReport]:
    """Monte Carlo ``E s_ij^2`` and ``E s_ii s_jj`` against their closed forms.

    For ``n >= 3`` the unbiased variance and squared-entry estimators built on
    these moments are checked as well. Pairs are 0-based; all ``i <= j`` by
    default.
    """
    s = np.asarray(sigma, dtype=np.float64)
    p = s.shape[0]
    if n < 2:
        raise ValueError("n must be >= 2")
    if reps < 100:
        raise ValueError("reps must be >= 100")
    pairs = [(i, j) for i in range(p) for j in range(i, p)] if pairs is None else list(pairs)

    sq = {pr: [] for pr in pairs}
    prod = {pr: [] for pr in pairs}
    done = 0
    while done < reps:
        m = min(chunk, reps - done)
        x = _gaussian_draws(s, (m, n), rng)
        x = x - x.mean(axis=1, keepdims=True)
        shat = np.einsum("rki,rkj->rij", x, x) / (n - 1)
        for i, j in pairs:
            sq[(i, j)].append(shat[:, i, j] ** 2)
            prod[(i, j)].append(shat[:, i, i] * shat[:, j, j])
        done += m

    out: list[OracleReport] = []
    consts = sure_constants(n) if n >= 3 else None
    for i, j in pairs:
        sii, sjj, sij = s[i, i], s[j, j], s[i, j]
        e_sq = np.concatenate(sq[(i, j)])
        e_prod = np.concatenate(prod[(i, j)])
        ref_sq = sii * sjj / (n - 1) + n * sij**2 / (n - 1)
        ref_prod = sii * sjj + 2.0 * sij**2 / (n - 1)
        out.append(_mc("moments", f"E[s_{i}{j}^2]", e_sq, ref_sq))
        out.append(_mc("moments", f"E[s_{i}{i} s_{j}{j}]", e_prod, ref_prod))
        if i == j:
            # both identities collapse to sigma_ii^2 (n+1)/(n-1)
            deg = sii**2 * (n + 1) / (n - 1)
            out.append(OracleReport.compare("moments", f"i=j closed forms agree ({i})",
                                            ref_sq, deg, _slack(deg)))
            out.append(OracleReport.compare("moments", f"i=j closed forms agree ({i})",
                                            ref_prod, deg, _slack(deg)))
        if consts is not None:
            var_hat = consts.a * e_prod + consts.b * e_sq
            sq_hat = consts.c * e_prod + consts.d * e_sq
            out.append(_mc("moments", f"unbiased Var(s_{i}{j})", var_hat,
                           (sii * sjj + sij**2) / (n - 1)))
            out.append(_mc("moments", f"unbiased sigma_{i}{j}^2", sq_hat, sij**2))
    return out


# ---------------------------------------------------------------------------
# bilinear Gaussian forms Q = X^T A Y
# ---------------------------------------------------------------------------


def mgf_matrix(sigma, a) -> NDArray[np.float64]:
    """``Sigma^{1/2} [[0, A], [A^T, 0]] Sigma^{1/2}`` with a Jacobi square root."""
    s = np.asarray(sigma, dtype=np.float64)
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    p, q = a.shape
    if s.shape != (p + q, p + q):
        raise ValueError(f"Sigma must be {(p + q, p + q)} for a {a.shape} coefficient matrix")
    m = np.zeros((p + q, p + q))
    m[:p, p:] = a
    m[p:, :p] = a.T
    r = sym_sqrt(s)
    b = r @ m @ r
    return 0.5 * (b + b.T)


def _bilinear_draws(sigma, a, shape, rng) -> NDArray[np.float64]:
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    p = a.shape[0]
    z = _gaussian_draws(np.asarray(sigma, dtype=np.float64), shape, rng)
    return np.einsum("...i,ij,...j->...", z[..., :p], a, z[..., p:])


def check_mgf_identity(
    sigma,
    a,
    t_grid: Iterable[float],
    reps: int,
    rng: np.random.Generator,
    label: str = "mgf",
) -> list[OracleReport]:
    """Monte Carlo ``E exp(tQ)`` against ``det(I - tB)^{-1/2}``, plus ``E Q``."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    p = a.shape[0]
    s = np.asarray(sigma, dtype=np.float64)
    b = mgf_matrix(s, a)
    eig, _ = jacobi_eigh(b)
    b_norm = float(np.max(np.abs(eig)))
    t_grid = [float(t) for t in t_grid]
    for t in t_grid:
        if b_norm > 0 and abs(t) >= 1.0 / (2.0 * b_norm):
            raise ValueError(f"t={t} outside |t| < 1/(2||B||) = {1.0 / (2.0 * b_norm):.6g}")

    q = _bilinear_draws(s, a, (reps,), rng)
    out = []
    for t in t_grid:
        ref = float(np.prod(1.0 - t * eig) ** -0.5)
        out.append(_mc(label, f"E exp({t:g} Q)", np.exp(t * q), ref))
    eq = float(np.trace(a @ s[p:, :p]))
    out.append(OracleReport.compare(label, "tr(B)/2 = tr(A Sigma_21)", np.trace(b) / 2.0, eq, _slack(eq)))
    out.append(_mc(label, "E Q", q, eq))
    return out


def check_trace_bound(sigma, u, v, h) -> OracleReport:
    """``tr(B^2) <= 2||S12^abs||^2 + 2||S11^abs|| ||S22^abs||`` for ``A = (u v^T) * H``."""
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    h = np.asarray(h, dtype=np.float64)
    s = np.asarray(sigma, dtype=np.float64)
    k = u.size
    if v.size != k or h.shape != (k, k) or s.shape != (2 * k, 2 * k):
        raise ValueError("shape mismatch: need u, v of length K, H K x K, Sigma 2K x 2K")
    if abs(np.linalg.norm(u) - 1.0) > 1e-10 or abs(np.linalg.norm(v) - 1.0) > 1e-10:
        raise ValueError("u and v must be unit vectors")
    if np.any(np.abs(h) > 1.0):
        raise ValueError("entries of H must lie in [-1, 1]")
    cholesky(s)
    a = np.outer(u, v) * h
    b = mgf_matrix(s, a)
    lhs = float(np.sum(b * b))
    s11, s12, s22 = np.abs(s[:k, :k]), np.abs(s[:k, k:]), np.abs(s[k:, k:])
    rhs = (2.0 * op_norm(s12, tol=TIGHT_TOL) ** 2
           + 2.0 * op_norm(s11, tol=TIGHT_TOL) * op_norm(s22, tol=TIGHT_TOL))
    return OracleReport.compare("trace", "tr(B^2) <= bound", lhs, rhs, _slack(lhs, rhs), kind="upper")


def check_tail_bound(
    sigma,
    a,
    n: int,
    t_grid: Iterable[float],
    reps: int,
    rng: np.random.Generator,
    chunk: int = 2_000,
) -> list[OracleReport]:
    """Empirical ``P(|Qbar| > t sqrt(tr B^2))`` against ``2 exp(-n t^2 / 2)``."""
    t_grid = [float(t) for t in t_grid]
    if any(not 0.0 < t < 0.5 for t in t_grid):
        raise ValueError("t-grid must lie in (0, 1/2)")
    if reps < 10_000:
        raise ValueError("tail checks need reps >= 10^4")
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    s = np.asarray(sigma, dtype=np.float64)
    p = a.shape[0]
    b = mgf_matrix(s, a)
    scale = math.sqrt(float(np.sum(b * b)))
    eq = float(np.trace(a @ s[p:, :p]))

    qbar = np.empty(reps)
    done = 0
    while done < reps:
        m = min(chunk, reps - done)
        qbar[done : done + m] = (_bilinear_draws(s, a, (m, n), rng) - eq).mean(axis=1)
        done += m

    out = []
    for t in t_grid:
        freq = float(np.mean(np.abs(qbar) > t * scale))
        bound = 2.0 * math.exp(-n * t * t / 2.0)
        b_eff = min(bound, 1.0)
        se = math.sqrt(b_eff * (1.0 - b_eff) / reps)
        out.append(OracleReport.compare("tail", f"P(|Qbar|>{t:g} sqrt(trB^2)), n={n}",
                                        freq, bound, N_SE * se, stderr=se, kind="upper"))
    return out


# ---------------------------------------------------------------------------
# block structure of the banded error
# ---------------------------------------------------------------------------


def check_band_structure(sigma, n: int, k: int, rng: np.random.Generator) -> list[OracleReport]:
    """Block sparsity, Schur forms and the factor-3 compression chain for one draw."""
    s = np.asarray(sigma, dtype=np.float64)
    p = s.shape[0]
    x = _gaussian_draws(s, (n,), rng)
    xc = x - x.mean(axis=0)
    shat = xc.T @ xc / (n - 1)
    shat = 0.5 * (shat + shat.T)
    d = np.asarray(band(shat, k)) - np.asarray(band(s, k))
    raw = shat - s
    nb = n_blocks(p, k)
    h0 = np.tril(np.ones((k, k)), -1)

    far = 0.0
    schur = 0.0
    counts = []
    for bk in range(1, nb + 1):
        for bl in range(1, nb + 1):
            dblk = block(d, bk, bl, k)
            if abs(bk - bl) >= 2:
                far = max(far, float(np.max(np.abs(dblk))))
                continue
            rblk = block(raw, bk, bl, k)
            r, c = dblk.shape
            if bk == bl:
                mask = np.ones((r, c))
            elif bk < bl:
                mask = h0[:r, :c]
            else:
                mask = h0.T[:r, :c]
            schur = max(schur, float(np.max(np.abs(dblk - rblk * mask))))
            if bk != bl and r == c == k:
                counts.append(int(np.count_nonzero(dblk)))

    out = [
        OracleReport.compare("structure", f"blocks |k-l|>=2 zero (p={p},K={k})", far, 0.0, 0.0),
        OracleReport.compare("structure", f"Schur forms with H0 (p={p},K={k})", schur, 0.0, 0.0),
    ]
    if counts:
        # generic data leaves every free entry non-zero, so the count is exact
        out.append(OracleReport.compare("structure", f"off-diagonal block non-zeros K(K-1)/2 (K={k})",
                                        max(counts), k * (k - 1) // 2, 0.0))
    star = block_compress(d, k, tol=TIGHT_TOL)
    lhs = op_norm(d, tol=TIGHT_TOL)
    mid = op_norm(star, tol=TIGHT_TOL)
    near = max(float(star[i, j]) for i in range(nb) for j in range(nb) if abs(i - j) <= 1)
    out.append(OracleReport.compare("structure", "||D|| <= ||D*||", lhs, mid, _slack(lhs, mid), kind="upper"))
    out.append(OracleReport.compare("structure", "||D*|| <= 3 max near-diagonal block", mid, 3.0 * near,
                                    _slack(mid, near), kind="upper"))
    return out


def check_l11_bound(count: int, size: int, rng: np.random.Generator) -> list[OracleReport]:
    """Operator norm never exceeds the maximum absolute row sum on random symmetric matrices."""
    out = []
    for _ in range(count):
        g = rng.standard_normal((size, size))
        a = g + g.T
        lhs, rhs = op_norm(a, tol=TIGHT_TOL), max_abs_row_sum(a)
        out.append(OracleReport.compare("structure", f"||A||_op <= ||A||_11 ({size}x{size})",
                                        lhs, rhs, _slack(lhs, rhs), kind="upper"))
    return out


# ---------------------------------------------------------------------------
# scalar lemmas
# ---------------------------------------------------------------------------


def log_quadratic_gap(x):
    """``log(1 + x) - x + x^2``."""
    x = np.asarray(x, dtype=np.float64)
    return np.log1p(x) - x + x * x


def check_scalar_lemmas(grid_size: int = 200_001) -> list[OracleReport]:
    xs = np.linspace(-0.499, 10.0, grid_size)
    xs = np.union1d(xs, [0.0])
    f = log_quadratic_gap(xs)
    out = [
        OracleReport.compare("scalars", "min log(1+x)-x+x^2 on (-1/2, 10]", float(f.min()), 0.0,
                             0.0, kind="lower"),
        OracleReport.compare("scalars", "argmin at x=0", float(xs[int(np.argmin(f))]), 0.0, 0.0),
        OracleReport.compare("scalars", "f(0)", float(log_quadratic_gap(0.0)), 0.0, 0.0),
    ]
    c0 = np.array([0.01, 0.1, 0.5, 1.0, 3.0, 10.0])[:, None]
    t = np.linspace(0.0, 5.0, 101)[None, :]
    a = t / (2.0 * c0)
    resid = np.abs(c0 * a * a - a * t + t * t / (4.0 * c0))
    scale = np.maximum(1.0, t * t / (4.0 * c0))
    out.append(OracleReport.compare("scalars", "c0 a^2 - a t = -t^2/(4 c0) at a=t/(2c0)",
                                    float(np.max(resid / scale)), 0.0, 1e-12))
    return out


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------


def _random_spd(dim: int, rng) -> NDArray[np.float64]:
    w = rng.standard_normal((dim, dim))
    s = w @ w.T / dim + 0.5 * np.eye(dim)
    return 0.5 * (s + s.T)


def _unit(dim: int, rng) -> NDArray[np.float64]:
    x = rng.standard_normal(dim)
    return x / np.linalg.norm(x)


def _power_law(p: int, rho: float = 0.6, alpha: float = 0.5) -> NDArray[np.float64]:
    offs = np.abs(np.arange(p)[:, None] - np.arange(p)[None, :]).astype(float)
    s = rho * np.where(offs > 0, offs, 1.0) ** -(alpha + 1.0)
    np.fill_diagonal(s, 1.0)
    return s


def _suite_moments(seed: int) -> list[OracleReport]:
    sigma = np.array([[1.0, 0.5], [0.5, 1.0]])
    return check_moment_identities(10, sigma, 100_000, make_rng(seed, 0, 2))


def _suite_mgf(seed: int) -> list[OracleReport]:
    out = check_mgf_identity(np.eye(2), [[1.0]], [-0.3, -0.15, 0.0, 0.15, 0.3], 200_000,
                             make_rng(seed, 1, 2), label="mgf")
    rng = make_rng(seed, 2, 2)
    sigma = _random_spd(5, rng)
    a = rng.standard_normal((3, 2))
    eig, _ = jacobi_eigh(mgf_matrix(sigma, a))
    t_max = 1.0 / (2.0 * np.max(np.abs(eig)))
    grid = [f * t_max for f in (-0.6, -0.3, 0.0, 0.3, 0.6)]
    out += check_mgf_identity(sigma, a, grid, 200_000, make_rng(seed, 3, 2), label="mgf 3x2")
    return out


def _suite_trace(seed: int) -> list[OracleReport]:
    k = 4
    e1 = np.eye(k)[0]
    out = [check_trace_bound(np.eye(2 * k), e1, e1, np.ones((k, k)))]
    rng = make_rng(seed, 4, 2)
    for _ in range(100):
        out.append(check_trace_bound(_random_spd(2 * k, rng), _unit(k, rng), _unit(k, rng),
                                     rng.uniform(-1.0, 1.0, (k, k))))
    return out


def _suite_tail(seed: int) -> list[OracleReport]:
    rng = make_rng(seed, 5, 2)
    sigma = _random_spd(4, rng)
    a = rng.standard_normal((2, 2))
    grid = [0.05, 0.1, 0.2, 0.3, 0.45]
    out = []
    for i, n in enumerate((50, 200)):
        out += check_tail_bound(sigma, a, n, grid, 10_000, make_rng(seed, 6 + i, 2))
    return out


def _suite_structure(seed: int) -> list[OracleReport]:
    out = check_band_structure(_power_law(9), 30, 3, make_rng(seed, 8, 2))
    out += check_band_structure(_power_law(7), 30, 3, make_rng(seed, 9, 2))
    sigma = _power_law(60)
    for r in range(50):
        out += check_band_structure(sigma, 40, 5, make_rng(seed, 100 + r, 2))
    out += check_l11_bound(100, 12, make_rng(seed, 10, 2))
    return out


def _suite_scalars(seed: int) -> list[OracleReport]:
    return check_scalar_lemmas()


SUITES: dict[str, Callable[[int], list[OracleReport]]] = {
    "moments": _suite_moments,
    "mgf": _suite_mgf,
    "trace": _suite_trace,
    "tail": _suite_tail,
    "structure": _suite_structure,
    "scalars": _suite_scalars,
}


def run_suite(name: str, seed: int = 0) -> list[OracleReport]:
    if name == "all":
        return [row for suite in SUITES.values() for row in suite(seed)]
    try:
        suite = SUITES[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)} or 'all'") from None
    return suite(seed)
