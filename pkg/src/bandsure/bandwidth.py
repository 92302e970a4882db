"""Bandwidth selection: Sure criteria and K-fold cross-validation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import kernels
from .estimators import as_data, sample_cov, taper_weights
from .matcore import DEFAULT_MAX_ITER, DEFAULT_TOL, OpNormConvergenceError

__all__ = [
    "METHODS",
    "SureConstants",
    "SelectionResult",
    "sure_constants",
    "sure_f",
    "sure_op",
    "sure_op_weights",
    "sure_taper",
    "select_sure",
    "select_taper",
    "cv_select",
    "select",
]

METHODS = ("sure_f", "sure_op", "cv_op", "cv_l11")


@dataclass(frozen=True)
class SureConstants:
    """Coefficients of the unbiased variance and squared-entry estimates.

    ``a * s_ii s_jj + b * s_ij**2`` is unbiased for ``Var(s_ij)`` and
    ``c * s_ii s_jj + d * s_ij**2`` for ``sigma_ij**2``.
    """

    n: int
    a: float
    b: float
    c: float
    d: float


@dataclass(frozen=True)
class SelectionResult:
    k: int
    ks: NDArray[np.int64] = field(repr=False)
    values: NDArray[np.float64] = field(repr=False)
    method: str

    def __post_init__(self) -> None:
        if len(self.ks) != len(self.values) or len(self.ks) == 0:
            raise ValueError("criterion curve must be non-empty with matching K grid")

    @property
    def curve(self) -> list[tuple[int, float]]:
        return [(int(k), float(v)) for k, v in zip(self.ks, self.values)]


def _argmin_result(ks, values, method: str) -> SelectionResult:
    ks = np.asarray(ks, dtype=np.int64)
    values = np.asarray(values, dtype=np.float64)
    # np.argmin returns the first minimum, i.e. the smallest K on ties
    return SelectionResult(int(ks[int(np.argmin(values))]), ks, values, method)


def sure_constants(n: int) -> SureConstants:
    if int(n) != n or n < 3:
        raise ValueError(f"Sure constants need n >= 3, got {n!r}")
    n = int(n)
    den = n * n - n - 2
    return SureConstants(
        n=n,
        a=(n - 1) / den,
        b=(n - 3) / den,
        c=(1 - n) / den,
        d=(n - 1) ** 2 / den,
    )


def _diag_terms(s, n: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError("expected a square covariance matrix")
    k = sure_constants(n)
    return kernels.diag_sums(s, k.a, k.b, k.c, k.d)


def sure_f(s, n: int) -> NDArray[np.float64]:
    """Sure_F(K) for K = 1..p (index K-1)."""
    var, bias = _diag_terms(s, n)
    var_cum = np.cumsum(var)
    # bias_tail[K-1] = sum of bias terms at offsets >= K
    bias_tail = np.append(np.cumsum(bias[::-1])[::-1][1:], 0.0)
    return var_cum + bias_tail


def sure_op_weights(k: int, offsets: ArrayLike) -> NDArray[np.float64]:
    """``K * exp(1 - m / K)`` for offsets ``m``."""
    m = np.asarray(offsets, dtype=np.float64)
    return k * np.exp(1.0 - m / k)


def sure_op(s, n: int) -> NDArray[np.float64]:
    """Sure_op(K) for K = 1..p: bias terms reweighted by ``K exp(1 - |i-j|/K)``."""
    var, bias = _diag_terms(s, n)
    p = var.size
    var_cum = np.cumsum(var)
    offs = np.arange(p, dtype=np.float64)
    out = np.empty(p)
    for k in range(1, p + 1):
        tail = bias[k:]
        out[k - 1] = var_cum[k - 1] + float(np.dot(sure_op_weights(k, offs[k:]), tail))
    return out


def taper_grid(p: int) -> NDArray[np.int64]:
    """Even taper bandwidths 2..2(p-1); the largest leaves every entry untouched."""
    return np.arange(2, max(2, 2 * (p - 1)) + 1, 2, dtype=np.int64)


def sure_taper(s, n: int, ks: ArrayLike | None = None) -> tuple[NDArray[np.int64], NDArray[np.float64]]:
    """Unbiased Frobenius risk of the tapering estimator over even bandwidths."""
    var, bias = _diag_terms(s, n)
    p = var.size
    grid = taper_grid(p) if ks is None else np.asarray(ks, dtype=np.int64)
    out = np.empty(grid.size)
    for idx, k in enumerate(grid):
        w = taper_weights(int(k), p)
        out[idx] = np.dot(w * w, var) + np.dot((1.0 - w) ** 2, bias)
    return grid, out


def select_sure(s, n: int, method: str = "sure_op") -> SelectionResult:
    """Minimize Sure_F over 1..p, or Sure_op over [K_F, min(K_F**2, p)]."""
    curve_f = sure_f(s, n)
    p = curve_f.size
    res_f = _argmin_result(np.arange(1, p + 1), curve_f, "sure_f")
    if method == "sure_f":
        return res_f
    if method != "sure_op":
        raise ValueError(f"unknown Sure method {method!r}")
    lo, hi = res_f.k, min(res_f.k**2, p)
    curve_op = sure_op(s, n)
    return _argmin_result(np.arange(lo, hi + 1), curve_op[lo - 1 : hi], "sure_op")


def select_taper(s, n: int) -> SelectionResult:
    ks, values = sure_taper(s, n)
    return _argmin_result(ks, values, "sure_taper")


def _fold_indices(n: int, folds: int, rng: np.random.Generator) -> list[NDArray[np.int64]]:
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if n < folds:
        raise ValueError(f"cannot split {n} rows into {folds} folds")
    parts = np.array_split(rng.permutation(n), folds)
    for part in parts:
        if part.size < 2:
            raise ValueError(
                f"every fold needs >= 2 rows to form a covariance (n={n}, folds={folds})"
            )
    return parts


def _cov(x: NDArray[np.float64]) -> NDArray[np.float64]:
    c = x - x.mean(axis=0)
    s = c.T @ c / (x.shape[0] - 1)
    return 0.5 * (s + s.T)


def cv_select(
    x: ArrayLike,
    loss: str = "op",
    folds: int = 10,
    rng: np.random.Generator | int | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> SelectionResult:
    """K-fold CV over K = 1..p.

    Each fold's held-out rows give a raw sample covariance; the remaining rows
    give a banded covariance. The loss is the squared operator norm (``op``)
    or maximum absolute row sum (``l11``) of their difference, averaged over
    folds.
    """
    if loss not in ("op", "l11"):
        raise ValueError(f"loss must be 'op' or 'l11', got {loss!r}")
    data = as_data(x)
    n, p = data.shape
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    parts = _fold_indices(n, folds, rng)
    total = np.zeros(p)
    mask = np.ones(n, dtype=bool)
    for part in parts:
        mask[:] = True
        mask[part] = False
        train, test = _cov(data[mask]), _cov(data[part])
        if loss == "l11":
            total += kernels.l11_curve(train, test)
        else:
            curve, iters = kernels.op_curve(train, test, tol, max_iter)
            if np.any(iters < 0):
                bad = int(np.flatnonzero(iters < 0)[0]) + 1
                raise OpNormConvergenceError(float(np.sqrt(curve[bad - 1])), np.empty(0), max_iter)
            total += curve
    return _argmin_result(np.arange(1, p + 1), total / folds, f"cv_{loss}")


def select(x: ArrayLike, method: str, folds: int = 10, rng=None) -> SelectionResult:
    """Dispatch on a method tag in ``METHODS``."""
    if method in ("sure_f", "sure_op"):
        data = as_data(x)
        return select_sure(sample_cov(data), data.shape[0], method)
    if method in ("cv_op", "cv_l11"):
        return cv_select(x, loss=method[3:], folds=folds, rng=rng)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
