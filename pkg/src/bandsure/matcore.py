"""Dense symmetric matrices and the norm / block primitives built on them."""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import lapack

from . import kernels

__all__ = [
    "SymMatrix",
    "OpNormConvergenceError",
    "NotPositiveDefiniteError",
    "op_norm",
    "frob_norm",
    "max_abs_row_sum",
    "band",
    "n_blocks",
    "block",
    "block_compress",
    "cholesky",
    "jacobi_eigh",
    "sym_sqrt",
]

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10_000


class OpNormConvergenceError(RuntimeError):
    """Power iteration ran out of iterations; carries the last iterate."""

    def __init__(self, estimate: float, vector: NDArray[np.float64], iterations: int):
        super().__init__(
            f"operator norm did not converge in {iterations} iterations "
            f"(last estimate {estimate!r})"
        )
        self.estimate = estimate
        self.vector = vector
        self.iterations = iterations


class NotPositiveDefiniteError(ValueError):
    def __init__(self, pivot: int):
        super().__init__(f"matrix is not positive definite: pivot {pivot} is not positive")
        self.pivot = pivot


class SymMatrix:
    """Immutable dense real symmetric matrix.

    Construction from a full array requires exact symmetry unless
    ``symmetrize=True``, in which case ``(A + A.T) / 2`` is stored.
    Works with numpy functions through ``__array__``.
    """

    __slots__ = ("_values",)

    def __init__(self, values: ArrayLike, *, symmetrize: bool = False):
        a = np.array(values, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        if symmetrize:
            a = 0.5 * (a + a.T)
        elif not np.array_equal(a, a.T):
            raise ValueError("matrix is not symmetric")
        a.setflags(write=False)
        self._values = a

    @classmethod
    def from_upper(cls, upper: ArrayLike) -> "SymMatrix":
        """Build from the upper triangle (diagonal included) of ``upper``."""
        u = np.triu(np.asarray(upper, dtype=np.float64))
        return cls(u + np.triu(u, 1).T)

    @property
    def values(self) -> NDArray[np.float64]:
        return self._values

    @property
    def p(self) -> int:
        return self._values.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self._values.shape

    def __array__(self, dtype=None, copy=None):
        if dtype is None or np.dtype(dtype) == self._values.dtype:
            return self._values.copy() if copy else self._values
        return self._values.astype(dtype)

    def __getitem__(self, key):
        return self._values[key]

    def __add__(self, other):
        return SymMatrix(self._values + _sym_operand(other))

    def __sub__(self, other):
        return SymMatrix(self._values - _sym_operand(other))

    def __rsub__(self, other):
        return SymMatrix(_sym_operand(other) - self._values)

    def __neg__(self):
        return SymMatrix(-self._values)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return SymMatrix(self._values * scalar)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, SymMatrix):
            return NotImplemented
        return np.array_equal(self._values, other._values)

    __hash__ = None

    def __repr__(self) -> str:
        return f"SymMatrix(p={self.p})"


def _sym_operand(other) -> NDArray[np.float64]:
    if isinstance(other, SymMatrix):
        return other.values
    if np.isscalar(other):
        return np.float64(other)
    raise TypeError(f"unsupported operand {type(other).__name__}")


def _as_2d(a) -> NDArray[np.float64]:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
    return arr


def op_norm(
    a,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    x0: NDArray[np.float64] | None = None,
) -> float:
    """Largest singular value of ``a`` by block power iteration on ``a.T @ a``.

    The start block is deterministic: the all-ones vector (or ``x0``) plus
    two fixed quasi-random columns. The converged Ritz value is checked
    against the largest squared column norm, a certified lower bound for the
    squared norm; falling below it means the start block missed the top
    singular subspace, and the iteration is repeated once from a block led by
    the heaviest coordinate vector.

    Raises OpNormConvergenceError if ``max_iter`` is exhausted.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    m = _as_2d(a)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    scale = float(np.max(np.abs(m))) if m.size else 0.0
    if scale == 0.0:
        return 0.0
    # work on a / max|a| so squaring neither underflows nor overflows
    m = m / scale
    mt = m if m.shape[0] == m.shape[1] and np.array_equal(m, m.T) else np.ascontiguousarray(m.T)
    col_sq = np.einsum("ij,ij->j", m, m)
    floor = float(col_sq.max())

    start = kernels.start_block(m.shape[1])
    if x0 is not None:
        start[:, 0] = np.asarray(x0, dtype=np.float64)
    theta, vec, it, ok = kernels.power_iter(m, mt, start, tol, max_iter)
    if not ok:
        raise OpNormConvergenceError(scale * math.sqrt(theta), vec, it)
    if theta < floor * (1.0 - 1e-12):
        start[:, 0] = 0.0
        start[int(np.argmax(col_sq)), 0] = 1.0
        theta2, vec2, it2, ok2 = kernels.power_iter(m, mt, start, tol, max_iter)
        if not ok2:
            raise OpNormConvergenceError(scale * math.sqrt(theta2), vec2, it2)
        theta = max(theta, theta2)
    return scale * math.sqrt(theta)


def frob_norm(a) -> float:
    m = np.asarray(a, dtype=np.float64)
    return float(math.sqrt(np.sum(m * m)))


def max_abs_row_sum(a) -> float:
    """Maximum absolute row sum; bounds ``op_norm`` from above for symmetric input."""
    m = _as_2d(a)
    return float(np.abs(m).sum(axis=1).max())


def band(a, k: int) -> SymMatrix:
    """Keep entries with ``|i - j| <= k - 1``; zero the rest."""
    if int(k) != k or k < 1:
        raise ValueError(f"bandwidth must be an integer >= 1, got {k!r}")
    m = _as_2d(a)
    return SymMatrix(kernels.band(m, int(k)))


def n_blocks(p: int, k: int) -> int:
    return -(-p // k)


def block(a, k: int, l: int, size: int) -> NDArray[np.float64]:
    """Block ``(k, l)`` (1-based) of the partition into ``size x size`` tiles.

    Trailing blocks are ragged when ``size`` does not divide the dimension.
    """
    m = _as_2d(a)
    if size < 1:
        raise ValueError("block size must be >= 1")
    nb_r, nb_c = n_blocks(m.shape[0], size), n_blocks(m.shape[1], size)
    if not (1 <= k <= nb_r and 1 <= l <= nb_c):
        raise ValueError(f"block index ({k}, {l}) out of range for {nb_r}x{nb_c} blocks")
    return m[(k - 1) * size : k * size, (l - 1) * size : l * size].copy()


def block_compress(a, size: int, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> NDArray[np.float64]:
    """Matrix of block operator norms.

    Blocks that are identically zero get an exact 0. For symmetric input
    only the upper block triangle is computed and mirrored, since
    ``||A(l, k)|| = ||A(k, l).T||``.
    """
    m = _as_2d(a)
    if size < 1:
        raise ValueError("block size must be >= 1")
    nb = n_blocks(m.shape[0], size)
    symmetric = m.shape[0] == m.shape[1] and np.array_equal(m, m.T)
    out = np.zeros((nb, nb))
    for k in range(1, nb + 1):
        for l in range(k if symmetric else 1, nb + 1):
            blk = block(m, k, l, size)
            if np.any(blk):
                out[k - 1, l - 1] = op_norm(blk, tol=tol, max_iter=max_iter)
            if symmetric:
                out[l - 1, k - 1] = out[k - 1, l - 1]
    return out


def cholesky(sigma) -> NDArray[np.float64]:
    """Lower-triangular ``L`` with ``L @ L.T == sigma``.

    Raises NotPositiveDefiniteError naming the 1-based failing pivot.
    """
    s = np.asarray(sigma, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {s.shape}")
    if not np.array_equal(s, s.T):
        raise ValueError("matrix is not symmetric")
    c, info = lapack.dpotrf(s, lower=True, clean=True)
    if info > 0:
        raise NotPositiveDefiniteError(int(info))
    if info < 0:  # pragma: no cover - argument error inside LAPACK
        raise ValueError(f"dpotrf argument {-info} invalid")
    return np.tril(c)


def jacobi_eigh(a, tol: float = 1e-14, max_sweeps: int = 100) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Eigen-decomposition of a small symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues ascending and
    eigenvectors in the columns.
    """
    w = np.array(a, dtype=np.float64)
    n = w.shape[0]
    v = np.eye(n)
    scale = max(float(np.sqrt(np.sum(w * w))), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = float(np.sqrt(np.sum(np.triu(w, 1) ** 2)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if w[p, q] == 0.0:
                    continue
                theta = (w[q, q] - w[p, p]) / (2.0 * w[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                w = rot.T @ w @ rot
                w[p, q] = w[q, p] = 0.0
                v = v @ rot
    else:
        raise RuntimeError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")
    vals = np.diag(w).copy()
    order = np.argsort(vals)
    return vals[order], v[:, order]


def sym_sqrt(a) -> NDArray[np.float64]:
    """Symmetric square root of a positive semi-definite matrix (Jacobi based)."""
    vals, vecs = jacobi_eigh(a)
    if vals[0] < -1e-12 * max(abs(vals[-1]), 1.0):
        raise ValueError("matrix has a negative eigenvalue; no real square root")
    root = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T
    return 0.5 * (root + root.T)
