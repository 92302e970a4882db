"""Population covariance models and the banding / tapering point estimators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .matcore import SymMatrix, band, cholesky

__all__ = [
    "PopulationModel",
    "as_data",
    "sample_cov",
    "banding_estimator",
    "taper_weights",
    "tapering_estimator",
    "power_law_sigma",
    "offband_mass",
    "membership_constant",
]


@dataclass(frozen=True)
class PopulationModel:
    """Power-law covariance ``sigma_ij = rho * |i - j| ** -(alpha + 1)``.

    The formula is undefined on the diagonal; ``diagonal`` fills it (1 by default).
    """

    p: int
    rho: float = 0.6
    alpha: float = 0.5
    diagonal: float = 1.0

    def __post_init__(self) -> None:
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.diagonal <= 0:
            raise ValueError("diagonal value must be positive")

    def sigma(self) -> SymMatrix:
        return power_law_sigma(self)


def as_data(x: ArrayLike) -> NDArray[np.float64]:
    """Validate an ``n x p`` sample matrix (n >= 2, finite)."""
    data = np.asarray(x, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] < 1:
        raise ValueError(f"data must be an n x p matrix, got shape {data.shape}")
    if data.shape[0] < 2:
        raise ValueError("need at least two observations (n >= 2)")
    if not np.all(np.isfinite(data)):
        raise ValueError("data entries must be finite")
    return data


def sample_cov(x: ArrayLike) -> SymMatrix:
    """Centered cross-product matrix divided by ``n - 1``."""
    data = as_data(x)
    centered = data - data.mean(axis=0)
    s = centered.T @ centered / (data.shape[0] - 1)
    return SymMatrix(s, symmetrize=True)


def banding_estimator(x: ArrayLike, k: int) -> SymMatrix:
    return band(sample_cov(x), k)


def taper_weights(k: int, p: int) -> NDArray[np.float64]:
    """Trapezoidal taper ``w_m`` for offsets ``m = 0..p-1``.

    ``w_m = 1`` for ``m <= k/2``, ``2 - 2m/k`` for ``k/2 < m < k``, 0 beyond.
    """
    if int(k) != k or k < 2 or k % 2:
        raise ValueError(f"taper bandwidth must be a positive even integer, got {k!r}")
    m = np.arange(p, dtype=np.float64)
    return np.clip(2.0 - 2.0 * m / k, 0.0, 1.0)


def tapering_estimator(x: ArrayLike, k: int) -> SymMatrix:
    s = sample_cov(x).values
    p = s.shape[0]
    w = taper_weights(k, p)
    offs = np.abs(np.arange(p)[:, None] - np.arange(p)[None, :])
    return SymMatrix(s * w[offs])


def power_law_sigma(model: PopulationModel) -> SymMatrix:
    """Build the model covariance; raises NotPositiveDefiniteError if it is not PD."""
    p = model.p
    offs = np.abs(np.arange(p)[:, None] - np.arange(p)[None, :]).astype(np.float64)
    with np.errstate(divide="ignore"):
        s = model.rho * np.where(offs > 0, offs, 1.0) ** -(model.alpha + 1.0)
    np.fill_diagonal(s, model.diagonal)
    sigma = SymMatrix(s)
    cholesky(sigma)
    return sigma


def offband_mass(sigma) -> NDArray[np.float64]:
    """``max_j sum_{|i-j| >= k} |sigma_ij|`` for ``k = 1..p-1``."""
    s = np.abs(np.asarray(sigma, dtype=np.float64))
    p = s.shape[0]
    offs = np.abs(np.arange(p)[:, None] - np.arange(p)[None, :])
    out = np.empty(max(p - 1, 0))
    for k in range(1, p):
        out[k - 1] = np.where(offs >= k, s, 0.0).sum(axis=0).max()
    return out


def membership_constant(sigma, alpha: float) -> float:
    """Smallest ``M1`` with off-band mass ``<= M1 * k**-alpha`` for every k."""
    mass = offband_mass(sigma)
    if mass.size == 0:
        return 0.0
    k = np.arange(1, mass.size + 1, dtype=np.float64)
    return float(np.max(mass * k**alpha))
