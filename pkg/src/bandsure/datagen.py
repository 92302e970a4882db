"""Seeded multivariate-normal sampling.

Streams come from numpy's counter-based Philox generator keyed by
``SeedSequence(master_seed, spawn_key=(stream, purpose))``, so a given
(seed, stream) always produces the same numbers regardless of which worker
draws them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

__all__ = ["RngSpec", "DATA", "FOLDS", "make_rng", "standard_normals", "mvn_sample"]

# sub-stream purposes within one replication
DATA = 0
FOLDS = 1


@dataclass(frozen=True)
class RngSpec:
    seed: int
    stream: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.stream < 0:
            raise ValueError("stream id must be non-negative")

    def generator(self, purpose: int = DATA) -> np.random.Generator:
        return make_rng(self.seed, self.stream, purpose)


def make_rng(seed: int, stream: int = 0, purpose: int = DATA) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(purpose)))
    return np.random.Generator(np.random.Philox(ss))


def standard_normals(rng: np.random.Generator, count: int) -> NDArray[np.float64]:
    if count < 0:
        raise ValueError("count must be >= 0")
    return rng.standard_normal(int(count))


def mvn_sample(chol: NDArray[np.float64], n: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """``n`` rows ``L @ z`` with ``z`` i.i.d. standard normal, ``L`` lower triangular."""
    L = np.asarray(chol, dtype=np.float64)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError(f"Cholesky factor must be square, got shape {L.shape}")
    if n < 2:
        raise ValueError("n must be >= 2")
    z = standard_normals(rng, n * L.shape[0]).reshape(n, L.shape[0])
    return z @ L.T
