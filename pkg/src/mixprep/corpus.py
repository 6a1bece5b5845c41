"""Seeded random inputs: states, ensembles, density matrices and the sparse test corpus."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .cholesky import Ensemble
from .linalg import StateVector

SPARSE_DIMS = (16, 32, 64, 128, 256)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_state(n: int, seed=None) -> StateVector:
    """Haar-random state (normalized complex Gaussian vector)."""
    rng = _rng(seed)
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector.normalized(v)


def random_weights(ell: int, seed=None) -> np.ndarray:
    w = _rng(seed).uniform(0.05, 1.0, ell)
    return w / w.sum()


def random_ensemble(n: int, ell: int, seed=None) -> Ensemble:
    rng = _rng(seed)
    return Ensemble(random_weights(ell, rng), tuple(random_state(n, rng) for _ in range(ell)))


def random_density(n: int, seed=None, rank: Optional[int] = None) -> np.ndarray:
    """``A A^H / Tr`` with a complex Gaussian ``2^n x rank`` factor (full rank by default)."""
    rng = _rng(seed)
    d = 1 << n
    r = d if rank is None else rank
    a = rng.normal(size=(d, r)) + 1j * rng.normal(size=(d, r))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def sparse_density(d: int, seed=None, band: int = 3, decades: float = 5.0) -> np.ndarray:
    """Sparse banded PSD matrix with a wide spread of entry magnitudes.

    The factor is lower triangular with ``band`` subdiagonals, a diagonal in
    [0.5, 1.5) and off-diagonal entries scaled by ``10^-U(0, decades)``; its
    exact Cholesky factor is therefore itself, and small entries are what the
    incomplete factorization drops.
    """
    rng = _rng(seed)
    a = rng.normal(size=(d, d)) * 10.0 ** (-rng.uniform(0, decades, size=(d, d)))
    a = np.tril(np.triu(a, -band), -1)
    a += np.diag(rng.uniform(0.5, 1.5, d))
    rho = a @ a.T
    return (rho / np.trace(rho)).astype(complex)


def sparse_corpus(count: int = 20, seed=0, dims=SPARSE_DIMS) -> list[np.ndarray]:
    """``count`` sparse matrices cycling through ``dims``."""
    rng = _rng(seed)
    return [sparse_density(dims[i % len(dims)], rng) for i in range(count)]
