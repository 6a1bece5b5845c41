"""Pivoted and incomplete Cholesky factorization of density matrices, and the
conversion of a factor ``A`` (with ``rho = A A^H``) into an ensemble of pure states."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import (
    NORM_TOL,
    DimensionError,
    StateVector,
    ValidationError,
    as_matrix,
    eigh,
)

RANK_TOL = 1e-10
NEGLIGIBLE_WEIGHT = 1e-14
SHIFT_START = 1e-12
SHIFT_GROWTH = 10.0
MAX_SHIFT_RETRIES = 8


class IndefiniteMatrixError(ValidationError):
    """The input is not positive semidefinite within tolerance."""


class BreakdownError(ArithmeticError):
    """Incomplete factorization hit a non-positive pivot even after diagonal shifts."""

    def __init__(self, message: str, shifts: tuple[float, ...] = ()):
        super().__init__(message)
        self.shifts = shifts


class EmptyEnsembleError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CholeskyFactor:
    """Lower-triangular ``L`` in pivot order: ``M[perm][:, perm] ~= L @ L^H``.

    ``drop_tol`` is None for a complete factorization. ``shift`` is the
    diagonal shift that was needed to avoid breakdown (0 when none), and
    ``shift_trail`` lists every shift that was tried.
    """

    L: np.ndarray
    permutation: np.ndarray
    rank: int
    drop_tol: Optional[float] = None
    shift: float = 0.0
    shift_trail: tuple[float, ...] = ()

    @property
    def kind(self) -> str:
        return "complete" if self.drop_tol is None else "incomplete"

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.L))

    def unpermuted(self) -> np.ndarray:
        """``P L``: rows of ``L`` moved back to their original indices."""
        out = np.empty_like(self.L)
        out[self.permutation] = self.L
        return out

    def reconstruct(self) -> np.ndarray:
        pl = self.unpermuted()
        return pl @ pl.conj().T


@dataclass(frozen=True, eq=False)
class FactorMatrix:
    A: np.ndarray
    source: Optional[CholeskyFactor] = None

    @property
    def ell(self) -> int:
        return self.A.shape[1]

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.A))


@dataclass(frozen=True, eq=False)
class Ensemble:
    weights: np.ndarray
    states: tuple[StateVector, ...]

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        states = tuple(s if isinstance(s, StateVector) else StateVector(s) for s in self.states)
        if w.size == 0:
            raise EmptyEnsembleError("ensemble is empty")
        if w.size != len(states):
            raise DimensionError(f"{w.size} weights for {len(states)} states")
        if np.any(w <= 0) or np.any(w > 1 + NORM_TOL):
            raise ValidationError("ensemble weights must lie in (0, 1]")
        if abs(w.sum() - 1.0) > NORM_TOL:
            raise ValidationError(f"ensemble weights sum to {w.sum()!r}, not 1")
        if len({s.dim for s in states}) != 1:
            raise DimensionError("ensemble states have different dimensions")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "states", states)

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def num_qubits(self) -> int:
        return self.states[0].num_qubits

    def density_matrix(self) -> np.ndarray:
        psi = np.stack([s.amplitudes for s in self.states], axis=1)
        return (psi * self.weights) @ psi.conj().T


def _hermitian_input(m) -> np.ndarray:
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"matrix must be square, got {a.shape}")
    err = np.max(np.abs(a - a.conj().T), initial=0.0)
    if err > RANK_TOL:
        raise ValidationError(f"matrix is not Hermitian (max |M - M^H| = {err:.3g})")
    return np.array((a + a.conj().T) / 2, dtype=complex)


class _Breakdown(Exception):
    pass


def _factorize(m: np.ndarray, *, pivot: bool, drop_tol: float, rank_tol: float,
               order: Optional[np.ndarray] = None):
    """Right-looking outer-product Cholesky.

    With ``pivot`` the largest remaining diagonal is eliminated first and the
    loop stops once it falls below ``rank_tol * max(diag(M))``. Without it, a
    negligible pivot is accepted as a zero column only if the remaining Schur
    complement is still consistent with being PSD; anything else raises
    ``_Breakdown``. Computed off-diagonal entries below
    ``drop_tol * sqrt(M_jj)`` are zeroed before they update the complement.
    """
    d = m.shape[0]
    perm = np.arange(d) if order is None else np.asarray(order).copy()
    s = m[np.ix_(perm, perm)].copy()
    diag0 = m.diagonal().real[perm].copy()
    scale = max(float(diag0.max(initial=0.0)), 0.0)
    thresh = rank_tol * scale
    floor = (1e-15 * scale) ** 2
    L = np.zeros((d, d), dtype=complex)
    rank = 0
    for j in range(d):
        if pivot:
            rest = s.diagonal().real[j:]
            top = rest.max()
            ties = np.flatnonzero(rest == top) + j
            k = int(ties[np.argmin(perm[ties])])
            if k != j:
                s[[j, k], :] = s[[k, j], :]
                s[:, [j, k]] = s[:, [k, j]]
                L[[j, k], :] = L[[k, j], :]
                perm[[j, k]] = perm[[k, j]]
                diag0[[j, k]] = diag0[[k, j]]
        djj = s[j, j].real
        if djj <= thresh:
            rest = s.diagonal().real[j:]
            if rest.min() < -thresh:
                raise _Breakdown(f"negative pivot {rest.min():.3g} at step {j}")
            if pivot:
                break
            col = s[j + 1:, j]
            bound = thresh * np.clip(rest[1:], 0.0, None) + floor
            if np.any(np.abs(col) ** 2 > bound):
                raise _Breakdown(f"non-positive pivot {djj:.3g} with nonzero column at step {j}")
            continue
        ljj = np.sqrt(djj)
        col = s[j + 1:, j] / ljj
        if drop_tol > 0:
            col[np.abs(col) < drop_tol * np.sqrt(max(diag0[j], 0.0))] = 0
        L[j, j] = ljj
        L[j + 1:, j] = col
        s[j + 1:, j + 1:] -= np.outer(col, col.conj())
        rank += 1
    return L, perm, rank


def pivoted_cholesky(m, rank_tol: float = RANK_TOL, *, pivot: bool = True) -> CholeskyFactor:
    """Rank-revealing Cholesky ``M = (P L)(P L)^H`` with diagonal pivoting.

    Pivots are chosen by largest remaining diagonal, ties broken by lowest
    original index. ``L`` has ``rank`` nonzero columns followed by zero ones.
    ``pivot=False`` gives the plain (unpivoted) factorization.
    """
    a = _hermitian_input(m)
    try:
        L, perm, rank = _factorize(a, pivot=pivot, drop_tol=0.0, rank_tol=rank_tol)
    except _Breakdown as exc:
        raise IndefiniteMatrixError(f"matrix is not positive semidefinite: {exc}") from None
    return CholeskyFactor(L, perm, rank)


def fill_reducing_order(m) -> np.ndarray:
    """Columns by ascending nonzero count of ``M``, ties by index."""
    counts = np.count_nonzero(as_matrix(m), axis=0)
    return np.lexsort((np.arange(counts.size), counts))


def incomplete_cholesky(m, drop_tol: float = 0.0, *, reorder: bool = False,
                        rank_tol: float = RANK_TOL) -> CholeskyFactor:
    """Threshold-dropping incomplete Cholesky, ``M ~= L' L'^H``.

    Entries of a computed column below ``drop_tol * sqrt(M_jj)`` are dropped.
    ``drop_tol = 0`` reproduces ``pivoted_cholesky(M, pivot=False)``. On
    breakdown the factorization is retried on ``M + delta I`` with delta
    starting at 1e-12 and growing tenfold, at most eight times.
    """
    if drop_tol < 0:
        raise ValueError("drop tolerance must be nonnegative")
    a = _hermitian_input(m)
    order = fill_reducing_order(a) if reorder else None
    trail: list[float] = []
    shift = 0.0
    while True:
        shifted = a + shift * np.eye(a.shape[0]) if shift else a
        try:
            L, perm, rank = _factorize(shifted, pivot=False, drop_tol=drop_tol,
                                       rank_tol=rank_tol, order=order)
            return CholeskyFactor(L, perm, rank, float(drop_tol), shift, tuple(trail))
        except _Breakdown as exc:
            if len(trail) >= MAX_SHIFT_RETRIES:
                raise BreakdownError(
                    f"incomplete Cholesky broke down after shifts {trail}: {exc}", tuple(trail)
                ) from None
            shift = 10.0 ** (np.log10(SHIFT_START) + len(trail) * np.log10(SHIFT_GROWTH))
            trail.append(shift)


def prune_zero_columns(factor: CholeskyFactor) -> FactorMatrix:
    """``A = P L`` with all-zero columns removed."""
    pl = factor.unpermuted()
    keep = np.any(pl != 0, axis=0)
    return FactorMatrix(pl[:, keep], factor)


def ensemble_from_factor(a) -> Ensemble:
    """Weights from column norms of ``A``, states from the normalized columns.

    Weights are renormalized to sum to one, so the ensemble represents
    ``A A^H / Tr(A A^H)``.
    """
    A = a.A if isinstance(a, FactorMatrix) else np.asarray(a, dtype=complex)
    p_raw = np.sum(np.abs(A) ** 2, axis=0)
    keep = p_raw > NEGLIGIBLE_WEIGHT
    if not keep.any():
        raise EmptyEnsembleError("every column of the factor is negligible")
    A, p_raw = A[:, keep], p_raw[keep]
    cols = A / np.sqrt(p_raw)
    states = tuple(StateVector(c / np.linalg.norm(c)) for c in cols.T)
    return Ensemble(p_raw / p_raw.sum(), states)


def ensemble_from_eigh(rho, rank_tol: float = RANK_TOL) -> Ensemble:
    """Spectral ensemble ``{lambda_i, |lambda_i>}`` over eigenvalues above ``rank_tol``."""
    w, v = eigh(rho)
    keep = w > rank_tol
    if not keep.any():
        raise EmptyEnsembleError("no eigenvalue above the rank tolerance")
    w = w[keep]
    return Ensemble(w / w.sum(), tuple(StateVector(c) for c in v[:, keep].T))


def factorize_density(rho, drop_tol: float = 0.0, *, reorder: bool = False,
                      rank_tol: float = RANK_TOL):
    """Factor a density matrix: pivoted Cholesky when ``drop_tol == 0``, incomplete otherwise.

    Returns ``(factor, pruned FactorMatrix, ensemble)``.
    """
    if drop_tol == 0:
        factor = pivoted_cholesky(rho, rank_tol)
    else:
        factor = incomplete_cholesky(rho, drop_tol, reorder=reorder, rank_tol=rank_tol)
    fm = prune_zero_columns(factor)
    return factor, fm, ensemble_from_factor(fm)
