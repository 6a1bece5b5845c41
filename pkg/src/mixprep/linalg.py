"""Dense complex matrix kernels and the state containers shared by every module.

Qubit 0 is the most significant bit of a basis-state index throughout the package.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Union

import numpy as np

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
JACOBI_MAX_DIM = 64
NEGLIGIBLE_OFFDIAG = 1e-20


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class ValidationError(ValueError):
    """An input violates a mathematical invariant (norm, Hermiticity, ...)."""


def as_matrix(m) -> np.ndarray:
    if isinstance(m, DensityMatrix):
        return m.matrix
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    return a


def num_qubits_for(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise DimensionError(f"dimension {dim} is not a power of two")
    return n


@dataclass(frozen=True, eq=False)
class StateVector:
    """Unit-norm amplitude vector over ``num_qubits`` qubits."""

    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex).reshape(-1)
        num_qubits_for(a.size)
        if not np.all(np.isfinite(a)):
            raise ValidationError("state vector has non-finite amplitudes")
        norm2 = float(np.vdot(a, a).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise ValidationError(
                f"state vector violates the unit-norm invariant: sum |a|^2 = {norm2!r}"
            )
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def normalized(cls, amplitudes) -> "StateVector":
        a = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(a)
        if norm == 0:
            raise ValidationError("cannot normalize the zero vector")
        return cls(a / norm)

    @classmethod
    def basis(cls, index: int, num_qubits: int) -> "StateVector":
        a = np.zeros(1 << num_qubits, dtype=complex)
        a[index] = 1.0
        return cls(a)

    @property
    def num_qubits(self) -> int:
        return num_qubits_for(self.amplitudes.size)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, trace-one, positive semidefinite matrix over ``num_qubits`` qubits."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(as_matrix(self.matrix), dtype=complex)
        if m.shape[0] != m.shape[1]:
            raise DimensionError(f"density matrix must be square, got {m.shape}")
        num_qubits_for(m.shape[0])
        herm_err = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
        if herm_err > HERMITIAN_TOL:
            raise ValidationError(f"density matrix is not Hermitian (max |M - M^H| = {herm_err:.3g})")
        tr = np.trace(m).real
        if abs(tr - 1.0) > NORM_TOL:
            raise ValidationError(f"density matrix violates the trace-one invariant: trace = {tr!r}")
        m = (m + m.conj().T) / 2
        lam_min = eigvalsh(m)[-1]
        if lam_min < -PSD_TOL:
            raise ValidationError(f"density matrix is not PSD: min eigenvalue {lam_min:.3g}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def num_qubits(self) -> int:
        return num_qubits_for(self.matrix.shape[0])

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


MatrixLike = Union[np.ndarray, DensityMatrix]


class PsdReport(NamedTuple):
    hermitian: bool
    psd: bool
    min_eigenvalue: float


def hermitian_psd_check(m, tol: float = PSD_TOL) -> PsdReport:
    """Report Hermiticity and positive semidefiniteness of ``m``.

    The eigenvalue is taken from the Hermitian part, so it is meaningful even
    when ``hermitian`` is False; ``psd`` requires both properties.
    """
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"matrix must be square, got {a.shape}")
    hermitian = bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= tol)
    lam_min = float(eigvalsh((a + a.conj().T) / 2)[-1]) if a.size else 0.0
    return PsdReport(hermitian, hermitian and lam_min >= -tol, lam_min)


def _check_hermitian(a: np.ndarray, tol: float = PSD_TOL) -> np.ndarray:
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"matrix must be square, got {a.shape}")
    err = np.max(np.abs(a - a.conj().T), initial=0.0)
    if err > tol:
        raise ValidationError(f"matrix is not Hermitian (max |M - M^H| = {err:.3g})")
    return (a + a.conj().T) / 2


def _round_robin(m: int):
    """Yield the m-1 rounds of a circle-method tournament over m (even) players."""
    players = list(range(m))
    for _ in range(m - 1):
        yield [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        players = [players[0], players[-1]] + players[1:-1]


def jacobi_eigh(m, *, max_sweeps: int = 100, rel_tol: float = 1e-14):
    """Cyclic Jacobi eigensolver for a Hermitian matrix.

    Each round of a sweep applies a set of disjoint plane rotations at once
    (round-robin ordering), so a sweep still visits every off-diagonal pair
    exactly once. Iteration stops when the off-diagonal Frobenius mass drops
    below ``rel_tol * ||M||_F``.

    Returns eigenvalues in descending order and the matching eigenvectors as
    columns.
    """
    a = np.array(_check_hermitian(as_matrix(m)), dtype=complex)
    d = a.shape[0]
    v = np.eye(d, dtype=complex)
    scale = np.linalg.norm(a)
    if d > 1 and scale > 0:
        offdiag = ~np.eye(d, dtype=bool)
        rounds = []
        for pairs in _round_robin(d + d % 2):
            pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < d and q < d]
            rounds.append((np.array([p for p, _ in pairs]), np.array([q for _, q in pairs])))
        for _ in range(max_sweeps):
            if np.linalg.norm(a[offdiag]) <= rel_tol * scale:
                break
            for P, Q in rounds:
                apq = a[P, Q]
                mag = np.abs(apq)
                # entries this small cannot move the spectrum; rotating them only risks overflow
                active = mag > NEGLIGIBLE_OFFDIAG * scale
                if not active.any():
                    continue
                safe = np.where(active, mag, 1.0)
                tau = (a[Q, Q].real - a[P, P].real) / (2 * safe)
                t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
                c = np.where(active, 1 / np.hypot(1.0, t), 1.0)
                s = np.where(active, t * c, 0.0)
                ph = np.where(active, apq / safe, 1.0)
                e = ph.conj()
                cp, cq = a[:, P].copy(), a[:, Q].copy()
                a[:, P] = cp * c - cq * (s * e)
                a[:, Q] = cp * s + cq * (c * e)
                rp, rq = a[P, :].copy(), a[Q, :].copy()
                a[P, :] = c[:, None] * rp - (s * ph)[:, None] * rq
                a[Q, :] = s[:, None] * rp + (c * ph)[:, None] * rq
                a[P, Q] = 0
                a[Q, P] = 0
                vp, vq = v[:, P].copy(), v[:, Q].copy()
                v[:, P] = vp * c - vq * (s * e)
                v[:, Q] = vp * s + vq * (c * e)
    w = np.diag(a).real
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def eigh(m, method: str = "auto"):
    """Eigen-decomposition of a Hermitian matrix, eigenvalues descending.

    ``method`` is ``"jacobi"``, ``"lapack"`` or ``"auto"``; auto uses Jacobi up
    to dimension 64 and LAPACK above that.
    """
    a = _check_hermitian(as_matrix(m))
    if method == "auto":
        method = "jacobi" if a.shape[0] <= JACOBI_MAX_DIM else "lapack"
    if method == "jacobi":
        return jacobi_eigh(a)
    if method == "lapack":
        w, v = np.linalg.eigh(a)
        return w[::-1].copy(), v[:, ::-1].copy()
    raise ValueError(f"unknown eigensolver {method!r}")


def eigvalsh(m) -> np.ndarray:
    a = _check_hermitian(as_matrix(m))
    if a.shape[0] <= JACOBI_MAX_DIM:
        return jacobi_eigh(a)[0]
    return np.linalg.eigvalsh(a)[::-1].copy()


def frobenius_norm(m) -> float:
    a = as_matrix(m)
    return float(np.sqrt(np.sum(np.abs(a) ** 2)))


def trace_norm(m) -> float:
    """Sum of singular values.

    Hermitian inputs use ``sum |eigenvalue|``, which avoids the square-root
    amplification of round-off in ``A^H A`` for small singular values. Other
    inputs take square roots of the eigenvalues of the smaller Gram matrix,
    discarding those below the usual numerical-rank cutoff.
    """
    a = as_matrix(m)
    if a.size == 0:
        return 0.0
    if a.shape[0] == a.shape[1] and np.max(np.abs(a - a.conj().T)) <= 1e-14 * max(1.0, np.max(np.abs(a))):
        return float(np.sum(np.abs(eigvalsh(a))))
    gram = a.conj().T @ a if a.shape[1] <= a.shape[0] else a @ a.conj().T
    w = eigvalsh(gram)
    cutoff = max(a.shape) * np.finfo(float).eps * max(w[0], 0.0)
    return float(np.sum(np.sqrt(w[w > cutoff])))


def _same_dims(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")


def trace_distance(rho1: MatrixLike, rho2: MatrixLike) -> float:
    a, b = as_matrix(rho1), as_matrix(rho2)
    _same_dims(a, b)
    return 0.5 * trace_norm(a - b)


def psd_sqrt(m, tol: float = PSD_TOL) -> np.ndarray:
    """Principal square root of a PSD matrix; eigenvalues in [-tol, 0) clamp to zero."""
    w, v = eigh(m)
    if w.size and w[-1] < -tol:
        raise ValidationError(f"matrix is not PSD: min eigenvalue {w[-1]:.3g}")
    r = np.sqrt(np.clip(w, 0.0, None))
    return (v * r) @ v.conj().T


def fidelity(rho1: MatrixLike, rho2: MatrixLike) -> float:
    """Squared Uhlmann fidelity ``(Tr sqrt(sqrt(r1) r2 sqrt(r1)))**2``.

    The trace is evaluated as the nuclear norm of ``sqrt(r1) sqrt(r2)``, which
    is the same quantity without a second matrix square root.
    """
    a, b = as_matrix(rho1), as_matrix(rho2)
    _same_dims(a, b)
    sa, sb = psd_sqrt(a), psd_sqrt(b)
    s = np.linalg.svd(sa @ sb, compute_uv=False)
    return float(min(np.sum(s) ** 2, 1.0))


def state_fidelity(psi, phi) -> float:
    a = np.asarray(psi, dtype=complex).reshape(-1)
    b = np.asarray(phi, dtype=complex).reshape(-1)
    _same_dims(a, b)
    return float(min(abs(np.vdot(a, b)) ** 2, 1.0))


def partial_trace(rho: MatrixLike, keep: Iterable[int]) -> np.ndarray:
    """Reduced density matrix on the qubits in ``keep`` (returned in ascending order)."""
    a = as_matrix(rho)
    n = num_qubits_for(a.shape[0])
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("keep set must not be empty")
    if keep[0] < 0 or keep[-1] >= n:
        raise DimensionError(f"keep indices {keep} out of range for {n} qubits")
    t = a.reshape((2,) * (2 * n))
    letters = list(string.ascii_letters[:2 * n])
    rows, cols = letters[:n], letters[n:]
    for q in range(n):
        if q not in keep:
            cols[q] = rows[q]
    out = "".join(rows[q] for q in keep) + "".join(cols[q] for q in keep)
    reduced = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    k = 1 << len(keep)
    return reduced.reshape(k, k)
