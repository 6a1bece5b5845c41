"""Pure-state preparation from |0...0> with a ladder of uniformly controlled RY/RZ rotations.

Level ``k`` targets qubit ``k`` and is controlled by qubits ``0..k-1``. Its
RY angles split each amplitude block between the two halves of the next
qubit; its RZ angles set the relative phase of those halves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .circuit import UCR, ZERO_ANGLE, Circuit, Controlled
from .linalg import StateVector, ValidationError

SAME_ANGLE = 1e-12


@dataclass(frozen=True, eq=False)
class AngleTree:
    """Per-level angles; ``live[k][a]`` is False where the branch ``a`` has zero amplitude."""

    theta_y: tuple[np.ndarray, ...]
    phi_z: tuple[np.ndarray, ...]
    live: tuple[np.ndarray, ...]

    @property
    def num_qubits(self) -> int:
        return len(self.theta_y)


@dataclass(frozen=True)
class PhaseLedger:
    """The ladder maps |0...0> to ``exp(1j * global_phase) * psi``."""

    global_phase: float = 0.0


def phase_tree(phases: np.ndarray, defined: np.ndarray):
    """RZ angles per level reproducing leaf ``phases`` up to one global phase.

    Each node carries the mean phase of its children and rotates them apart by
    their difference, taken in (-pi, pi]. Leaves that are not ``defined``
    (zero amplitude) inherit the sibling's phase, so they never cost a
    rotation. Returns the per-level angles and the root phase.
    """
    n = int(phases.size).bit_length() - 1
    p = np.where(defined, phases, 0.0).astype(float)
    d = np.asarray(defined, dtype=bool)
    levels = [None] * n
    for k in range(n - 1, -1, -1):
        p0, p1 = p[0::2], p[1::2]
        d0, d1 = d[0::2], d[1::2]
        both = d0 & d1
        # leaf phases only matter mod 2 pi; a wrapped difference gives equivalent
        # branches identical angles, which lets the control reduction see them
        diff = np.where(both, np.angle(np.exp(1j * (p1 - p0))), 0.0)
        levels[k] = diff
        p = np.where(both, p0 + diff / 2, np.where(d0, p0, p1))
        d = d0 | d1
    return levels, float(p[0])


def pure_angles(psi) -> tuple[AngleTree, PhaseLedger]:
    a = psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi, dtype=complex).reshape(-1)
    if not np.any(a):
        raise ValidationError("cannot prepare the zero vector")
    n = int(a.size).bit_length() - 1
    if 1 << n != a.size:
        raise ValidationError(f"state length {a.size} is not a power of two")
    mag = np.abs(a)
    nonzero = mag > 0
    phi_levels, root = phase_tree(np.angle(a), nonzero)
    thetas, lives = [None] * n, [None] * n
    norms = mag
    for k in range(n - 1, -1, -1):
        n0, n1 = norms[0::2], norms[1::2]
        thetas[k] = 2 * np.arctan2(n1, n0)
        norms = np.hypot(n0, n1)
        lives[k] = norms > 0
    return AngleTree(tuple(thetas), tuple(phi_levels), tuple(lives)), PhaseLedger(-root)


def reduce_controls(angle_sets: Sequence[np.ndarray], live: np.ndarray, k: int):
    """Drop controls the angles do not depend on, treating dead branches as free.

    Returns the kept control positions (0 = most significant) and the reduced
    angle arrays. A control is dropped when every pair of live branches that
    agree on the remaining kept bits also agree on all angles.
    """
    idx = np.arange(1 << k)
    keep = list(range(k))
    live_idx = idx[live]

    def key(kept):
        out = np.zeros(live_idx.size, dtype=np.int64)
        for pos in kept:
            out = (out << 1) | ((live_idx >> (k - 1 - pos)) & 1)
        return out

    def groups(kept):
        _, first, inverse = np.unique(key(kept), return_index=True, return_inverse=True)
        return first, inverse

    def consistent(kept):
        first, inverse = groups(kept)
        for angles in angle_sets:
            vals = angles[live_idx]
            if np.any(np.abs(vals - vals[first][inverse]) > SAME_ANGLE):
                return False
        return True

    for pos in range(k):
        trial = [p for p in keep if p != pos]
        if consistent(trial):
            keep = trial
    first, _ = groups(keep)
    slots = key(keep)[first]
    reduced = []
    for angles in angle_sets:
        r = np.zeros(1 << len(keep))
        r[slots] = angles[live_idx][first]
        reduced.append(r)
    return keep, reduced


def _is_zero(angles) -> bool:
    return bool(np.all(np.abs(angles) <= ZERO_ANGLE))


def ladder_gates(tree: AngleTree, qubits: Sequence[int], *, skip_zeros: bool = True,
                 with_z: bool = True) -> list[UCR]:
    """UCR gates F^0[RY], F^0[RZ], F^1[RY], ... on ``qubits`` (qubit 0 of the state first).

    With ``skip_zeros`` each level first drops controls its angles do not
    depend on, then omits UCRs whose angles are all zero.
    """
    qubits = list(qubits)
    gates: list[UCR] = []
    for k in range(tree.num_qubits):
        ys, zs = tree.theta_y[k], tree.phi_z[k]
        sets = [ys, zs] if with_z else [ys]
        controls = qubits[:k]
        if skip_zeros:
            kept, sets = reduce_controls(sets, tree.live[k], k)
            controls = [qubits[p] for p in kept]
        for axis, angles in zip("yz", sets):
            if skip_zeros and _is_zero(angles):
                continue
            gates.append(UCR(axis, tuple(controls), qubits[k], tuple(angles)))
    return gates


def pure_gates(psi, qubits: Optional[Sequence[int]] = None, skip_zeros: bool = True):
    """The preparation ladder for ``psi`` placed on ``qubits``, plus its phase ledger."""
    tree, ledger = pure_angles(psi)
    qubits = list(range(tree.num_qubits)) if qubits is None else list(qubits)
    if len(qubits) != tree.num_qubits:
        raise ValueError(f"{tree.num_qubits}-qubit state placed on {len(qubits)} qubits")
    return ladder_gates(tree, qubits, skip_zeros=skip_zeros), ledger


def synth_pure(psi, skip_zeros: bool = True) -> Circuit:
    """Circuit preparing ``psi`` from |0...0> up to a global phase."""
    tree, ledger = pure_angles(psi)
    n = tree.num_qubits
    gates = ladder_gates(tree, range(n), skip_zeros=skip_zeros)
    return Circuit(n, tuple(gates),
                   {"target": list(range(n)), "global_phase": ledger.global_phase,
                    "registers_static": n, "registers_dynamic": n})


def diagonal_phase_gates(phases: np.ndarray, qubits: Sequence[int], skip_zeros: bool = True) -> list[UCR]:
    """RZ-UCR ladder realizing ``diag(exp(1j * phases))`` on ``qubits`` up to global phase."""
    levels, _ = phase_tree(np.asarray(phases, dtype=float), np.ones(len(phases), dtype=bool))
    qubits = list(qubits)
    gates = []
    for k, angles in enumerate(levels):
        controls = qubits[:k]
        if skip_zeros:
            kept, (angles,) = reduce_controls([angles], np.ones(1 << k, bool), k)
            controls = [qubits[p] for p in kept]
            if _is_zero(angles):
                continue
        gates.append(UCR("z", tuple(controls), qubits[k], tuple(angles)))
    return gates


def synth_pure_as_controlled(psi, controls: Sequence[tuple[int, bool]],
                             qubits: Optional[Sequence[int]] = None, *,
                             phase_fix: bool = True, skip_zeros: bool = True) -> list:
    """The preparation ladder for ``psi`` conditioned on a control pattern.

    ``controls`` are (qubit, polarity) pairs, polarity True meaning |1>.
    ``qubits`` places the state (default ``0..n-1``). With ``phase_fix`` the
    ladder's global phase becomes a relative phase on the control pattern,
    emitted as an RZ ladder on the control qubits, so the active branch
    receives exactly ``psi``.
    """
    tree, ledger = pure_angles(psi)
    n = tree.num_qubits
    qubits = list(range(n)) if qubits is None else list(qubits)
    if len(qubits) != n:
        raise ValueError(f"{n}-qubit state placed on {len(qubits)} qubits")
    controls = [(int(q), bool(p)) for q, p in controls]
    if {q for q, _ in controls} & set(qubits):
        raise ValueError("control qubits overlap the target register")
    body = ladder_gates(tree, qubits, skip_zeros=skip_zeros)
    if not controls:
        return body
    gates: list = [Controlled(tuple(body), tuple(controls))] if body else []
    if phase_fix and abs(ledger.global_phase) > ZERO_ANGLE:
        m = len(controls)
        pattern = int("".join("1" if p else "0" for _, p in controls), 2)
        phases = np.zeros(1 << m)
        phases[pattern] = -ledger.global_phase
        gates.extend(diagonal_phase_gates(phases, [q for q, _ in controls], skip_zeros))
    return gates
