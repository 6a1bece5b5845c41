"""Mixed-state preparation: the CSWAP mixture ladder and the ancilla purification.

Mixture layout (static form): the main register is qubits ``0..n-1``; step
``i >= 1`` uses a fresh register ``b..b+n-1`` and an ancilla ``b+n`` with
``b = n + (i-1)(n+1)``. Everything except the main register is trash.

Purification layout: targets ``0..n-1``, ancillas ``n..n+m-1`` with
``m = ceil(log2 l)``. Ancilla pattern ``i`` is the big-endian binary of ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import time
from typing import Optional, Sequence

import numpy as np

from .cholesky import CholeskyFactor, Ensemble, FactorMatrix, factorize_density
from .circuit import UCR, ZERO_ANGLE, Circuit, Controlled, Gate, GateCountReport, as_ucr, gate_counts, ry
from .linalg import NORM_TOL, DensityMatrix, ValidationError, fidelity, trace_distance
from .puresynth import (
    diagonal_phase_gates,
    ladder_gates,
    pure_angles,
    pure_gates,
    reduce_controls,
    synth_pure_as_controlled,
)
from .sim import SimulationLimitError, verify

METHODS = ("mixture", "purification")


class CircuitShapeError(ValueError):
    """The circuit was not produced by :func:`synth_purification`."""


def ancilla_count(ell: int) -> int:
    return int(ell - 1).bit_length() if ell > 1 else 0


@dataclass(frozen=True, eq=False)
class MixedSynthesisPlan:
    method: str
    ensemble: Ensemble
    ancilla_count: int = 0
    weight_angles: tuple[float, ...] = ()
    target: tuple[int, ...] = ()
    trash: tuple[int, ...] = ()

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.method == "purification" and (1 << self.ancilla_count) < self.ensemble.size:
            raise ValueError(f"{self.ancilla_count} ancillas cannot index {self.ensemble.size} states")

    @classmethod
    def for_ensemble(cls, e: Ensemble, method: str) -> "MixedSynthesisPlan":
        n, ell = e.num_qubits, e.size
        if method == "mixture":
            return cls(method, e, 0, tuple(mixture_weight_angles(e.weights)),
                       tuple(range(n)), tuple(range(n, ell * (n + 1) - 1)))
        m = ancilla_count(ell)
        return cls(method, e, m, (), tuple(range(n)), tuple(range(n, n + m)))


def _check_weights(p) -> np.ndarray:
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size == 0:
        raise ValidationError("weight list is empty")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValidationError("weights must be finite and nonnegative")
    if abs(p.sum() - 1) > NORM_TOL:
        raise ValidationError(f"weights sum to {p.sum()!r}, not 1")
    return p


def mixture_weight_angles(p) -> np.ndarray:
    """``alpha_i = arctan(sqrt(p_i / sum_{j<i} p_j))`` for ``i = 1..l-1``."""
    p = _check_weights(p)
    if np.any(p <= 0):
        raise ValidationError("mixture weights must be strictly positive")
    return _mixing_angles(p)


def _mixing_angles(p: np.ndarray) -> np.ndarray:
    # atan2 form; also defined when an earlier prefix sum is zero
    prefix = np.cumsum(p)[:-1]
    return np.arctan2(np.sqrt(p[1:]), np.sqrt(prefix))


def mixture_layout(n: int, ell: int) -> list[tuple[list[int], int]]:
    """``(register, ancilla)`` for each step ``i = 1..l-1``."""
    out = []
    for i in range(1, ell):
        b = n + (i - 1) * (n + 1)
        out.append((list(range(b, b + n)), b + n))
    return out


def _mixture_metadata(n: int, ell: int) -> dict:
    return {
        "method": "mixture",
        "target": list(range(n)),
        "trash": list(range(n, ell * (n + 1) - 1)),
        "registers_static": ell * (n + 1) - 1,
        "registers_dynamic": 2 * n + 1 if ell > 1 else n,
    }


def mixing_circuit(n: int, weights) -> Circuit:
    """The CSWAP ladder alone, acting on registers that already hold the component states.

    With two weights ``(p, 1 - p)`` this is the two-state mixer: the main
    register ends in ``p rho_0 + (1 - p) rho_1``. Zero weights are allowed.
    """
    p = _check_weights(weights)
    ell = p.size
    gates: list = []
    for (reg, anc), alpha in zip(mixture_layout(n, ell), _mixing_angles(p)):
        gates.append(ry(anc, 2 * alpha))
        gates.extend(Gate("cswap", (anc, j, r)) for j, r in zip(range(n), reg))
    return Circuit(ell * (n + 1) - 1 if ell > 1 else n, tuple(gates), _mixture_metadata(n, ell))


def synth_mixture(e: Ensemble, skip_zeros: bool = True) -> tuple[Circuit, GateCountReport]:
    """Static mixture circuit: prepare each component on its own register, then mix."""
    n, ell = e.num_qubits, e.size
    gates, _ = pure_gates(e.states[0], range(n), skip_zeros)
    gates = list(gates)
    angles = mixture_weight_angles(e.weights)
    for (reg, anc), alpha, psi in zip(mixture_layout(n, ell), angles, e.states[1:]):
        gates.extend(pure_gates(psi, reg, skip_zeros)[0])
        gates.append(ry(anc, 2 * alpha))
        gates.extend(Gate("cswap", (anc, j, r)) for j, r in zip(range(n), reg))
    c = Circuit(ell * (n + 1) - 1 if ell > 1 else n, tuple(gates), _mixture_metadata(n, ell))
    return c, gate_counts(c, skip_zeros)


def p_state_amplitudes(p, m: int) -> np.ndarray:
    p = _check_weights(p)
    if (1 << m) < p.size:
        raise ValueError(f"{m} qubits cannot hold {p.size} weights")
    amp = np.zeros(1 << m)
    amp[:p.size] = np.sqrt(p)
    return amp


def synth_p_state(p, m: int, qubits: Optional[Sequence[int]] = None, skip_zeros: bool = True) -> Circuit:
    """``sum_i sqrt(p_i) |i>`` on ``m`` qubits using RY-axis UCRs only.

    ``qubits`` places the register inside a wider circuit (the circuit width
    is then ``max(qubits) + 1``).
    """
    amp = p_state_amplitudes(p, m)
    qubits = list(range(m)) if qubits is None else list(qubits)
    if len(qubits) != m:
        raise ValueError(f"{m}-qubit register placed on {len(qubits)} qubits")
    if m == 0:
        return Circuit(0)
    tree, _ = pure_angles(amp)
    gates = ladder_gates(tree, qubits, skip_zeros=skip_zeros, with_z=False)
    return Circuit(max(qubits) + 1, tuple(gates), {"target": qubits})


def _pattern_controls(i: int, ancillas: Sequence[int]) -> list[tuple[int, bool]]:
    m = len(ancillas)
    return [(q, bool((i >> (m - 1 - j)) & 1)) for j, q in enumerate(ancillas)]


def synth_purification(e: Ensemble, phase_fix: bool = True,
                       skip_zeros: bool = True) -> tuple[Circuit, GateCountReport]:
    """``sum_i sqrt(p_i) |psi_i>|i>``: ancilla weights, then one controlled ladder per state.

    Tracing out the ancillas leaves ``sum_i p_i |psi_i><psi_i|``. With
    ``phase_fix`` every branch carries exactly ``|psi_i>``, so the full output
    matches the purification up to a single global phase.
    """
    n, ell = e.num_qubits, e.size
    m = ancilla_count(ell)
    targets = list(range(n))
    ancillas = list(range(n, n + m))
    gates = list(synth_p_state(e.weights, m, ancillas, skip_zeros).gates)
    for i, psi in enumerate(e.states):
        if m == 0:
            gates.extend(pure_gates(psi, targets, skip_zeros)[0])
        else:
            gates.extend(synth_pure_as_controlled(psi, _pattern_controls(i, ancillas), targets,
                                                  phase_fix=phase_fix, skip_zeros=skip_zeros))
    meta = {
        "method": "purification",
        "target": targets,
        "trash": ancillas,
        "ancillas": ancillas,
        "ancilla_live": [i < ell for i in range(1 << m)],
        "registers_static": n + m,
        "registers_dynamic": n + m,
    }
    c = Circuit(n + m, tuple(gates), meta)
    return c, gate_counts(c, skip_zeros)


def purified_state(e: Ensemble) -> np.ndarray:
    """Reference vector ``sum_i sqrt(p_i) |psi_i> (x) |i>`` in the purification layout."""
    m = ancilla_count(e.size)
    out = np.zeros(e.states[0].dim << m, dtype=complex)
    for i, (p, psi) in enumerate(zip(e.weights, e.states)):
        anc = np.zeros(1 << m)
        anc[i] = 1
        out += np.sqrt(p) * np.kron(psi.amplitudes, anc)
    return out


def _z_diagonal(g: UCR, qubits: Sequence[int]) -> np.ndarray:
    """Phases ``diag`` of an RZ-UCR acting on (a subset of) ``qubits``."""
    m = len(qubits)
    pos = {q: j for j, q in enumerate(qubits)}
    idx = np.arange(1 << m)

    def bit(q):
        return (idx >> (m - 1 - pos[q])) & 1

    sel = np.zeros(1 << m, dtype=np.int64)
    for q in g.controls:
        sel = (sel << 1) | bit(q)
    angles = np.asarray(g.angles)[sel]
    return np.where(bit(g.target), angles / 2, -angles / 2)


def merge_purification_ucr(c: Circuit, skip_zeros: bool = True) -> Circuit:
    """Merge the per-state controlled ladders of a purification into one UCR ladder.

    Level ``k`` becomes a single RY-UCR and RZ-UCR on target ``k`` controlled by
    the ancillas and targets ``0..k-1``; the angle for ancilla pattern ``i``
    and prefix ``a`` sits at index ``i 2^k + a``. All branch-phase gates
    combine into one diagonal on the ancillas. The controlled blocks act on
    disjoint ancilla patterns, so they commute and the merge is exact.
    """
    meta = c.metadata
    if meta.get("method") != "purification" or "ancillas" not in meta:
        raise CircuitShapeError("unrecognized circuit shape: not a purification circuit")
    targets, ancillas = list(meta["target"]), list(meta["ancillas"])
    n, m = len(targets), len(ancillas)
    if m == 0:
        return c
    anc_set, tpos = set(ancillas), {q: k for k, q in enumerate(targets)}
    prep: list = []
    phases = np.zeros(1 << m)
    ys = [np.zeros(1 << (m + k)) for k in range(n)]
    zs = [np.zeros(1 << (m + k)) for k in range(n)]
    started = has_phase = False
    for g in c.gates:
        if isinstance(g, Controlled):
            started = True
            patterns = _matching_patterns(g.controls, ancillas)
            for b in g.body:
                u = as_ucr(b)
                if u.target not in tpos or any(q not in tpos for q in u.controls):
                    raise CircuitShapeError(f"controlled body gate {b} leaves the target register")
                k = tpos[u.target]
                if any(tpos[q] >= k for q in u.controls):
                    raise CircuitShapeError(f"controlled body gate {b} is not a ladder level")
                full = _expand_prefix(u, [targets[j] for j in range(k)])
                dest = ys[k] if u.axis == "y" else zs[k]
                for i in patterns:
                    dest[i << k:(i + 1) << k] += full
        elif isinstance(g, UCR) and set(g.qubits) <= anc_set:
            if g.axis == "y" and not started:
                prep.append(g)
            elif g.axis == "z":
                phases += _z_diagonal(g, ancillas)
                has_phase = True
            else:
                raise CircuitShapeError(f"unexpected ancilla gate {g} after the controlled blocks")
        else:
            raise CircuitShapeError(f"unexpected gate {g} in a purification circuit")

    # ancilla patterns with zero weight never occur, so their angles are free
    alive = np.asarray(meta.get("ancilla_live", [True] * (1 << m)), dtype=bool)
    gates = list(prep)
    if has_phase:
        gates.extend(diagonal_phase_gates(phases, ancillas, skip_zeros))
    order = ancillas + targets
    for k in range(n):
        controls = order[:m + k]
        sets = [ys[k], zs[k]]
        if skip_zeros:
            live = np.repeat(alive, 1 << k)
            kept, sets = reduce_controls(sets, live, m + k)
            controls = [order[p] for p in kept]
        for axis, angles in zip("yz", sets):
            if skip_zeros and np.all(np.abs(angles) <= ZERO_ANGLE):
                continue
            gates.append(UCR(axis, tuple(controls), targets[k], tuple(angles)))
    out = c.with_gates(gates)
    out.metadata["merged"] = True
    return out


def _matching_patterns(controls, ancillas: Sequence[int]) -> np.ndarray:
    m = len(ancillas)
    pos = {q: j for j, q in enumerate(ancillas)}
    idx = np.arange(1 << m)
    ok = np.ones(1 << m, dtype=bool)
    for q, positive in controls:
        if q not in pos:
            raise CircuitShapeError(f"control qubit {q} is not an ancilla")
        ok &= ((idx >> (m - 1 - pos[q])) & 1) == int(positive)
    return idx[ok]


def _expand_prefix(u: UCR, prefix: Sequence[int]) -> np.ndarray:
    """Angles of ``u`` over all ``2^k`` prefix patterns (controls it ignores are replicated)."""
    k = len(prefix)
    pos = {q: j for j, q in enumerate(prefix)}
    idx = np.arange(1 << k)
    sel = np.zeros(1 << k, dtype=np.int64)
    for q in u.controls:
        sel = (sel << 1) | ((idx >> (k - 1 - pos[q])) & 1)
    return np.asarray(u.angles)[sel]


@dataclass(frozen=True, eq=False)
class DensitySynthesis:
    """Result of :func:`synth_from_density`.

    ``trace_distance`` and ``fidelity`` compare the input ``rho`` with the
    simulated output; ``synthesis_fidelity`` compares the output with the
    factored approximation ``rho' = A A^H / Tr(A A^H)`` the circuit was built
    for. Simulated fields are None when the circuit is too wide to simulate.
    ``approx_trace_distance`` and ``approx_fidelity`` compare ``rho`` with
    ``rho'`` directly and need no simulation.
    """

    circuit: Circuit
    counts: GateCountReport
    plan: MixedSynthesisPlan
    factor: CholeskyFactor
    factor_matrix: FactorMatrix
    approx_trace_distance: float
    approx_fidelity: float
    trace_distance: Optional[float] = None
    fidelity: Optional[float] = None
    synthesis_fidelity: Optional[float] = None
    timings: dict = field(default_factory=dict)

    @property
    def verified(self) -> bool:
        return self.trace_distance is not None


def synth_from_density(rho, method: str = "purification", drop_tol: float = 0.0, *,
                       phase_fix: bool = True, skip_zeros: bool = True, reorder: bool = False,
                       merge: bool = True, simulate: bool = True) -> DensitySynthesis:
    """Factor ``rho`` (pivoted Cholesky if ``drop_tol == 0``, incomplete otherwise) and synthesize.

    ``merge`` applies :func:`merge_purification_ucr` to purification circuits.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    rho = rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)
    timings = {}
    t0 = time.perf_counter()
    factor, fm, ens = factorize_density(rho.matrix, drop_tol, reorder=reorder)
    approx = ens.density_matrix()
    timings["factorize"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    if method == "mixture":
        c, counts = synth_mixture(ens, skip_zeros)
    else:
        c, counts = synth_purification(ens, phase_fix, skip_zeros)
        if merge:
            c = merge_purification_ucr(c, skip_zeros)
            counts = gate_counts(c, skip_zeros)
    timings["synthesize"] = time.perf_counter() - t0
    sim = {}
    if simulate:
        t0 = time.perf_counter()
        try:
            res = verify(rho, c, c.metadata.get("trash", ()))
            sim = {"trace_distance": res.trace_distance, "fidelity": res.fidelity,
                   "synthesis_fidelity": fidelity(approx, res.traced)}
        except SimulationLimitError:
            pass
        timings["verify"] = time.perf_counter() - t0
    plan = MixedSynthesisPlan.for_ensemble(ens, method)
    return DensitySynthesis(c, counts, plan, factor, fm, trace_distance(rho.matrix, approx),
                            fidelity(rho.matrix, approx), timings=timings, **sim)
