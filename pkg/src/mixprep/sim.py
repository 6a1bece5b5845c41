"""State-vector and density-matrix simulation of circuits; the verification oracle.

States are kept as tensors with one length-2 axis per qubit (qubit 0 first), so
a gate is a batched 2x2 product along its target axis, one batch entry per
control pattern.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .circuit import UCR, Circuit, Controlled, Gate, Op, expand_controlled
from .linalg import (
    DensityMatrix,
    DimensionError,
    StateVector,
    as_matrix,
    fidelity,
    partial_trace,
    state_fidelity,
    trace_distance,
)

MAX_PURE_QUBITS = 24
MAX_DENSITY_QUBITS = 12

_I = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_FIXED = {
    "x": _X,
    "h": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "t": np.diag([1, np.exp(1j * np.pi / 4)]),
    "tdg": np.diag([1, np.exp(-1j * np.pi / 4)]),
    "s": np.diag([1, 1j]),
}


class SimulationLimitError(ValueError):
    """The circuit is too wide for the requested simulation."""


def rotation_matrix(axis: str, angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    if axis == "y":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if axis == "z":
        return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])
    raise ValueError(f"unsupported rotation axis {axis!r}")


def _kernels(g: Op):
    """Yield (controls, target, stacked 2x2 matrices) equivalent to ``g``."""
    if isinstance(g, UCR):
        yield g.controls, g.target, np.stack([rotation_matrix(g.axis, a) for a in g.angles])
    elif isinstance(g, Controlled):
        for u in expand_controlled(g):
            yield from _kernels(u)
    elif g.name in ("ry", "rz"):
        yield (), g.qubits[0], rotation_matrix(g.name[1], g.param)[None]
    elif g.name in _FIXED:
        yield (), g.qubits[0], _FIXED[g.name][None]
    elif g.name == "cx":
        yield g.qubits[:1], g.qubits[1], np.stack([_I, _X])
    elif g.name == "cswap":
        c, a, b = g.qubits
        yield (b,), a, np.stack([_I, _X])
        yield (c, a), b, np.stack([_I, _I, _I, _X])
        yield (b,), a, np.stack([_I, _X])
    else:
        raise ValueError(f"cannot simulate {g}")


def _apply(t: np.ndarray, axes: Sequence[int], mats: np.ndarray) -> np.ndarray:
    """Apply multiplexed 2x2 ``mats`` on tensor axes ``axes`` = (controls..., target)."""
    k = len(axes) - 1
    front = list(range(k + 1))
    moved = np.moveaxis(t, list(axes), front)
    shape = moved.shape
    out = np.einsum("cij,cjr->cir", mats, moved.reshape(1 << k, 2, -1))
    return np.moveaxis(out.reshape(shape), front, list(axes))


def apply_ops(t: np.ndarray, ops: Iterable[Op], num_qubits: int, *,
              offset: int = 0, conj: bool = False, qubit_map=None) -> np.ndarray:
    """Apply gates to the qubit axes ``offset .. offset+num_qubits-1`` of ``t``."""
    for g in ops:
        for controls, target, mats in _kernels(g):
            qs = list(controls) + [target]
            if qubit_map is not None:
                qs = [qubit_map[q] for q in qs]
            if any(q >= num_qubits for q in qs):
                raise DimensionError(f"{g} acts outside {num_qubits} qubits")
            t = _apply(t, [offset + q for q in qs], mats.conj() if conj else mats)
    return t


def _zero_state(n: int) -> np.ndarray:
    v = np.zeros(1 << n, dtype=complex)
    v[0] = 1
    return v


def simulate_statevector(c: Circuit, init=None) -> np.ndarray:
    n = c.num_qubits
    if n > MAX_PURE_QUBITS:
        raise SimulationLimitError(f"state-vector simulation supports {MAX_PURE_QUBITS} qubits, got {n}")
    v = _zero_state(n) if init is None else np.asarray(init, dtype=complex).reshape(-1)
    if v.size != 1 << n:
        raise DimensionError(f"initial state has {v.size} amplitudes for a {n}-qubit circuit")
    return apply_ops(v.reshape((2,) * n), c.gates, n).reshape(-1)


def run_pure(c: Circuit, init: Optional[Union[StateVector, np.ndarray]] = None) -> StateVector:
    return StateVector(simulate_statevector(c, init))


def _evolve_density(m: np.ndarray, ops: Iterable[Op], n: int, qubit_map=None) -> np.ndarray:
    t = m.reshape((2,) * (2 * n))
    for g in ops:
        t = apply_ops(t, [g], n, qubit_map=qubit_map)
        t = apply_ops(t, [g], n, offset=n, conj=True, qubit_map=qubit_map)
    return t.reshape(1 << n, 1 << n)


def run_density(c: Circuit, init=None) -> DensityMatrix:
    """``rho -> U rho U^H`` gate by gate, acting on rows and columns directly."""
    n = c.num_qubits
    if n > MAX_DENSITY_QUBITS:
        raise SimulationLimitError(f"density simulation supports {MAX_DENSITY_QUBITS} qubits, got {n}")
    if init is None:
        v = _zero_state(n)
        m = np.outer(v, v)
    else:
        m = np.array(as_matrix(init), dtype=complex)
    if m.shape != (1 << n, 1 << n):
        raise DimensionError(f"initial density matrix {m.shape} does not fit {n} qubits")
    return DensityMatrix(_evolve_density(m, c.gates, n))


def run_density_traced(c: Circuit, trash: Iterable[int]) -> np.ndarray:
    """Density simulation from |0...0> that only tracks live qubits.

    A qubit joins (as |0><0|) at its first gate, and a trash qubit is traced
    out right after its last gate; unused qubits never enter. The result is the
    reduced state on the non-trash qubits in ascending order, identical to
    simulating the whole register and tracing at the end.
    """
    trash = set(trash)
    last_use: dict[int, int] = {}
    for i, g in enumerate(c.gates):
        for q in g.qubits:
            last_use[q] = i
    active: list[int] = []
    m = np.ones((1, 1), dtype=complex)
    zero = np.array([[1, 0], [0, 0]], dtype=complex)

    def add(q):
        nonlocal m
        if len(active) >= MAX_DENSITY_QUBITS:
            raise SimulationLimitError(
                f"more than {MAX_DENSITY_QUBITS} simultaneously live qubits"
            )
        active.append(q)
        m = np.kron(m, zero)

    for i, g in enumerate(c.gates):
        for q in g.qubits:
            if q not in active:
                add(q)
        pos = {q: j for j, q in enumerate(active)}
        m = _evolve_density(m, [g], len(active), qubit_map=pos)
        done = [q for q in g.qubits if q in trash and last_use[q] == i]
        if done:
            keep = [j for j, q in enumerate(active) if q not in done]
            m = partial_trace(m, keep) if keep else np.ones((1, 1), dtype=complex) * np.trace(m)
            active = [active[j] for j in keep]
    for q in range(c.num_qubits):
        if q not in trash and q not in active:
            add(q)
    drop = [j for j, q in enumerate(active) if q in trash]
    if drop:
        m = partial_trace(m, [j for j in range(len(active)) if j not in drop])
        active = [q for q in active if q not in trash]
    order = np.argsort(active)
    n = len(active)
    t = m.reshape((2,) * (2 * n))
    t = np.transpose(t, list(order) + [n + j for j in order])
    return t.reshape(1 << n, 1 << n)


@dataclass(frozen=True, eq=False)
class SimResult:
    traced: np.ndarray
    fidelity: float
    trace_distance: float
    pure_out: Optional[np.ndarray] = None


def verify(target, c: Circuit, trash: Iterable[int] = ()) -> SimResult:
    """Simulate ``c`` from |0...0>, trace out ``trash`` and compare with ``target``.

    ``target`` is a StateVector, a DensityMatrix or a raw array of either
    shape. Narrow circuits go through the state-vector simulator; wide ones
    (e.g. static mixture ladders) through the live-qubit density simulator.
    """
    trash = sorted(set(trash))
    if any(q < 0 or q >= c.num_qubits for q in trash):
        raise DimensionError(f"trash qubits {trash} outside a {c.num_qubits}-qubit circuit")
    keep = [q for q in range(c.num_qubits) if q not in trash]
    if not keep:
        raise DimensionError("every qubit is marked as trash")
    if isinstance(target, StateVector):
        tvec, tmat = target.amplitudes, None
    elif isinstance(target, DensityMatrix):
        tvec, tmat = None, target.matrix
    else:
        arr = np.asarray(target, dtype=complex)
        tvec, tmat = (arr.reshape(-1), None) if arr.ndim == 1 else (None, arr)
    tdim = tvec.size if tvec is not None else tmat.shape[0]
    if tdim != 1 << len(keep):
        raise DimensionError(
            f"target has dimension {tdim} but {len(keep)} qubits remain after tracing out {trash}"
        )

    pure_out = None
    if c.num_qubits <= 20 or (not trash and c.num_qubits <= MAX_PURE_QUBITS):
        pure_out = simulate_statevector(c)
        traced = _reduce_pure(pure_out, c.num_qubits, keep)
    else:
        traced = run_density_traced(c, trash)

    if tvec is not None and not trash:
        f = state_fidelity(tvec, pure_out)
        return SimResult(traced, f, float(np.sqrt(max(0.0, 1.0 - f))), pure_out)
    if tmat is None:
        tmat = np.outer(tvec, tvec.conj())
    return SimResult(traced, fidelity(tmat, traced), trace_distance(tmat, traced), pure_out)


def _reduce_pure(v: np.ndarray, n: int, keep: Sequence[int]) -> np.ndarray:
    """Reduced density of a pure state without forming the full outer product."""
    t = np.moveaxis(v.reshape((2,) * n), list(keep), range(len(keep)))
    a = t.reshape(1 << len(keep), -1)
    return a @ a.conj().T
