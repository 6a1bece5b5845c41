"""Gate-level circuit IR, uniformly controlled rotation (UCR) macros, and lowering passes.

Conventions: ``RY(t) = exp(-i t Y / 2)``, ``RZ(t) = exp(-i t Z / 2)``. A UCR
with controls ``(c_0, ..., c_{k-1})`` applies ``R(angles[a])`` to its target
when the controls spell ``a`` in binary with ``c_0`` as the most significant bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

ZERO_ANGLE = 1e-14

ROTATIONS = ("ry", "rz")
ONE_QUBIT = ("ry", "rz", "x", "h", "t", "tdg", "s")
PRIMITIVES = ONE_QUBIT + ("cx",)
ARITY = {**{g: 1 for g in ONE_QUBIT}, "cx": 2, "cswap": 3}


@dataclass(frozen=True)
class Gate:
    """A primitive gate (or CSWAP). ``cx`` is (control, target); ``cswap`` is (control, a, b)."""

    name: str
    qubits: tuple[int, ...]
    param: float | None = None

    def __post_init__(self):
        if self.name not in ARITY:
            raise ValueError(f"unknown gate {self.name!r}")
        qubits = tuple(int(q) for q in self.qubits)
        if len(qubits) != ARITY[self.name]:
            raise ValueError(f"{self.name} takes {ARITY[self.name]} qubits, got {qubits}")
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"{self.name} operands must be distinct: {qubits}")
        object.__setattr__(self, "qubits", qubits)
        if self.name in ROTATIONS:
            if self.param is None:
                raise ValueError(f"{self.name} needs an angle")
            object.__setattr__(self, "param", float(self.param))
        elif self.param is not None:
            raise ValueError(f"{self.name} takes no parameter")


@dataclass(frozen=True)
class UCR:
    axis: str
    controls: tuple[int, ...]
    target: int
    angles: tuple[float, ...]

    def __post_init__(self):
        if self.axis not in ("y", "z"):
            raise ValueError(f"unsupported UCR axis {self.axis!r}")
        controls = tuple(int(c) for c in self.controls)
        angles = tuple(float(a) for a in self.angles)
        if len(angles) != 1 << len(controls):
            raise ValueError(f"UCR with {len(controls)} controls needs {1 << len(controls)} angles")
        if int(self.target) in controls or len(set(controls)) != len(controls):
            raise ValueError("UCR operands must be distinct")
        object.__setattr__(self, "controls", controls)
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "target", int(self.target))

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.controls + (self.target,)


@dataclass(frozen=True)
class Controlled:
    """``body`` applied only when every control qubit matches its polarity (True = |1>)."""

    body: tuple[Union[Gate, UCR], ...]
    controls: tuple[tuple[int, bool], ...]

    def __post_init__(self):
        controls = tuple((int(q), bool(p)) for q, p in self.controls)
        body = tuple(self.body)
        cq = {q for q, _ in controls}
        if len(cq) != len(controls):
            raise ValueError("duplicate control qubits")
        for g in body:
            if not isinstance(g, (Gate, UCR)) or (isinstance(g, Gate) and g.name not in ROTATIONS):
                raise ValueError(f"controlled body supports rotations and UCRs only, got {g}")
            if cq & set(g.qubits):
                raise ValueError("control qubits overlap the controlled body")
        object.__setattr__(self, "controls", controls)
        object.__setattr__(self, "body", body)

    @property
    def qubits(self) -> tuple[int, ...]:
        seen = [q for q, _ in self.controls]
        for g in self.body:
            seen.extend(q for q in g.qubits if q not in seen)
        return tuple(seen)


Op = Union[Gate, UCR, Controlled]


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple[Op, ...] = ()
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        gates = tuple(self.gates)
        for g in gates:
            if any(q < 0 or q >= self.num_qubits for q in g.qubits):
                raise ValueError(f"{g} acts outside a {self.num_qubits}-qubit circuit")
        object.__setattr__(self, "gates", gates)

    def with_gates(self, gates: Iterable[Op]) -> "Circuit":
        return Circuit(self.num_qubits, tuple(gates), dict(self.metadata))

    @property
    def is_lowered(self) -> bool:
        return all(isinstance(g, Gate) and g.name in PRIMITIVES for g in self.gates)


def ry(q: int, theta: float) -> Gate:
    return Gate("ry", (q,), theta)


def rz(q: int, phi: float) -> Gate:
    return Gate("rz", (q,), phi)


def cx(control: int, target: int) -> Gate:
    return Gate("cx", (control, target))


# --- angle transform ------------------------------------------------------------------

def gray(a: int) -> int:
    return a ^ (a >> 1)


def _log2_exact(n: int) -> int:
    k = int(n).bit_length() - 1
    if n < 1 or 1 << k != n:
        raise ValueError(f"length {n} is not a power of two")
    return k


def gray_angle_matrix(k: int) -> np.ndarray:
    """``M[a, b] = 2^-k (-1)^(b . gray(a))`` with a bitwise dot product."""
    size = 1 << k
    a = np.array([gray(i) for i in range(size)])
    b = np.arange(size)
    parity = np.vectorize(lambda x: bin(x).count("1") & 1)(a[:, None] & b[None, :])
    return np.where(parity, -1.0, 1.0) / size


def ucr_angles(theta: Sequence[float]) -> np.ndarray:
    """Angles of the rotations in the CNOT-interleaved UCR decomposition."""
    theta = np.asarray(theta, dtype=float)
    k = _log2_exact(theta.size)
    return gray_angle_matrix(k) @ theta


def ucr_angles_inverse(phi: Sequence[float]) -> np.ndarray:
    """Inverse of :func:`ucr_angles`: ``M^-1 = 2^k M^T``."""
    phi = np.asarray(phi, dtype=float)
    k = _log2_exact(phi.size)
    return (1 << k) * gray_angle_matrix(k).T @ phi


# --- UCR decomposition ------------------------------------------------------------------

def _raw_ucr_ops(g: UCR) -> list[tuple]:
    """Alternating ('rot', angle) / ('cx', control) ops for a UCR, Gray-code order."""
    k = len(g.controls)
    phis = ucr_angles(g.angles)
    if k == 0:
        return [("rot", phis[0])]
    size = 1 << k
    ops: list[tuple] = []
    for j in range(size):
        ops.append(("rot", phis[j]))
        bit = (gray(j) ^ gray((j + 1) % size)).bit_length() - 1
        ops.append(("cx", g.controls[k - 1 - bit]))
    return ops


def _emit(ops: list[tuple], axis_of, target: int, skip_zeros: bool) -> list[Gate]:
    """Turn raw ops into gates.

    With ``skip_zeros`` rotations of magnitude <= 1e-14 are dropped and each run
    of CNOTs between surviving rotations is replaced by its parity: all these
    CNOTs share the target, so they commute and pairs cancel.
    """
    out: list[Gate] = []
    if not skip_zeros:
        for i, (kind, val) in enumerate(ops):
            out.append(Gate("r" + axis_of(i), (target,), val) if kind == "rot" else cx(val, target))
        return out
    pending: dict[int, int] = {}

    def flush():
        for c in sorted(q for q, n in pending.items() if n & 1):
            out.append(cx(c, target))
        pending.clear()

    for i, (kind, val) in enumerate(ops):
        if kind == "cx":
            pending[val] = pending.get(val, 0) + 1
        elif abs(val) > ZERO_ANGLE:
            flush()
            out.append(Gate("r" + axis_of(i), (target,), val))
    flush()
    return out


def decompose_ucr(g: UCR, skip_zeros: bool = False) -> list[Gate]:
    """``2^k`` rotations interleaved with ``2^k`` CNOTs (none for ``k = 0``).

    The CNOT after rotation ``j`` is controlled by the qubit whose bit flips
    between ``gray(j)`` and ``gray(j + 1)``; the last one closes the cycle on
    the most significant control.
    """
    if g.axis not in ("y", "z"):
        raise ValueError(f"unsupported UCR axis {g.axis!r}")
    return _emit(_raw_ucr_ops(g), lambda i: g.axis, g.target, skip_zeros)


def fuse_ucr_pair(gy: UCR, gz: UCR, skip_zeros: bool = False) -> list[Gate]:
    """Lower an RY-UCR followed by an RZ-UCR with the junction CNOT pair cancelled.

    The RZ half is emitted in reverse gate order. Reversal leaves its unitary
    unchanged (every rotation sees the same control parity), and it puts the
    closing CNOT of both halves next to each other.
    """
    if gy.axis != "y" or gz.axis != "z":
        raise ValueError("fuse_ucr_pair expects an RY-UCR followed by an RZ-UCR")
    if gy.controls != gz.controls or gy.target != gz.target:
        raise ValueError("fused UCRs must share controls and target")
    ops_y = _raw_ucr_ops(gy)
    ops_z = _raw_ucr_ops(gz)[::-1]
    if ops_y[-1][0] == "cx":
        ops_y, ops_z = ops_y[:-1], ops_z[1:]
    ops = ops_y + ops_z
    split = len(ops_y)
    return _emit(ops, lambda i: "y" if i < split else "z", gy.target, skip_zeros)


# --- CSWAP ------------------------------------------------------------------------------

def toffoli(c1: int, c2: int, t: int) -> list[Gate]:
    """Six-CNOT Toffoli: 2 H, 3 T, 4 T^dagger, 1 S; exact (no global phase)."""
    return [
        Gate("h", (t,)), cx(c2, t), Gate("tdg", (t,)), cx(c1, t), Gate("t", (t,)),
        cx(c2, t), Gate("tdg", (t,)), cx(c1, t), Gate("tdg", (c2,)), Gate("t", (t,)),
        cx(c1, c2), Gate("h", (t,)), Gate("tdg", (c2,)), cx(c1, c2), Gate("t", (c1,)),
        Gate("s", (c2,)),
    ]


def lower_cswap(g: Gate) -> list[Gate]:
    """``CSWAP(c; a, b) = CNOT(b -> a) Toffoli(c, a -> b) CNOT(b -> a)``."""
    if g.name != "cswap":
        raise ValueError(f"expected cswap, got {g.name}")
    c, a, b = g.qubits
    return [cx(b, a)] + toffoli(c, a, b) + [cx(b, a)]


# --- lowering ---------------------------------------------------------------------------

def as_ucr(g: Union[Gate, UCR]) -> UCR:
    if isinstance(g, UCR):
        return g
    return UCR(g.name[1], (), g.qubits[0], (g.param,))


def enlarge_ucr(g: UCR, controls: Sequence[tuple[int, bool]]) -> UCR:
    """The UCR restricted to one pattern of extra (leading) controls; zero angle elsewhere."""
    extra = tuple(q for q, _ in controls)
    pattern = 0
    for _, positive in controls:
        pattern = (pattern << 1) | int(positive)
    k = len(g.controls)
    angles = np.zeros(1 << (len(extra) + k))
    angles[pattern << k:(pattern + 1) << k] = g.angles
    return UCR(g.axis, extra + g.controls, g.target, tuple(angles))


def expand_controlled(g: Controlled) -> list[UCR]:
    return [enlarge_ucr(as_ucr(b), g.controls) for b in g.body]


def _lower_ucr_sequence(ucrs: list[UCR], skip_zeros: bool) -> list[Gate]:
    out: list[Gate] = []
    i = 0
    while i < len(ucrs):
        g = ucrs[i]
        nxt = ucrs[i + 1] if i + 1 < len(ucrs) else None
        if (g.axis == "y" and nxt is not None and nxt.axis == "z"
                and nxt.controls == g.controls and nxt.target == g.target):
            out.extend(fuse_ucr_pair(g, nxt, skip_zeros))
            i += 2
        else:
            out.extend(decompose_ucr(g, skip_zeros))
            i += 1
    return out


SELF_INVERSE = ("x", "h", "cx")


def cancel_adjacent(gates: Iterable[Gate]) -> list[Gate]:
    """Remove adjacent identical self-inverse gates (stack-based, so fully reduced)."""
    out: list[Gate] = []
    for g in gates:
        if g.name in SELF_INVERSE and out and out[-1] == g:
            out.pop()
        else:
            out.append(g)
    return out


def lower_all(c: Circuit, skip_zeros: bool = True) -> Circuit:
    """Expand UCR, Controlled and CSWAP gates into {RY, RZ, H, T, TDG, S, X, CNOT}.

    Consecutive RY/RZ UCR pairs on the same operands are fused. Negative
    controls are handled by X-conjugating the control qubit around the block.
    With ``skip_zeros`` near-zero rotations are deleted and adjacent
    self-inverse pairs cancelled.
    """
    out: list[Gate] = []
    pending: list[UCR] = []

    def flush():
        out.extend(_lower_ucr_sequence(pending, skip_zeros))
        pending.clear()

    for g in c.gates:
        if isinstance(g, UCR):
            pending.append(g)
            continue
        flush()
        if isinstance(g, Controlled):
            flips = [Gate("x", (q,)) for q, positive in g.controls if not positive]
            ones = [(q, True) for q, _ in g.controls]
            out.extend(flips)
            out.extend(_lower_ucr_sequence([enlarge_ucr(as_ucr(b), ones) for b in g.body], skip_zeros))
            out.extend(flips)
        elif g.name == "cswap":
            out.extend(lower_cswap(g))
        elif g.name in ROTATIONS and skip_zeros and abs(g.param) <= ZERO_ANGLE:
            continue
        else:
            out.append(g)
    flush()
    if skip_zeros:
        out = cancel_adjacent(out)
    return c.with_gates(out)


# --- counting ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GateCountReport:
    cnot: int = 0
    one_qubit_rotations: int = 0
    one_qubit_other: int = 0
    cswap: int = 0
    total_primitive: int = 0
    registers_static: int = 0
    registers_dynamic: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def gate_counts(c: Circuit, skip_zeros: bool = True) -> GateCountReport:
    """Counts over the lowered circuit.

    ``cswap`` counts CSWAP gates before lowering (their CNOTs and one-qubit
    gates are included in the lowered totals). Register counts come from the
    synthesis metadata and default to the circuit width.
    """
    lowered = lower_all(c, skip_zeros).gates
    names = [g.name for g in lowered]
    return GateCountReport(
        cnot=names.count("cx"),
        one_qubit_rotations=sum(names.count(r) for r in ROTATIONS),
        one_qubit_other=sum(1 for n in names if n in ONE_QUBIT and n not in ROTATIONS),
        cswap=sum(1 for g in c.gates if isinstance(g, Gate) and g.name == "cswap"),
        total_primitive=len(lowered),
        registers_static=c.metadata.get("registers_static", c.num_qubits),
        registers_dynamic=c.metadata.get("registers_dynamic", c.num_qubits),
    )


def unitary_of(c: Circuit) -> np.ndarray:
    """Full ``2^n x 2^n`` unitary of the gate sequence (n <= 10)."""
    from .sim import apply_ops

    if c.num_qubits > 10:
        raise ValueError(f"unitary_of supports at most 10 qubits, got {c.num_qubits}")
    d = 1 << c.num_qubits
    t = np.eye(d, dtype=complex).reshape((2,) * c.num_qubits + (d,))
    t = apply_ops(t, c.gates, c.num_qubits)
    return t.reshape(d, d)


def ucr_matrix(g: UCR) -> np.ndarray:
    """Block-diagonal definition on (controls..., target) in that qubit order."""
    from .sim import rotation_matrix

    blocks = [rotation_matrix(g.axis, t) for t in g.angles]
    d = 2 * len(blocks)
    out = np.zeros((d, d), dtype=complex)
    for a, b in enumerate(blocks):
        out[2 * a:2 * a + 2, 2 * a:2 * a + 2] = b
    return out


def equal_up_to_phase(u: np.ndarray, v: np.ndarray) -> float:
    """Max elementwise deviation after aligning global phase on the largest entry of ``u``."""
    idx = np.unravel_index(np.argmax(np.abs(u)), u.shape)
    if abs(v[idx]) == 0:
        return float(np.max(np.abs(u - v)))
    phase = u[idx] / v[idx]
    phase /= abs(phase)
    return float(np.max(np.abs(u - phase * v)))
