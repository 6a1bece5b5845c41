"""Export and parse the OpenQASM 2.0 subset used for lowered circuits.

One gate per line, LF line endings, angles with 17 significant digits, so
the text is byte-identical for identical circuits and parses back exactly.
"""

from __future__ import annotations

import re

from .circuit import PRIMITIVES, ROTATIONS, Circuit, Gate

HEADER = 'OPENQASM 2.0;\ninclude "qelib1.inc";\n'

_QREG = re.compile(r"^qreg\s+q\[(\d+)\];$")
_GATE = re.compile(r"^([a-z]+)(?:\(([^()]*)\))?\s+(q\[\d+\](?:\s*,\s*q\[\d+\])*);$")
_OPERAND = re.compile(r"q\[(\d+)\]")


class ExportError(ValueError):
    """The circuit still contains macro gates."""


class QasmParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def format_angle(x: float) -> str:
    return format(float(x), ".17g")


def export_qasm(c: Circuit) -> str:
    lines = [HEADER, f"qreg q[{c.num_qubits}];\n"]
    for g in c.gates:
        if not isinstance(g, Gate) or g.name not in PRIMITIVES:
            raise ExportError(f"cannot export unlowered gate {g}; run lower_all first")
        operands = ",".join(f"q[{q}]" for q in g.qubits)
        if g.name in ROTATIONS:
            lines.append(f"{g.name}({format_angle(g.param)}) {operands};\n")
        else:
            lines.append(f"{g.name} {operands};\n")
    return "".join(lines)


def parse_qasm(text: str) -> Circuit:
    """Inverse of :func:`export_qasm`. Blank lines and ``//`` comments are ignored.

    Without a ``qreg`` declaration the width is one more than the largest
    qubit index used.
    """
    width = None
    gates: list[Gate] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("//", 1)[0].strip()
        if not line or line in ("OPENQASM 2.0;", 'include "qelib1.inc";'):
            continue
        m = _QREG.match(line)
        if m:
            if width is not None:
                raise QasmParseError(lineno, "second qreg declaration")
            width = int(m.group(1))
            continue
        m = _GATE.match(line)
        if not m:
            raise QasmParseError(lineno, f"cannot parse {raw.strip()!r}")
        name, arg, ops = m.groups()
        if name not in PRIMITIVES:
            raise QasmParseError(lineno, f"unknown gate {name!r}")
        qubits = tuple(int(q) for q in _OPERAND.findall(ops))
        if (arg is not None) != (name in ROTATIONS):
            raise QasmParseError(lineno, f"{name} {'needs' if name in ROTATIONS else 'takes no'} angle")
        try:
            param = float(arg) if arg is not None else None
            gates.append(Gate(name, qubits, param))
        except ValueError as exc:
            raise QasmParseError(lineno, str(exc)) from None
        if width is not None and max(qubits) >= width:
            raise QasmParseError(lineno, f"qubit {max(qubits)} outside qreg q[{width}]")
    if width is None:
        width = 1 + max((max(g.qubits) for g in gates), default=-1)
    return Circuit(width, tuple(gates))
