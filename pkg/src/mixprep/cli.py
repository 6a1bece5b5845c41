"""Command-line driver: ``mixprep <verb> ...``.

Input documents are UTF-8 JSON with ``kind`` (statevector, ensemble or
density), ``num_qubits``, ``data`` and, for ensembles, ``weights``. Complex
numbers are ``[re, im]`` pairs. Exit codes: 0 success, 1 input error,
2 verification failure.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from typing import Optional, Sequence

import numpy as np

from . import corpus
from .cholesky import BreakdownError, Ensemble, factorize_density
from .circuit import gate_counts, lower_all
from .linalg import DensityMatrix, StateVector, fidelity, trace_distance
from .mixedsynth import METHODS, merge_purification_ucr, synth_from_density, synth_mixture, synth_purification
from .puresynth import synth_pure
from .qasm import QasmParseError, export_qasm, parse_qasm
from .sim import SimulationLimitError, verify

EXIT_OK, EXIT_INPUT, EXIT_VERIFY = 0, 1, 2
DEFAULT_THRESHOLD = 1 - 1e-9
KINDS = ("statevector", "ensemble", "density")


class InputError(ValueError):
    pass


# --- JSON I/O ---------------------------------------------------------------------------

_FLOAT_TAG = "\x00f:"
_FLOAT_RE = re.compile(r'"\\u0000f:([^"]*)"')


def _tag_floats(obj):
    if isinstance(obj, dict):
        return {k: _tag_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_tag_floats(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not np.isfinite(x):
            raise ValueError(f"non-finite number {x} in report")
        return _FLOAT_TAG + format(x, ".17g")
    return obj


def dumps(obj) -> str:
    """Deterministic JSON with every float written to 17 significant digits."""
    text = json.dumps(_tag_floats(obj), indent=2)
    return _FLOAT_RE.sub(r"\1", text) + "\n"


def complex_pairs(v) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex).reshape(-1)]


def matrix_pairs(m) -> list:
    return [complex_pairs(row) for row in np.asarray(m, dtype=complex)]


def _complex_array(data, what: str) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"{what}: entries must be [re, im] pairs of numbers") from None
    if arr.ndim == 0 or arr.shape[-1] != 2:
        raise InputError(f"{what}: entries must be [re, im] pairs")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{what}: entries must be finite")
    return arr[..., 0] + 1j * arr[..., 1]


def load_document(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise InputError(f"{path}: top level must be an object")
    for key in ("kind", "num_qubits", "data"):
        if key not in doc:
            raise InputError(f"{path}: missing field {key!r}")
    if doc["kind"] not in KINDS:
        raise InputError(f"{path}: kind must be one of {KINDS}, got {doc['kind']!r}")
    n = doc["num_qubits"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise InputError(f"{path}: num_qubits must be a nonnegative integer")
    return doc


def parse_document(doc: dict):
    """StateVector, Ensemble or DensityMatrix; validation failures become InputError."""
    kind, n, d = doc["kind"], doc["num_qubits"], 1 << doc["num_qubits"]
    try:
        if kind == "statevector":
            v = _complex_array(doc["data"], "data").reshape(-1)
            if v.size != d:
                raise InputError(f"statevector has {v.size} amplitudes, expected {d} for {n} qubits")
            return StateVector(v)
        if kind == "ensemble":
            if "weights" not in doc:
                raise InputError("ensemble document needs 'weights'")
            states = [_complex_array(s, f"state {i}").reshape(-1) for i, s in enumerate(doc["data"])]
            for i, s in enumerate(states):
                if s.size != d:
                    raise InputError(f"state {i} has {s.size} amplitudes, expected {d}")
            return Ensemble(np.asarray(doc["weights"], dtype=float), tuple(states))
        m = _complex_array(doc["data"], "data")
        if m.size != d * d:
            raise InputError(f"density has {m.size} entries, expected {d * d} for {n} qubits")
        return DensityMatrix(m.reshape(d, d))
    except InputError:
        raise
    except (ValueError, TypeError) as exc:
        raise InputError(f"invalid {kind}: {exc}") from None


def state_document(psi: StateVector) -> dict:
    return {"kind": "statevector", "num_qubits": psi.num_qubits, "data": complex_pairs(psi.amplitudes)}


def ensemble_document(e: Ensemble) -> dict:
    return {"kind": "ensemble", "num_qubits": e.num_qubits, "weights": [float(w) for w in e.weights],
            "data": [complex_pairs(s.amplitudes) for s in e.states]}


def density_document(rho) -> dict:
    m = np.asarray(rho.matrix if isinstance(rho, DensityMatrix) else rho, dtype=complex)
    n = m.shape[0].bit_length() - 1
    return {"kind": "density", "num_qubits": n, "data": matrix_pairs(m)}


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _load_circuit(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_qasm(fh.read())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except QasmParseError as exc:
        raise InputError(f"{path}: {exc}") from None


# --- reports ----------------------------------------------------------------------------

def _emit(args, report: dict, timings: dict) -> None:
    if args.timings:
        report["timings"] = {k: float(v) for k, v in timings.items()}
    _write(args.report, dumps(report))


def _verdict(report: dict, value: Optional[float], threshold: float) -> int:
    report["threshold"] = threshold
    if value is None:
        report["verified"] = False
        return EXIT_OK
    report["verified"] = True
    report["passed"] = bool(value >= threshold)
    return EXIT_OK if report["passed"] else EXIT_VERIFY


# --- verbs ------------------------------------------------------------------------------

def cmd_synth_pure(args) -> int:
    timings = {}
    t0 = time.perf_counter()
    psi = parse_document(load_document(args.input))
    if not isinstance(psi, StateVector):
        raise InputError("synth-pure needs a statevector document")
    c = synth_pure(psi, skip_zeros=not args.no_skip)
    lowered = lower_all(c, skip_zeros=not args.no_skip)
    timings["synthesize"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    report = {"command": "synth-pure", "num_qubits": psi.num_qubits,
              "counts": gate_counts(c, skip_zeros=not args.no_skip).as_dict()}
    fid = None
    try:
        res = verify(psi, lowered)
        fid = res.fidelity
        report["fidelity"], report["trace_distance"] = res.fidelity, res.trace_distance
    except SimulationLimitError:
        pass
    timings["verify"] = time.perf_counter() - t0
    code = _verdict(report, fid, args.threshold)
    if args.output:
        _write(args.output, export_qasm(lowered))
    _emit(args, report, timings)
    return code


def cmd_synth_mixed(args) -> int:
    doc = load_document(args.input)
    obj = parse_document(doc)
    skip = not args.no_skip
    timings = {}
    report: dict = {"command": "synth-mixed", "method": args.method}
    if isinstance(obj, Ensemble):
        if args.drop_tol:
            raise InputError("--drop-tol applies to density inputs only")
        t0 = time.perf_counter()
        if args.method == "mixture":
            c, _ = synth_mixture(obj, skip)
        else:
            c, _ = synth_purification(obj, not args.no_phase_fix, skip)
            if not args.no_merge:
                c = merge_purification_ucr(c, skip)
        timings["synthesize"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        report["num_qubits"], report["ensemble_size"] = obj.num_qubits, obj.size
        report["counts"] = gate_counts(c, skip).as_dict()
        value = None
        try:
            res = verify(obj.density_matrix(), c, c.metadata["trash"])
            report["fidelity"], report["trace_distance"] = res.fidelity, res.trace_distance
            value = res.fidelity
        except SimulationLimitError:
            pass
        timings["verify"] = time.perf_counter() - t0
    elif isinstance(obj, DensityMatrix):
        out = synth_from_density(obj, args.method, args.drop_tol, phase_fix=not args.no_phase_fix,
                                 skip_zeros=skip, reorder=args.reorder, merge=not args.no_merge)
        c = out.circuit
        timings.update(out.timings)
        f = out.factor
        report["num_qubits"], report["ensemble_size"] = obj.num_qubits, out.plan.ensemble.size
        report["counts"] = out.counts.as_dict()
        report["factorization"] = _factor_stats(f, out.factor_matrix.ell)
        report["approximation"] = {"trace_distance": out.approx_trace_distance,
                                   "fidelity": out.approx_fidelity}
        if out.verified:
            report["fidelity"], report["trace_distance"] = out.fidelity, out.trace_distance
            report["synthesis_fidelity"] = out.synthesis_fidelity
        value = out.synthesis_fidelity
    else:
        raise InputError("synth-mixed needs an ensemble or density document")
    code = _verdict(report, value, args.threshold)
    if args.output:
        _write(args.output, export_qasm(lower_all(c, skip)))
    _emit(args, report, timings)
    return code


def _factor_stats(f, ell: int) -> dict:
    return {"ell": ell, "rank": f.rank, "nnz": f.nnz, "kind": f.kind,
            "drop_tol": 0.0 if f.drop_tol is None else f.drop_tol,
            "shift": f.shift, "shift_trail": list(f.shift_trail),
            "permutation": [int(i) for i in f.permutation]}


def cmd_factorize(args) -> int:
    obj = parse_document(load_document(args.input))
    if not isinstance(obj, DensityMatrix):
        raise InputError("factorize needs a density document")
    t0 = time.perf_counter()
    factor, fm, ens = factorize_density(obj.matrix, args.drop_tol, reorder=args.pivot)
    timings = {"factorize": time.perf_counter() - t0}
    approx = ens.density_matrix()
    report = {
        "command": "factorize",
        "stats": _factor_stats(factor, fm.ell),
        "relative_frobenius_error": float(np.linalg.norm(factor.reconstruct() - obj.matrix)
                                          / np.linalg.norm(obj.matrix)),
        "fidelity": fidelity(obj.matrix, approx),
        "trace_distance": trace_distance(obj.matrix, approx),
        "A": matrix_pairs(fm.A),
        "ensemble": ensemble_document(ens),
    }
    if args.output:
        _write(args.output, dumps({"A": report["A"], "ensemble": report["ensemble"]}))
    _emit(args, report, timings)
    return EXIT_OK


def cmd_verify(args) -> int:
    c = _load_circuit(args.circuit)
    target = parse_document(load_document(args.target))
    if isinstance(target, Ensemble):
        target = DensityMatrix(target.density_matrix())
    n = target.num_qubits
    trash = args.trash if args.trash is not None else list(range(n, c.num_qubits))
    t0 = time.perf_counter()
    try:
        res = verify(target, c, trash)
    except SimulationLimitError as exc:
        raise InputError(str(exc)) from None
    except ValueError as exc:
        raise InputError(f"inconsistent widths: {exc}") from None
    report = {"command": "verify", "num_qubits": c.num_qubits, "trash": list(trash),
              "fidelity": res.fidelity, "trace_distance": res.trace_distance}
    code = _verdict(report, res.fidelity, args.threshold)
    _emit(args, report, {"verify": time.perf_counter() - t0})
    return code


def cmd_counts(args) -> int:
    c = _load_circuit(args.circuit)
    report = {"command": "counts", "num_qubits": c.num_qubits, "counts": gate_counts(c).as_dict()}
    _emit(args, report, {})
    return EXIT_OK


def cmd_random_input(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.kind == "statevector":
        doc = state_document(corpus.random_state(args.num_qubits, rng))
    elif args.kind == "ensemble":
        doc = ensemble_document(corpus.random_ensemble(args.num_qubits, args.ell, rng))
    elif args.sparse:
        doc = density_document(corpus.sparse_density(1 << args.num_qubits, rng))
    else:
        doc = density_document(corpus.random_density(args.num_qubits, rng, args.rank))
    _write(args.output, dumps(doc))
    return EXIT_OK


# --- argument parsing -------------------------------------------------------------------

def _qubit_list(text: str) -> list[int]:
    if not text.strip():
        return []
    try:
        return [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated qubit indices, got {text!r}") from None


def _nonneg_float(text: str) -> float:
    x = float(text)
    if not np.isfinite(x) or x < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative number, got {text!r}")
    return x


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mixprep", description="Synthesize and verify state-preparation circuits.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, threshold=True):
        sp.add_argument("--report", help="write the JSON report here (default: stdout)")
        sp.add_argument("--timings", action="store_true", help="add wall-clock timings to the report")
        if threshold:
            sp.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD,
                            help="minimum fidelity for exit code 0 (default: 1 - 1e-9)")

    sp = sub.add_parser("synth-pure", help="circuit for a pure state")
    sp.add_argument("input")
    sp.add_argument("-o", "--output", help="write the lowered circuit as QASM")
    sp.add_argument("--no-skip", action="store_true", help="keep zero rotations (worst-case circuit)")
    common(sp)
    sp.set_defaults(func=cmd_synth_pure)

    sp = sub.add_parser("synth-mixed", help="circuit for an ensemble or density matrix")
    sp.add_argument("input")
    sp.add_argument("-o", "--output", help="write the lowered circuit as QASM")
    sp.add_argument("--method", choices=METHODS, default="purification")
    sp.add_argument("--drop-tol", type=_nonneg_float, default=0.0, help="incomplete-Cholesky drop tolerance")
    sp.add_argument("--no-phase-fix", action="store_true", help="skip branch-phase correction")
    sp.add_argument("--no-merge", action="store_true", help="keep one controlled ladder per state")
    sp.add_argument("--reorder", action="store_true", help="fill-reducing column order for incomplete Cholesky")
    sp.add_argument("--no-skip", action="store_true", help="keep zero rotations")
    common(sp)
    sp.set_defaults(func=cmd_synth_mixed)

    sp = sub.add_parser("factorize", help="Cholesky factor and ensemble of a density matrix")
    sp.add_argument("input")
    sp.add_argument("-o", "--output", help="write A and the ensemble as JSON")
    sp.add_argument("--drop-tol", type=_nonneg_float, default=0.0)
    sp.add_argument("--pivot", action="store_true",
                    help="with --drop-tol, reorder columns to limit fill-in (drop-tol 0 always pivots)")
    common(sp, threshold=False)
    sp.set_defaults(func=cmd_factorize)

    sp = sub.add_parser("verify", help="simulate a QASM circuit against a target document")
    sp.add_argument("circuit")
    sp.add_argument("target")
    sp.add_argument("--trash", type=_qubit_list, default=None,
                    help="comma-separated qubits to trace out (default: all beyond the target width)")
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("counts", help="gate counts of a QASM circuit")
    sp.add_argument("circuit")
    common(sp, threshold=False)
    sp.set_defaults(func=cmd_counts)

    sp = sub.add_parser("random-input", help="write a seeded random input document")
    sp.add_argument("--kind", choices=KINDS, default="statevector")
    sp.add_argument("--num-qubits", "-n", type=int, default=2)
    sp.add_argument("--ell", type=int, default=2, help="ensemble size")
    sp.add_argument("--rank", type=int, default=None, help="density rank (default: full)")
    sp.add_argument("--sparse", action="store_true", help="sparse banded density")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_random_input)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; here 2 means a failed verification
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    try:
        return args.func(args)
    except BreakdownError as exc:
        print(f"mixprep: {exc} (shift trail: {list(exc.shifts)})", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, ValueError, OSError) as exc:
        print(f"mixprep: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
