"""Gate-level synthesis of pure and mixed quantum states, with Cholesky preprocessing."""

from .circuit import UCR, Circuit, Controlled, Gate, GateCountReport, gate_counts, lower_all
from .linalg import DensityMatrix, StateVector, fidelity, partial_trace, trace_distance
from .puresynth import synth_pure

__version__ = "0.1.0"
