"""Unitary-level circuit instantiation (QFactor), a gradient baseline and a gate-deletion flow."""
__version__ = "0.1.0"

from unifactor.kernels import BACKEND, available_backends
from unifactor.circuit import Circuit, GateKind, LocatedGate, circuit_unitary, unitary_to_u3
from unifactor.distance import distance_delta, distance_delta_f, distance_delta_p
from unifactor.qasm import QasmError, load_qasm, parse_qasm, write_qasm
from unifactor.qfactor import (
    HyperParams,
    InstantiationResult,
    Termination,
    multistart_instantiate,
    qfactor_instantiate,
)
from unifactor.baseline import baseline_instantiate
from unifactor.compile import optimize_circuit, partition_circuit

__all__ = [
    "BACKEND",
    "available_backends",
    "Circuit",
    "GateKind",
    "LocatedGate",
    "circuit_unitary",
    "unitary_to_u3",
    "distance_delta",
    "distance_delta_f",
    "distance_delta_p",
    "QasmError",
    "load_qasm",
    "parse_qasm",
    "write_qasm",
    "HyperParams",
    "InstantiationResult",
    "Termination",
    "multistart_instantiate",
    "qfactor_instantiate",
    "baseline_instantiate",
    "optimize_circuit",
    "partition_circuit",
]
