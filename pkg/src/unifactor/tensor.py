"""Circuit tensor: the running representation of V^dagger U.

The tensor is stored as a ``2^n x 2^n`` matrix. Gate application touches only
the entries belonging to the gate's qubits (index arithmetic in the kernel
backend); the full-register expansion is never formed.

``apply_left(u)`` means ``T <- expand(u) @ T`` and ``apply_right(u)`` means
``T <- T @ expand(u)``. After :func:`init_circuit_tensor` the tensor holds
``g_p ... g_1 V^dagger`` so ``trace_all`` is ``Tr(V^dagger U)``.
"""
import numpy as np

from unifactor import kernels
from unifactor.circuit import gate_unitary


class CircuitTensor:
    def __init__(self, data, num_qubits):
        self.data = np.ascontiguousarray(data, dtype=complex)
        self.num_qubits = num_qubits
        # diagnostic only: gates currently sitting on each side
        self.applied_count = {"left": 0, "right": 0}
        self._offsets = {}

    def offsets(self, location):
        location = tuple(location)
        if location not in self._offsets:
            if any(q < 0 or q >= self.num_qubits for q in location) or len(set(location)) != len(location):
                raise ValueError(f"location {location} invalid for {self.num_qubits} qubits")
            self._offsets[location] = kernels.gate_offsets(location, self.num_qubits)
        return self._offsets[location]

    def _check_gate(self, u, location):
        u = np.ascontiguousarray(u, dtype=complex)
        if u.shape != (1 << len(location),) * 2:
            raise ValueError(f"gate shape {u.shape} does not fit location {tuple(location)}")
        return u

    def apply_left(self, u, location, inverse=False):
        lo, ro = self.offsets(location)
        kernels.apply_left(self.data, self._check_gate(u, location), lo, ro, inverse)
        self.applied_count["left"] += -1 if inverse else 1
        return self

    def apply_right(self, u, location, inverse=False):
        lo, ro = self.offsets(location)
        kernels.apply_right(self.data, self._check_gate(u, location), lo, ro, inverse)
        self.applied_count["right"] += -1 if inverse else 1
        return self

    def calc_env_mat(self, location):
        """Environment E with ``Tr(E @ u) == trace_all()`` after applying ``u`` at ``location``."""
        lo, ro = self.offsets(location)
        return kernels.env_matrix(self.data, lo, ro)

    def trace_all(self):
        return complex(np.trace(self.data))

    def copy(self):
        out = CircuitTensor(self.data.copy(), self.num_qubits)
        out.applied_count = dict(self.applied_count)
        out._offsets = self._offsets
        return out


def _tensor_for(target, num_qubits):
    target = np.asarray(target, dtype=complex)
    dim = 1 << num_qubits
    if target.shape != (dim, dim):
        raise ValueError(f"target shape {target.shape} does not match {num_qubits}-qubit circuit")
    return CircuitTensor(target.conj().T.copy(), num_qubits)


def init_circuit_tensor(target, circuit, unitaries=None, _offsets=None):
    """Build ``g_p ... g_1 V^dagger``.

    ``unitaries`` optionally overrides the gate matrices (same order as
    ``circuit.gates``); this is how an optimizer rebuilds from its state.
    """
    ct = _tensor_for(target, circuit.num_qubits)
    if _offsets is not None:
        ct._offsets = _offsets
    mats = unitaries if unitaries is not None else [gate_unitary(g) for g in circuit.gates]
    for g, u in zip(circuit.gates, mats):
        ct.apply_left(u, g.location)
    return ct


def reset(ct, target, circuit, unitaries=None):
    """Rebuild a drifted tensor from scratch; keeps the location offset cache."""
    return init_circuit_tensor(target, circuit, unitaries, _offsets=ct._offsets)
