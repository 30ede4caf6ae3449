"""Gate and circuit data model plus dense simulation.

Bit-order convention, used everywhere in the package: qubit 0 is the most
significant bit of a basis-state index, and a gate's local index follows the
order of its ``location`` tuple (``location[0]`` most significant).

Gates are listed in application order, so ``circuit_unitary`` returns
``g_p @ ... @ g_1``.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from unifactor.linalg import is_unitary


class GateKind(enum.Enum):
    U3 = "u3"
    RZ = "rz"
    CNOT = "cx"
    CONSTANT = "constant"
    VARIABLE = "variable"

    @property
    def param_count(self):
        return {GateKind.U3: 3, GateKind.RZ: 1}.get(self, 0)

    @property
    def is_parameterized(self):
        return self in (GateKind.U3, GateKind.RZ)


_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


@dataclass(frozen=True, eq=False)
class LocatedGate:
    kind: GateKind
    location: tuple
    params: tuple = ()
    matrix: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "location", tuple(int(q) for q in self.location))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if len(set(self.location)) != len(self.location):
            raise ValueError(f"repeated qubit in location {self.location}")
        if len(self.params) != self.kind.param_count:
            raise ValueError(
                f"{self.kind.value} takes {self.kind.param_count} params, got {len(self.params)}"
            )
        if self.kind in (GateKind.U3, GateKind.RZ) and len(self.location) != 1:
            raise ValueError(f"{self.kind.value} acts on exactly one qubit")
        if self.kind is GateKind.CNOT and len(self.location) != 2:
            raise ValueError("cx acts on exactly two qubits")
        if self.kind in (GateKind.CONSTANT, GateKind.VARIABLE):
            if self.matrix is None:
                raise ValueError(f"{self.kind.value} gate needs a matrix")
            m = np.array(self.matrix, dtype=complex)
            if m.shape != (1 << len(self.location),) * 2:
                raise ValueError(f"matrix shape {m.shape} does not fit location {self.location}")
            if self.kind is GateKind.VARIABLE and not is_unitary(m):
                raise ValueError("variable unitary state is not unitary")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)

    @property
    def num_qubits(self):
        return len(self.location)

    def with_params(self, params):
        return LocatedGate(self.kind, self.location, tuple(params), self.matrix)

    def with_matrix(self, matrix):
        return LocatedGate(self.kind, self.location, self.params, matrix)

    def with_location(self, location):
        return LocatedGate(self.kind, tuple(location), self.params, self.matrix)

    def __eq__(self, other):
        if not isinstance(other, LocatedGate):
            return NotImplemented
        if (self.kind, self.location, self.params) != (other.kind, other.location, other.params):
            return False
        if self.matrix is None or other.matrix is None:
            return self.matrix is None and other.matrix is None
        return bool(np.array_equal(self.matrix, other.matrix))

    __hash__ = None


@dataclass
class Circuit:
    num_qubits: int
    gates: list = field(default_factory=list)

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("circuit needs at least one qubit")
        for g in self.gates:
            self._check(g)

    def _check(self, gate):
        if any(q < 0 or q >= self.num_qubits for q in gate.location):
            raise ValueError(f"location {gate.location} out of range for {self.num_qubits} qubits")

    def append(self, gate):
        self._check(gate)
        self.gates.append(gate)
        return self

    def add(self, kind, location, params=(), matrix=None):
        return self.append(LocatedGate(kind, tuple(location), tuple(params), matrix))

    def copy(self):
        return Circuit(self.num_qubits, list(self.gates))

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    @property
    def num_params(self):
        return sum(g.kind.param_count for g in self.gates)

    def params(self):
        """Flat parameter vector in gate order."""
        return np.array([p for g in self.gates for p in g.params], dtype=float)

    def with_params(self, values):
        values = list(np.asarray(values, dtype=float))
        if len(values) != self.num_params:
            raise ValueError(f"expected {self.num_params} params, got {len(values)}")
        out, i = [], 0
        for g in self.gates:
            k = g.kind.param_count
            out.append(g.with_params(values[i:i + k]) if k else g)
            i += k
        return Circuit(self.num_qubits, out)

    def gate_counts(self):
        counts = {"U3": 0, "CNOT": 0, "RZ": 0, "other": 0}
        for g in self.gates:
            key = {GateKind.U3: "U3", GateKind.CNOT: "CNOT", GateKind.RZ: "RZ"}.get(g.kind, "other")
            counts[key] += 1
        return counts


def u3_matrix(theta, phi, lam):
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [
            [c, -cmath.exp(1j * lam) * s],
            [cmath.exp(1j * phi) * s, cmath.exp(1j * (phi + lam)) * c],
        ],
        dtype=complex,
    )


def rz_matrix(theta):
    return np.array([[1, 0], [0, cmath.exp(1j * theta)]], dtype=complex)


def gate_unitary(g):
    if g.kind is GateKind.U3:
        return u3_matrix(*g.params)
    if g.kind is GateKind.RZ:
        return rz_matrix(g.params[0])
    if g.kind is GateKind.CNOT:
        return _CNOT.copy()
    return np.array(g.matrix, dtype=complex)


def gate_grad(g):
    """Element-wise analytic derivatives of ``gate_unitary(g)``, one per param."""
    if g.kind is GateKind.RZ:
        return [np.array([[0, 0], [0, 1j * cmath.exp(1j * g.params[0])]], dtype=complex)]
    if g.kind is GateKind.U3:
        theta, phi, lam = g.params
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        ep, el, epl = cmath.exp(1j * phi), cmath.exp(1j * lam), cmath.exp(1j * (phi + lam))
        d_theta = 0.5 * np.array([[-s, -el * c], [ep * c, -epl * s]], dtype=complex)
        d_phi = np.array([[0, 0], [1j * ep * s, 1j * epl * c]], dtype=complex)
        d_lam = np.array([[0, -1j * el * s], [0, 1j * epl * c]], dtype=complex)
        return [d_theta, d_phi, d_lam]
    raise ValueError(f"{g.kind.value} gate has no parameters to differentiate")


def expand_to_n_qubits(u, location, n):
    """Embed a local operator on ``location`` into the full ``n``-qubit space."""
    location = tuple(location)
    m = len(location)
    u = np.asarray(u, dtype=complex)
    if u.shape != (1 << m, 1 << m):
        raise ValueError(f"operator shape {u.shape} does not fit {m} qubits")
    if len(set(location)) != m or any(q < 0 or q >= n for q in location):
        raise ValueError(f"location {location} invalid for {n} qubits")
    others = [q for q in range(n) if q not in location]
    full = np.kron(u, np.eye(1 << (n - m)))
    pos = {q: i for i, q in enumerate(list(location) + others)}
    axes = [pos[q] for q in range(n)] + [n + pos[q] for q in range(n)]
    return full.reshape([2] * (2 * n)).transpose(axes).reshape(1 << n, 1 << n)


def circuit_unitary(c):
    u = np.eye(1 << c.num_qubits, dtype=complex)
    for g in c.gates:
        u = expand_to_n_qubits(gate_unitary(g), g.location, c.num_qubits) @ u
    return u


def _wrap(x):
    r = math.remainder(x, 2 * math.pi)
    return math.pi if r <= -math.pi else r


def unitary_to_u3(u, tol=1e-9):
    """Return ``(theta, phi, lam, phase)`` with ``U3(theta, phi, lam) == exp(-i phase) u``.

    ``theta`` lies in [0, pi]; the other angles in (-pi, pi].
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not is_unitary(u, tol):
        raise ValueError("unitary_to_u3 expects a 2x2 unitary")
    c = math.sqrt((abs(u[0, 0]) ** 2 + abs(u[1, 1]) ** 2) / 2)
    s = math.sqrt((abs(u[1, 0]) ** 2 + abs(u[0, 1]) ** 2) / 2)
    theta = 2 * math.atan2(s, c)
    # thresholds pick which entries carry reliable phase information
    if c > 1e-9:
        phase = cmath.phase(u[0, 0])
        if s > 1e-9:
            phi = cmath.phase(u[1, 0]) - phase
            lam = cmath.phase(-u[0, 1]) - phase
        else:
            phi = 0.0
            lam = cmath.phase(u[1, 1]) - phase
    else:
        phi = 0.0
        phase = cmath.phase(u[1, 0])
        lam = cmath.phase(-u[0, 1]) - phase
    return theta, _wrap(phi), _wrap(lam), _wrap(phase)
