"""Deterministic benchmark-circuit generators.

These stand in for an external benchmark corpus. Gate counts:

* ``tfim``: ``depth * (4n - 3)``. Each layer is a U3 on every qubit followed
  by ``cx(i, i+1) rz(i+1) cx(i, i+1)`` for each neighbouring pair.
* ``qaoa_ring``: ``n + depth * (3E + n)`` with ``E = n`` ring edges for
  ``n >= 3`` and ``E = 1`` for ``n = 2``. An initial U3 layer, then per layer
  a ``cx rz cx`` block per edge and a U3 mixer on every qubit.
* ``random``: ``depth * n`` gates, each a CNOT on a random ordered pair or a
  U3 on a random qubit with equal probability.

All angles come from a ``numpy`` generator seeded with ``seed`` and are
uniform on (-pi, pi).
"""
import math

import numpy as np

from unifactor.circuit import Circuit, GateKind

FAMILIES = ("tfim", "qaoa_ring", "random")


def expected_gate_count(family, n, depth):
    if family == "tfim":
        return depth * (4 * n - 3)
    if family == "qaoa_ring":
        edges = n if n >= 3 else 1
        return n + depth * (3 * edges + n)
    if family == "random":
        return depth * n
    raise ValueError(f"unknown benchmark family {family!r}")


def _angle(rng):
    return float(rng.uniform(-math.pi, math.pi))


def _u3(rng):
    return (_angle(rng), _angle(rng), _angle(rng))


def gen_benchmark(family, n, depth, seed=0):
    if family not in FAMILIES:
        raise ValueError(f"unknown benchmark family {family!r}; choose from {', '.join(FAMILIES)}")
    if n < 2 or depth < 1:
        raise ValueError("need n >= 2 and depth >= 1")
    rng = np.random.default_rng(seed)
    c = Circuit(n)
    if family == "tfim":
        for _ in range(depth):
            for q in range(n):
                c.add(GateKind.U3, (q,), _u3(rng))
            for q in range(n - 1):
                c.add(GateKind.CNOT, (q, q + 1))
                c.add(GateKind.RZ, (q + 1,), (_angle(rng),))
                c.add(GateKind.CNOT, (q, q + 1))
    elif family == "qaoa_ring":
        edges = [(q, (q + 1) % n) for q in range(n)] if n >= 3 else [(0, 1)]
        for q in range(n):
            c.add(GateKind.U3, (q,), _u3(rng))
        for _ in range(depth):
            gamma = _angle(rng)
            for a, b in edges:
                c.add(GateKind.CNOT, (a, b))
                c.add(GateKind.RZ, (b,), (gamma,))
                c.add(GateKind.CNOT, (a, b))
            mixer = _angle(rng)
            for q in range(n):
                c.add(GateKind.U3, (q,), (mixer, -math.pi / 2, math.pi / 2))
    else:
        for _ in range(depth * n):
            if rng.random() < 0.5:
                a, b = rng.choice(n, size=2, replace=False)
                c.add(GateKind.CNOT, (int(a), int(b)))
            else:
                c.add(GateKind.U3, (int(rng.integers(n)),), _u3(rng))
    return c
