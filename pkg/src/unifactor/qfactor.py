"""QFactor instantiation: unitary-level local updates inside two-sided sweeps.

Each sweep walks the gates backwards then forwards. For every gate it removes
the gate from the circuit tensor, extracts the environment matrix E, replaces
the gate with the unitary maximizing ``Re Tr(E u)`` and re-inserts it on the
other side of the tensor.

U3 gates are optimized as full 2x2 unitaries (U3 covers U(2) up to a global
phase); angles are extracted only when the final circuit is assembled. RZ
gates use the closed-form angle update. CNOT and constant gates are moved
through the tensor but never changed.
"""
from __future__ import annotations

import cmath
import enum
import math
import secrets
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field

import numpy as np

from unifactor import kernels
from unifactor.circuit import Circuit, GateKind, gate_unitary, unitary_to_u3
from unifactor.linalg import random_unitary
from unifactor.tensor import init_circuit_tensor, reset


class Termination(str, enum.Enum):
    DIST_TOL = "DistTol"
    PLATEAU_SHORT = "PlateauShort"
    PLATEAU_LONG = "PlateauLong"
    MAX_ITER = "MaxIter"
    # only reachable when a deadline is passed
    TIME_BUDGET = "TimeBudget"


@dataclass
class HyperParams:
    dist_tol: float = 1e-10
    diff_tol_a: float = 0.0
    diff_tol_r: float = 1e-5
    long_diff_count: int = 100
    long_diff_r: float = 0.1
    min_iter: int = 0
    max_iter: int = 100_000
    reset_iter: int = 40
    multistarts: int = 8
    seed: int | None = None
    beta: float = 0.0

    def __post_init__(self):
        if not self.dist_tol > 0:
            raise ValueError("dist_tol must be positive")
        if self.max_iter < 0 or self.min_iter < 0:
            raise ValueError("iteration limits must be non-negative")
        if self.max_iter < self.min_iter:
            raise ValueError("max_iter must be >= min_iter")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if self.long_diff_count < 1 or self.reset_iter < 1 or self.multistarts < 1:
            raise ValueError("long_diff_count, reset_iter and multistarts must be >= 1")

    def to_dict(self):
        return asdict(self)


@dataclass
class InstantiationResult:
    circuit: Circuit
    distance_delta: float
    distance_frob: float
    iterations: int
    termination: Termination
    cost_trace: list = field(default_factory=list)
    start: int = 0
    seed: int | None = None
    wall_time: float = 0.0

    @property
    def success(self):
        return self.termination is Termination.DIST_TOL

    def summary(self):
        """JSON-friendly view without the circuit or wall time."""
        return {
            "distance_delta": self.distance_delta,
            "distance_frob": self.distance_frob,
            "iterations": self.iterations,
            "termination": self.termination.value,
            "start": self.start,
            "seed": self.seed,
        }


def _kind_code(g):
    if g.kind in (GateKind.VARIABLE, GateKind.U3):
        return kernels.KIND_UNITARY
    if g.kind is GateKind.RZ:
        return kernels.KIND_RZ
    return kernels.KIND_FIXED


def optimize_gate(g, env, beta=0.0, u_old=None):
    """Locally optimal unitary for gate ``g`` given its environment.

    Returns the new gate matrix maximizing ``Re Tr(env @ u)`` (over U(2^m)
    for variable and U3 gates, over the RZ family for RZ). With ``beta > 0``
    the environment is blended with the old gate's adjoint first.
    """
    env = np.ascontiguousarray(env, dtype=complex)
    dim = 1 << g.num_qubits
    if env.shape != (dim, dim):
        raise ValueError(f"environment shape {env.shape} does not fit {g.num_qubits}-qubit gate")
    if u_old is None:
        u_old = gate_unitary(g)
    code = _kind_code(g)
    if code == kernels.KIND_UNITARY:
        return kernels.polar_update(env, u_old, beta)
    if code == kernels.KIND_RZ:
        return kernels.rz_update(env, u_old, beta)
    raise ValueError(f"{g.kind.value} gates are not optimized")


def gate_from_unitary(g, u):
    """Map an optimized matrix back onto ``g``; returns ``(gate, dropped_phase)``."""
    if g.kind is GateKind.U3:
        theta, phi, lam, phase = unitary_to_u3(u)
        return g.with_params((theta, phi, lam)), phase
    if g.kind is GateKind.RZ:
        return g.with_params((cmath.phase(u[1, 1]),)), 0.0
    if g.kind is GateKind.VARIABLE:
        return g.with_matrix(u), 0.0
    return g, 0.0


class _SweepPlan:
    """Per-gate kernel inputs, computed once per instantiation."""

    def __init__(self, circuit, ct):
        self.kinds = np.array([_kind_code(g) for g in circuit.gates], dtype=np.int32)
        offs = [ct.offsets(g.location) for g in circuit.gates]
        self.loc_offs = [o[0] for o in offs]
        self.rest_offs = [o[1] for o in offs]


def two_sided_sweep(ct, circuit, unitaries, beta=0.0, _plan=None):
    """One QFactor iteration, in place on ``ct`` and ``unitaries``."""
    plan = _plan or _SweepPlan(circuit, ct)
    kernels.sweep(ct.data, unitaries, plan.kinds, plan.loc_offs, plan.rest_offs, float(beta))
    return ct, unitaries


def random_init(circuit, seed):
    """Circuit with randomized gate values; deterministic for a given seed."""
    rng = np.random.default_rng(seed)
    gates = []
    for g in circuit.gates:
        if g.kind is GateKind.VARIABLE:
            g = g.with_matrix(random_unitary(1 << g.num_qubits, rng))
        elif g.kind.is_parameterized:
            g = g.with_params(rng.uniform(-math.pi, math.pi, g.kind.param_count))
        gates.append(g)
    return Circuit(circuit.num_qubits, gates)


def _finish(circuit, target, mats, trace, it, reason, costs):
    gates, total_phase = [], 0.0
    for g, u in zip(circuit.gates, mats):
        new, phase = gate_from_unitary(g, u)
        gates.append(new)
        total_phase += phase
    dim = 1 << circuit.num_qubits
    delta = 1.0 - abs(trace) / dim
    # dropped U3 phases multiply the circuit by exp(-i total_phase)
    re_tr = (trace * cmath.exp(-1j * total_phase)).real
    frob = math.sqrt(max(0.0, 2.0 * dim - 2.0 * re_tr))
    return InstantiationResult(
        circuit=Circuit(circuit.num_qubits, gates),
        distance_delta=delta,
        distance_frob=frob,
        iterations=it,
        termination=reason,
        cost_trace=costs,
    )


def qfactor_instantiate(circuit, target, hyper=None, initial=None, deadline=None):
    """Run QFactor from one starting point.

    ``initial`` is a circuit with the same structure holding the starting
    gate values (defaults to ``circuit`` itself). ``deadline`` is a
    ``time.monotonic()`` value checked between iterations.

    The plateau checks compare successive costs ``c_i = 1 - |Tr(V^dagger U)| / N``.
    """
    hyper = hyper or HyperParams()
    start_time = time.monotonic()
    target = np.asarray(target, dtype=complex)
    dim = 1 << circuit.num_qubits
    if target.shape != (dim, dim):
        raise ValueError(f"target shape {target.shape} does not match {circuit.num_qubits}-qubit circuit")
    init = initial if initial is not None else circuit
    if len(init.gates) != len(circuit.gates):
        raise ValueError("initial values do not match the circuit structure")
    mats = [np.array(gate_unitary(g), dtype=complex, order="C") for g in init.gates]
    ct = init_circuit_tensor(target, circuit, mats)
    plan = _SweepPlan(circuit, ct)

    costs = []
    it = 0
    trace = ct.trace_all()
    reason = Termination.MAX_ITER
    if hyper.max_iter > 0:
        while True:
            if deadline is not None and time.monotonic() > deadline:
                reason = Termination.TIME_BUDGET
                break
            if it and it % hyper.reset_iter == 0:
                ct = reset(ct, target, circuit, mats)
            two_sided_sweep(ct, circuit, mats, hyper.beta, _plan=plan)
            it += 1
            trace = ct.trace_all()
            c = 1.0 - abs(trace) / dim
            costs.append(c)
            if c <= hyper.dist_tol and it >= hyper.min_iter:
                reason = Termination.DIST_TOL
                break
            if it >= hyper.max_iter:
                reason = Termination.MAX_ITER
                break
            if it <= hyper.min_iter:
                continue
            if len(costs) >= 2 and abs(costs[-2] - c) <= hyper.diff_tol_a + hyper.diff_tol_r * abs(c):
                reason = Termination.PLATEAU_SHORT
                break
            if it > hyper.long_diff_count:
                old = costs[-1 - hyper.long_diff_count]
                if old - c <= hyper.long_diff_r * abs(old):
                    reason = Termination.PLATEAU_LONG
                    break
    result = _finish(circuit, target, mats, trace, it, reason, costs)
    result.wall_time = time.monotonic() - start_time
    return result


def resolve_seed(seed):
    return secrets.randbits(31) if seed is None else int(seed)


def _run_start(args):
    circuit, target, hyper, start, seed, initial, deadline = args
    init = initial if initial is not None else random_init(circuit, seed)
    r = qfactor_instantiate(circuit, target, hyper, init, deadline)
    r.start, r.seed = start, seed
    return r


def _better(a, b):
    return b is None or a.distance_delta < b.distance_delta


def run_multistart(runner, circuit, target, hyper, warm_start=False, workers=1, deadline=None):
    """Shared multistart driver for both optimizers.

    Start ``i`` uses seed ``hyper.seed + i``. The first successful start (by
    index) wins; otherwise the lowest Delta. With ``warm_start`` an extra
    start from the circuit's current values runs first (index -1).
    """
    base = resolve_seed(hyper.seed)
    jobs = []
    if warm_start:
        jobs.append((circuit, target, hyper, -1, None, circuit, deadline))
    for i in range(hyper.multistarts):
        jobs.append((circuit, target, hyper, i, base + i, None, deadline))

    if workers <= 1 or len(jobs) == 1:
        best = None
        for job in jobs:
            r = runner(job)
            if r.success:
                return r
            if _better(r, best):
                best = r
        return best

    results = {}
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(runner, job): k for k, job in enumerate(jobs)}
        first_success = None
        for fut in as_completed(futures):
            k = futures[fut]
            if fut.cancelled():
                continue
            r = fut.result()
            results[k] = r
            if r.success and (first_success is None or k < first_success):
                first_success = k
                # later starts cannot be chosen any more
                for f, j in futures.items():
                    if j > k:
                        f.cancel()
    if first_success is not None:
        return results[first_success]
    best = None
    for k in sorted(results):
        if _better(results[k], best):
            best = results[k]
    return best


def multistart_instantiate(circuit, target, hyper=None, warm_start=False, workers=1, deadline=None):
    """QFactor from ``hyper.multistarts`` seeded random initializations."""
    hyper = hyper or HyperParams()
    return run_multistart(_run_start, circuit, target, hyper, warm_start, workers, deadline)
