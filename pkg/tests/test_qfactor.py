import math
import time

import numpy as np
import pytest

from unifactor.circuit import Circuit, GateKind, LocatedGate, circuit_unitary, gate_unitary, u3_matrix
from unifactor.distance import distance_delta
from unifactor.generators import gen_benchmark
from unifactor.qfactor import (
    HyperParams,
    Termination,
    gate_from_unitary,
    multistart_instantiate,
    optimize_gate,
    qfactor_instantiate,
    random_init,
    resolve_seed,
    two_sided_sweep,
)
from unifactor.tensor import init_circuit_tensor
from tests.oracles import haar_unitary, random_env


def self_instance(family="random", n=3, depth=6, seed=0):
    c = gen_benchmark(family, n, depth, seed=seed)
    return c, circuit_unitary(random_init(c, 1000 + seed))


def trace_history(c, target, sweeps, beta=0.0, seed=1):
    init = random_init(c, seed)
    mats = [np.array(gate_unitary(g), dtype=complex) for g in init.gates]
    ct = init_circuit_tensor(target, c, mats)
    hist = [ct.trace_all().real]
    for _ in range(sweeps):
        two_sided_sweep(ct, c, mats, beta)
        hist.append(ct.trace_all().real)
    return np.array(hist), mats


class TestOptimizeGate:
    @pytest.mark.parametrize("qubits", [(0,), (0, 1), (0, 1, 2)])
    def test_beats_random_unitaries(self, backend, rng, qubits):
        g = LocatedGate(GateKind.VARIABLE, qubits, matrix=np.eye(1 << len(qubits)))
        env = random_env(1 << len(qubits), rng)
        u = optimize_gate(g, env)
        best = np.trace(env @ u).real
        assert best == pytest.approx(np.linalg.svd(env, compute_uv=False).sum(), abs=1e-9)
        for _ in range(300):
            assert np.trace(env @ haar_unitary(len(env), rng)).real <= best + 1e-10

    def test_rz_beats_grid(self, backend, rng):
        g = LocatedGate(GateKind.RZ, (0,), (0.0,))
        grid = np.linspace(-math.pi, math.pi, 2001)
        for _ in range(20):
            env = random_env(2, rng)
            u = optimize_gate(g, env)
            assert abs(u[0, 0] - 1) < 1e-15 and abs(abs(u[1, 1]) - 1) < 1e-12
            best = np.trace(env @ u).real
            vals = env[0, 0].real + (env[1, 1] * np.exp(1j * grid)).real
            assert best >= vals.max() - 1e-12

    def test_u3_update_is_u2_then_angles(self, rng):
        g = LocatedGate(GateKind.U3, (0,), (0.1, 0.2, 0.3))
        env = random_env(2, rng)
        u = optimize_gate(g, env)
        new, phase = gate_from_unitary(g, u)
        np.testing.assert_allclose(u3_matrix(*new.params) * np.exp(1j * phase), u, atol=1e-10)

    def test_beta_one_keeps_gate(self, backend, rng):
        u_old = haar_unitary(4, rng)
        g = LocatedGate(GateKind.VARIABLE, (0, 1), matrix=u_old)
        np.testing.assert_allclose(optimize_gate(g, random_env(4, rng), beta=1.0), u_old, atol=1e-12)

    def test_fixed_gate_rejected(self):
        with pytest.raises(ValueError, match="not optimized"):
            optimize_gate(LocatedGate(GateKind.CNOT, (0, 1)), np.eye(4))

    def test_env_shape(self):
        with pytest.raises(ValueError, match="does not fit"):
            optimize_gate(LocatedGate(GateKind.RZ, (0,), (0.0,)), np.eye(4))


class TestSweep:
    def test_monotone(self, backend):
        c, v = self_instance(seed=3)
        hist, _ = trace_history(c, v, 60)
        assert np.all(np.diff(hist) >= -1e-9)

    def test_beta_one_is_noop(self, backend):
        c, v = self_instance(seed=4)
        hist, mats = trace_history(c, v, 3, beta=1.0)
        before = [gate_unitary(g) for g in random_init(c, 1).gates]
        for a, b in zip(mats, before):
            np.testing.assert_allclose(a, b, atol=1e-10)
        assert np.ptp(hist) < 1e-10

    def test_backends_agree(self):
        from unifactor import kernels
        if len(kernels.available_backends()) < 2:
            pytest.skip("compiled backend not built")
        c, v = self_instance(seed=5)
        init = random_init(c, 2)
        out = []
        for name in ("cython", "python"):
            impl = kernels.load_backend(name)
            mats = [np.array(gate_unitary(g), dtype=complex) for g in init.gates]
            ct = init_circuit_tensor(v, c, mats)
            from unifactor.qfactor import _SweepPlan
            plan = _SweepPlan(c, ct)
            for _ in range(5):
                impl.sweep(ct.data, mats, plan.kinds, plan.loc_offs, plan.rest_offs, 0.0)
            out.append(ct.trace_all())
        assert out[0] == pytest.approx(out[1], abs=1e-10)


class TestInstantiate:
    def test_self_instantiation(self, backend):
        c, v = self_instance(seed=6)
        r = multistart_instantiate(c, v, HyperParams(seed=1))
        assert r.success and r.termination is Termination.DIST_TOL
        assert distance_delta(circuit_unitary(r.circuit), v) <= 1e-10 + 1e-12

    def test_reported_distances_match_circuit(self):
        c, v = self_instance(family="tfim", n=2, depth=2, seed=1)
        r = multistart_instantiate(c, v, HyperParams(seed=3))
        u = circuit_unitary(r.circuit)
        assert r.distance_delta == pytest.approx(distance_delta(u, v), abs=1e-12)
        assert r.distance_frob == pytest.approx(np.linalg.norm(u - v), abs=1e-8)

    def test_variable_unitary_block(self, rng):
        c = Circuit(2)
        c.add(GateKind.VARIABLE, (0, 1), matrix=np.eye(4))
        v = haar_unitary(4, rng)
        r = qfactor_instantiate(c, v)
        assert r.success and r.iterations == 1

    def test_max_iter(self):
        c, v = self_instance(seed=7)
        r = qfactor_instantiate(c, v, HyperParams(max_iter=3, diff_tol_r=0), random_init(c, 0))
        assert r.termination is Termination.MAX_ITER and r.iterations == 3

    def test_max_iter_zero(self):
        c, v = self_instance(seed=7)
        r = qfactor_instantiate(c, v, HyperParams(max_iter=0))
        assert r.termination is Termination.MAX_ITER and r.iterations == 0

    def unreachable(self):
        c = Circuit(2)
        c.add(GateKind.U3, (0,), (0.1, 0.2, 0.3))
        return c, gate_unitary(LocatedGate(GateKind.CNOT, (0, 1)))

    def test_plateau_short(self):
        c, v = self.unreachable()
        r = qfactor_instantiate(c, v)
        assert r.termination is Termination.PLATEAU_SHORT

    def test_plateau_long(self):
        # cost still falls every sweep, but by less than 100% over 2 sweeps
        c, v = self_instance(seed=15)
        hyper = HyperParams(diff_tol_r=0.0, long_diff_count=2, long_diff_r=1.0)
        r = qfactor_instantiate(c, v, hyper, random_init(c, 0))
        assert r.termination is Termination.PLATEAU_LONG and r.iterations == 3

    def test_min_iter_delays_plateau(self):
        c, v = self.unreachable()
        r = qfactor_instantiate(c, v, HyperParams(min_iter=7))
        assert r.iterations >= 8

    def test_time_budget(self):
        c, v = self_instance(seed=8)
        r = qfactor_instantiate(c, v, deadline=time.monotonic() - 1)
        assert r.termination is Termination.TIME_BUDGET and r.iterations == 0

    def test_cost_trace(self):
        c, v = self_instance(seed=9)
        r = qfactor_instantiate(c, v, HyperParams(max_iter=20), random_init(c, 1))
        assert len(r.cost_trace) == r.iterations
        assert r.cost_trace[-1] == pytest.approx(r.distance_delta, abs=1e-12)

    def test_reset_every_iteration_agrees(self):
        c, v = self_instance(seed=10)
        a = qfactor_instantiate(c, v, HyperParams(reset_iter=1), random_init(c, 4))
        b = qfactor_instantiate(c, v, HyperParams(reset_iter=40), random_init(c, 4))
        assert abs(a.distance_delta - b.distance_delta) < 1e-8

    def test_structure_mismatch(self):
        c, v = self_instance(seed=11)
        with pytest.raises(ValueError, match="structure"):
            qfactor_instantiate(c, v, initial=Circuit(3))
        with pytest.raises(ValueError, match="does not match"):
            qfactor_instantiate(c, np.eye(4))


class TestMultistart:
    def test_deterministic(self):
        c, v = self_instance(family="tfim", seed=12, depth=2)
        a = multistart_instantiate(c, v, HyperParams(seed=5))
        b = multistart_instantiate(c, v, HyperParams(seed=5))
        assert a.summary() == b.summary()
        assert a.circuit == b.circuit

    def test_seed_scheme(self):
        c, v = self.hard()
        r = multistart_instantiate(c, v, HyperParams(seed=40, multistarts=3, max_iter=5))
        assert r.seed == 40 + r.start

    def hard(self):
        c = Circuit(2)
        c.add(GateKind.U3, (0,), (0.1, 0.2, 0.3))
        return c, gate_unitary(LocatedGate(GateKind.CNOT, (0, 1)))

    def test_warm_start_first(self):
        c, v = self_instance(seed=13)
        perfect = random_init(c, 1013)
        r = multistart_instantiate(perfect, v, HyperParams(seed=0), warm_start=True)
        assert r.start == -1 and r.success

    @pytest.mark.slow
    def test_workers_match_sequential(self):
        c, v = self_instance(family="tfim", seed=14, depth=2)
        a = multistart_instantiate(c, v, HyperParams(seed=2))
        b = multistart_instantiate(c, v, HyperParams(seed=2), workers=2)
        assert a.summary() == b.summary()

    def test_resolve_seed(self):
        assert resolve_seed(17) == 17
        assert 0 <= resolve_seed(None) < 2**31


class TestHyperParams:
    @pytest.mark.parametrize("kwargs", [
        dict(dist_tol=0), dict(max_iter=-1), dict(min_iter=5, max_iter=2), dict(beta=1.5),
        dict(reset_iter=0), dict(multistarts=0), dict(long_diff_count=0),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            HyperParams(**kwargs)

    def test_defaults(self):
        h = HyperParams()
        assert (h.dist_tol, h.diff_tol_r, h.long_diff_count, h.reset_iter, h.multistarts) == (1e-10, 1e-5, 100, 40, 8)
