import numpy as np
import pytest

from unifactor.circuit import circuit_unitary, gate_unitary
from unifactor.generators import gen_benchmark
from unifactor.qfactor import random_init
from unifactor.tensor import CircuitTensor, init_circuit_tensor, reset
from tests.oracles import haar_unitary


@pytest.fixture
def instance():
    c = gen_benchmark("random", 3, 5, seed=2)
    target = circuit_unitary(random_init(c, 8))
    return c, target


class TestCircuitTensor:
    def test_init_trace_matches_dense(self, backend, instance):
        c, v = instance
        ct = init_circuit_tensor(v, c)
        assert ct.trace_all() == pytest.approx(np.trace(v.conj().T @ circuit_unitary(c)), abs=1e-12)
        np.testing.assert_allclose(ct.data, circuit_unitary(c) @ v.conj().T, atol=1e-12)

    def test_every_environment_reproduces_trace(self, backend, instance):
        c, v = instance
        mats = [gate_unitary(g) for g in c.gates]
        ct = init_circuit_tensor(v, c, mats)
        full = np.trace(v.conj().T @ circuit_unitary(c))
        # move gates from the left end to the right end one by one
        for g, u in zip(reversed(c.gates), reversed(mats)):
            ct.apply_left(u, g.location, inverse=True)
            env = ct.calc_env_mat(g.location)
            assert np.trace(env @ u) == pytest.approx(full, abs=1e-10)
            ct.apply_right(u, g.location)

    def test_applied_count(self, instance):
        c, v = instance
        ct = init_circuit_tensor(v, c)
        assert ct.applied_count == {"left": len(c.gates), "right": 0}
        g = c.gates[0]
        ct.apply_right(gate_unitary(g), g.location)
        assert ct.applied_count["right"] == 1

    def test_reset_clears_drift(self, backend, rng, instance):
        c, v = instance
        mats = [gate_unitary(g) for g in c.gates]
        ct = init_circuit_tensor(v, c, mats)
        for _ in range(2000):
            u = haar_unitary(4, rng)
            ct.apply_left(u, (0, 2))
            ct.apply_left(u, (0, 2), inverse=True)
        drift = np.max(np.abs(ct.data - circuit_unitary(c) @ v.conj().T))
        ct = reset(ct, v, c, mats)
        assert np.max(np.abs(ct.data - circuit_unitary(c) @ v.conj().T)) <= drift + 1e-15
        assert np.max(np.abs(ct.data - circuit_unitary(c) @ v.conj().T)) < 1e-12

    def test_copy_independent(self, instance):
        c, v = instance
        ct = init_circuit_tensor(v, c)
        cp = ct.copy()
        cp.data[0, 0] += 1
        assert ct.data[0, 0] != cp.data[0, 0]

    def test_bad_location(self):
        ct = CircuitTensor(np.eye(4), 2)
        with pytest.raises(ValueError, match="invalid"):
            ct.apply_left(np.eye(2), (2,))
        with pytest.raises(ValueError, match="does not fit"):
            ct.apply_left(np.eye(4), (0,))

    def test_target_shape(self, instance):
        c, _ = instance
        with pytest.raises(ValueError, match="does not match"):
            init_circuit_tensor(np.eye(4), c)
