"""General-purpose baseline: analytic gradients over gate angles plus L-BFGS.

The objective is ``1 - Re Tr(V^dagger C(alpha)) / N``. Its gradient comes from
one pass that moves each gate from one side of ``V^dagger U`` to the other,
the same bookkeeping the QFactor sweep uses, so a full gradient costs about
as much as one cost evaluation.
"""
import math
import time
from collections import deque

import numpy as np

from unifactor.circuit import GateKind, circuit_unitary, gate_grad, gate_unitary
from unifactor.distance import distance_delta, frob_cost
from unifactor.qfactor import HyperParams, InstantiationResult, Termination, random_init, run_multistart
from unifactor.tensor import CircuitTensor


def cost_and_grad(circuit, params, target):
    """Return ``(cost, grad)`` for the Re-trace distance at ``params``."""
    params = np.asarray(params, dtype=float)
    if params.shape != (circuit.num_params,):
        raise ValueError(f"expected {circuit.num_params} params, got shape {params.shape}")
    c = circuit.with_params(params)
    target = np.asarray(target, dtype=complex)
    n = c.num_qubits
    dim = 1 << n
    if target.shape != (dim, dim):
        raise ValueError(f"target shape {target.shape} does not match {n}-qubit circuit")

    mats = [gate_unitary(g) for g in c.gates]
    # T = V^dagger g_p ... g_1
    ct = CircuitTensor(target.conj().T.copy(), n)
    for g, u in zip(reversed(c.gates), reversed(mats)):
        ct.apply_right(u, g.location)
    cost = 1.0 - ct.trace_all().real / dim

    grad = np.zeros(len(params))
    k = 0
    for g, u in zip(c.gates, mats):
        # T = g_{j-1}..g_1 V^dagger g_p..g_j ; peel g_j off the right
        ct.apply_right(u, g.location, inverse=True)
        if g.kind.param_count:
            env = ct.calc_env_mat(g.location)
            for d in gate_grad(g):
                grad[k] = -np.sum(env * d.T).real / dim
                k += 1
        ct.apply_left(u, g.location)
    return cost, grad


def _two_loop(grad, s_hist, y_hist):
    q = grad.copy()
    alphas = []
    for s, y in zip(reversed(s_hist), reversed(y_hist)):
        rho = 1.0 / np.dot(y, s)
        a = rho * np.dot(s, q)
        alphas.append((rho, a))
        q -= a * y
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        q *= np.dot(s, y) / np.dot(y, y)
    for (s, y), (rho, a) in zip(zip(s_hist, y_hist), reversed(alphas)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return q


def lbfgs_minimize(objective, x0, memory=10, max_evals=10_000, grad_tol=1e-10, cost_tol=None,
                   f_tol=1e-9, armijo=1e-4, backtrack=0.5, deadline=None, callback=None):
    """Minimize ``objective(x) -> (f, g)`` with L-BFGS and Armijo backtracking.

    Stops when the largest gradient entry is below ``grad_tol``, the cost is
    below ``cost_tol``, or one step lowers the cost by less than
    ``f_tol * max(1, |f|)``. Returns ``(x, f, status, iterations)`` with
    status one of ``"grad_tol"``, ``"cost_tol"``, ``"f_tol"``,
    ``"max_evals"``, ``"line_search"`` or ``"deadline"``. Accepted steps
    never increase the cost; ``callback(x, f)`` sees each one.
    """
    x = np.array(x0, dtype=float)
    f, g = objective(x)
    evals = 1
    s_hist, y_hist = deque(maxlen=memory), deque(maxlen=memory)
    iters = 0
    while True:
        if not (np.isfinite(f) and np.all(np.isfinite(g))):
            raise ValueError("objective returned a non-finite cost or gradient")
        if cost_tol is not None and f <= cost_tol:
            return x, f, "cost_tol", iters
        if np.max(np.abs(g), initial=0.0) <= grad_tol:
            return x, f, "grad_tol", iters
        if evals >= max_evals:
            return x, f, "max_evals", iters
        if deadline is not None and time.monotonic() > deadline:
            return x, f, "deadline", iters

        d = -_two_loop(g, s_hist, y_hist)
        slope = np.dot(g, d)
        if slope >= 0:
            s_hist.clear()
            y_hist.clear()
            d = -g
            slope = -np.dot(g, g)
        step = 1.0 if s_hist else min(1.0, 1.0 / math.sqrt(-slope))
        while True:
            x_new = x + step * d
            f_new, g_new = objective(x_new)
            evals += 1
            if np.isfinite(f_new) and f_new <= f + armijo * step * slope:
                break
            step *= backtrack
            if step < 1e-20 or evals >= max_evals:
                return x, f, "line_search" if step < 1e-20 else "max_evals", iters
        s = x_new - x
        y = g_new - g
        if np.dot(s, y) > 1e-16 * np.dot(y, y):
            s_hist.append(s)
            y_hist.append(y)
        stalled = f - f_new <= f_tol * abs(f)
        x, f, g = x_new, f_new, g_new
        iters += 1
        if callback is not None:
            callback(x, f)
        if stalled and not (cost_tol is not None and f <= cost_tol):
            return x, f, "f_tol", iters


def _status_to_termination(status, delta, dist_tol):
    if delta <= dist_tol:
        return Termination.DIST_TOL
    return {
        "max_evals": Termination.MAX_ITER,
        "deadline": Termination.TIME_BUDGET,
    }.get(status, Termination.PLATEAU_SHORT)


def _single_start(circuit, target, hyper, initial, deadline):
    start = time.monotonic()
    x0 = initial.params()
    costs = []

    def objective(x):
        f, g = cost_and_grad(circuit, x, target)
        costs.append(f)
        return f, g

    x, _, status, iters = lbfgs_minimize(
        objective, x0, max_evals=max(1, hyper.max_iter), cost_tol=hyper.dist_tol, deadline=deadline
    ) if hyper.max_iter > 0 else (x0, None, "max_evals", 0)
    final = circuit.with_params(x)
    u = circuit_unitary(final)
    delta = distance_delta(u, target)
    return InstantiationResult(
        circuit=final,
        distance_delta=delta,
        distance_frob=math.sqrt(max(0.0, frob_cost(u, target))),
        iterations=iters,
        termination=_status_to_termination(status, delta, hyper.dist_tol),
        cost_trace=costs,
        wall_time=time.monotonic() - start,
    )


def _run_start(args):
    circuit, target, hyper, start, seed, initial, deadline = args
    init = initial if initial is not None else random_init(circuit, seed)
    r = _single_start(circuit, target, hyper, init, deadline)
    r.start, r.seed = start, seed
    return r


def baseline_instantiate(circuit, target, hyper=None, warm_start=False, workers=1, deadline=None):
    """Multistart L-BFGS with the same seeding and result type as QFactor.

    ``hyper.max_iter`` caps objective evaluations per start.
    """
    hyper = hyper or HyperParams()
    if any(g.kind is GateKind.VARIABLE for g in circuit.gates):
        raise ValueError("the gradient baseline needs parameterized gates, not variable unitaries")
    return run_multistart(_run_start, circuit, np.asarray(target, dtype=complex), hyper,
                          warm_start, workers, deadline)
