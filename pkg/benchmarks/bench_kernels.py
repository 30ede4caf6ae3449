"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Times the SVD gate update, one two-sided sweep, and a full single-start
instantiation for each available backend, and reports the speedup.
"""
import argparse
import json
import time

import numpy as np

from unifactor import kernels
from unifactor.circuit import circuit_unitary, gate_unitary
from unifactor.generators import gen_benchmark
from unifactor.qfactor import HyperParams, _SweepPlan, qfactor_instantiate, random_init
from unifactor.tensor import init_circuit_tensor


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_svd(impl, dim, reps, rng):
    mats = [rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)) for _ in range(reps)]
    return lambda: [impl.jacobi_svd(m) for m in mats]


def bench_sweep(impl, n, depth, sweeps):
    c = gen_benchmark("tfim", n, depth, seed=0)
    v = circuit_unitary(random_init(c, 1))
    init = random_init(c, 2)

    def run():
        mats = [np.array(gate_unitary(g), dtype=complex) for g in init.gates]
        ct = init_circuit_tensor(v, c, mats)
        plan = _SweepPlan(c, ct)
        for _ in range(sweeps):
            impl.sweep(ct.data, mats, plan.kinds, plan.loc_offs, plan.rest_offs, 0.0)
    return run


def bench_instantiate(impl, n, depth):
    c = gen_benchmark("random", n, depth, seed=3)
    v = circuit_unitary(random_init(c, 4))
    init = random_init(c, 5)

    def run():
        saved = {name: getattr(kernels, name) for name in kernels._NAMES}
        for name in kernels._NAMES:
            setattr(kernels, name, getattr(impl, name))
        try:
            qfactor_instantiate(c, v, HyperParams(max_iter=200), init)
        finally:
            for name, fn in saved.items():
                setattr(kernels, name, fn)
    return run


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="write results here")
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    cases = [
        ("svd 2x2 x1000", lambda impl: bench_svd(impl, 2, 1000, rng)),
        ("svd 4x4 x1000", lambda impl: bench_svd(impl, 4, 1000, rng)),
        ("sweep tfim(3,4) x50", lambda impl: bench_sweep(impl, 3, 4, 50)),
        ("sweep tfim(6,4) x20", lambda impl: bench_sweep(impl, 6, 4, 20)),
        ("instantiate random(4, 10) 200 it", lambda impl: bench_instantiate(impl, 4, 10)),
    ]
    backends = kernels.available_backends()
    rows = []
    print(f"{'case':36s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for label, make in cases:
        t = {b: best_of(make(kernels.load_backend(b)), args.repeat) for b in backends}
        row = {"case": label, **{f"{b}_s": t[b] for b in backends}}
        line = f"{label:36s}" + "".join(f"{t[b]:12.4f}" for b in backends)
        if len(backends) > 1:
            row["speedup"] = t["python"] / t["cython"]
            line += f"{row['speedup']:11.1f}x"
        rows.append(row)
        print(line, flush=True)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
