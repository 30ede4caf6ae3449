"""Command-line entry point: instantiate, optimize, gen, verify.

Exit codes: 0 success, 1 usage or I/O error, 2 the algorithm ran but did not
reach its goal.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time

import numpy as np

from unifactor import __version__
from unifactor.circuit import circuit_unitary
from unifactor.distance import distance_delta, distance_delta_f, distance_delta_p
from unifactor.generators import FAMILIES, gen_benchmark
from unifactor.linalg import load_umat
from unifactor.qasm import QasmError, parse_qasm, write_qasm
from unifactor.qfactor import HyperParams, multistart_instantiate, resolve_seed

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2
VERIFY_MAX_QUBITS = 10


class CliError(Exception):
    """Usage or I/O problem; reported on stderr with exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(f"{self.prog}: {message}")


def _read_bytes(path):
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _load_circuit(path, inputs, name):
    data = _read_bytes(path)
    inputs[name] = {"path": path, "sha256": hashlib.sha256(data).hexdigest()}
    try:
        return parse_qasm(data.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise CliError(f"{path}: not a text file") from exc
    except QasmError as exc:
        raise CliError(f"{path}: {exc}") from exc


def _load_target(path, inputs):
    data = _read_bytes(path)
    inputs["target"] = {"path": path, "sha256": hashlib.sha256(data).hexdigest()}
    try:
        return load_umat(json.loads(data))
    except (ValueError, TypeError) as exc:
        raise CliError(f"{path}: {exc}") from exc


def _write_text(path, text):
    """Write atomically: temp file in the same directory, then rename."""
    d = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=d, prefix=".unifactor-")
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _positive_int(s):
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {s!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _default_workers():
    raw = os.environ.get("UNIFACTOR_WORKERS")
    if raw is None:
        return 1
    try:
        return _positive_int(raw)
    except argparse.ArgumentTypeError as exc:
        raise CliError(f"UNIFACTOR_WORKERS: {exc}") from None


def _add_hyper_flags(p):
    d = HyperParams()
    p.add_argument("--dist-tol", type=float, default=d.dist_tol)
    p.add_argument("--diff-tol-a", type=float, default=d.diff_tol_a)
    p.add_argument("--diff-tol-r", type=float, default=d.diff_tol_r)
    p.add_argument("--long-diff-count", type=int, default=d.long_diff_count)
    p.add_argument("--long-diff-r", type=float, default=d.long_diff_r)
    p.add_argument("--min-iter", type=int, default=d.min_iter)
    p.add_argument("--max-iter", type=int, default=d.max_iter)
    p.add_argument("--reset-iter", type=int, default=d.reset_iter)
    p.add_argument("--multistarts", type=int, default=d.multistarts)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--beta", type=float, default=d.beta)
    p.add_argument("--optimizer", choices=("qfactor", "lbfgs"), default="qfactor")
    p.add_argument("--time-budget", type=float, default=None, metavar="SEC")
    p.add_argument("--workers", type=_positive_int, default=None)


def _hyper_from(args, seed):
    try:
        return HyperParams(
            dist_tol=args.dist_tol, diff_tol_a=args.diff_tol_a, diff_tol_r=args.diff_tol_r,
            long_diff_count=args.long_diff_count, long_diff_r=args.long_diff_r,
            min_iter=args.min_iter, max_iter=args.max_iter, reset_iter=args.reset_iter,
            multistarts=args.multistarts, seed=seed, beta=args.beta,
        )
    except ValueError as exc:
        raise CliError(f"invalid hyperparameters: {exc}") from exc


def _base_report(command, seed):
    return {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "command": command,
        "inputs": {},
        "hyperparameters": None,
        "seed": seed,
        "results": [],
        "gate_counts": {},
        "timings_ms": {},
    }


def _deadline(args, t0):
    if args.time_budget is None:
        return None
    if not args.time_budget > 0:
        raise CliError("--time-budget must be positive")
    return t0 + args.time_budget


def cmd_instantiate(args, report):
    t0 = time.monotonic()
    circuit = _load_circuit(args.circuit, report["inputs"], "circuit")
    if args.target == "self":
        target = circuit_unitary(circuit)
        report["inputs"]["target"] = "self"
    else:
        target = _load_target(args.target, report["inputs"])
    dim = 1 << circuit.num_qubits
    if target.shape != (dim, dim):
        raise CliError(
            f"dimension mismatch: circuit has {circuit.num_qubits} qubits, target is {target.shape[0]}x{target.shape[1]}"
        )
    hyper = _hyper_from(args, report["seed"])
    report["hyperparameters"] = {**hyper.to_dict(), "optimizer": args.optimizer}
    workers = args.workers or _default_workers()
    deadline = _deadline(args, t0)
    t1 = time.monotonic()
    report["timings_ms"]["load"] = 1e3 * (t1 - t0)
    if args.optimizer == "lbfgs":
        from unifactor.baseline import baseline_instantiate as run
    else:
        run = multistart_instantiate
    try:
        result = run(circuit, target, hyper, workers=workers, deadline=deadline)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    report["timings_ms"]["instantiate"] = 1e3 * (time.monotonic() - t1)
    report["results"].append(result.summary())
    report["gate_counts"] = {"input": circuit.gate_counts(), "output": result.circuit.gate_counts()}
    print(f"termination={result.termination.value} delta={result.distance_delta:.3e} "
          f"iterations={result.iterations} start={result.start}")
    if args.out_circuit:
        _write_text(args.out_circuit, write_qasm(result.circuit))
    return EXIT_OK if result.success else EXIT_FAIL


def cmd_optimize(args, report):
    from unifactor.compile import optimize_circuit

    t0 = time.monotonic()
    circuit = _load_circuit(args.circuit, report["inputs"], "circuit")
    _deadline(args, t0)
    k = args.block_size
    if k > circuit.num_qubits:
        print(f"warning: block size {k} exceeds {circuit.num_qubits} qubits; using {circuit.num_qubits}",
              file=sys.stderr)
        k = circuit.num_qubits
    hyper = _hyper_from(args, report["seed"])
    report["hyperparameters"] = {**hyper.to_dict(), "optimizer": args.optimizer, "block_size": k}
    workers = args.workers or _default_workers()
    verify = args.verify
    if verify and circuit.num_qubits > VERIFY_MAX_QUBITS:
        raise CliError(f"--verify needs at most {VERIFY_MAX_QUBITS} qubits")
    t1 = time.monotonic()
    report["timings_ms"]["load"] = 1e3 * (t1 - t0)
    try:
        out, rep = optimize_circuit(
            circuit, k, args.optimizer, hyper, args.time_budget, workers,
            verify=verify, until_fixpoint=args.fixpoint,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    report["timings_ms"]["optimize"] = 1e3 * (time.monotonic() - t1)
    report["optimize"] = rep.to_dict()
    report["gate_counts"] = {"input": rep.gate_counts_before, "output": rep.gate_counts_after}
    red = rep.reduction_pct()
    print(f"partitions={rep.num_partitions} deleted={rep.deleted} "
          f"u3_reduction={red['U3']:.1f}% cnot_reduction={red['CNOT']:.1f}%"
          + (" partial" if rep.partial else ""))
    if args.out_circuit:
        _write_text(args.out_circuit, write_qasm(out))
    return EXIT_OK


def cmd_gen(args, report):
    t0 = time.monotonic()
    try:
        c = gen_benchmark(args.family, args.qubits, args.depth, args.seed)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    text = write_qasm(c)
    report["hyperparameters"] = {"family": args.family, "qubits": args.qubits, "depth": args.depth}
    report["gate_counts"] = {"output": c.gate_counts()}
    report["output_sha256"] = hashlib.sha256(text.encode()).hexdigest()
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    report["timings_ms"]["gen"] = 1e3 * (time.monotonic() - t0)
    return EXIT_OK


def cmd_verify(args, report):
    t0 = time.monotonic()
    if (args.circuit_b is None) == (args.target is None):
        raise CliError("give exactly one of --circuit-b or --target")
    a = _load_circuit(args.circuit_a, report["inputs"], "circuit_a")
    if a.num_qubits > VERIFY_MAX_QUBITS:
        raise CliError(f"verify supports at most {VERIFY_MAX_QUBITS} qubits, circuit has {a.num_qubits}")
    if args.circuit_b is not None:
        b = _load_circuit(args.circuit_b, report["inputs"], "circuit_b")
        if b.num_qubits != a.num_qubits:
            raise CliError(f"qubit count mismatch: {a.num_qubits} vs {b.num_qubits}")
        v = circuit_unitary(b)
    else:
        v = _load_target(args.target, report["inputs"])
        if v.shape[0] != 1 << a.num_qubits:
            raise CliError(f"qubit count mismatch: circuit has {a.num_qubits}, target has "
                           f"{v.shape[0].bit_length() - 1}")
    u = circuit_unitary(a)
    dist = {
        "delta": distance_delta(u, v),
        "delta_f": distance_delta_f(u, v),
        "delta_p": distance_delta_p(u, v),
        # direct norm; the trace identity loses precision near zero
        "frobenius": float(np.linalg.norm(u - v)),
    }
    report["verify"] = {**dist, "tol": args.tol}
    report["gate_counts"] = {"circuit_a": a.gate_counts()}
    report["timings_ms"]["verify"] = 1e3 * (time.monotonic() - t0)
    for key, val in dist.items():
        print(f"{key}={val:.6e}")
    return EXIT_OK if dist["delta"] <= args.tol else EXIT_FAIL


def build_parser():
    p = _Parser(prog="unifactor", description="Unitary-level circuit instantiation and optimization.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("instantiate", help="fit a circuit's gate values to a target unitary")
    s.add_argument("--circuit", required=True)
    s.add_argument("--target", required=True, help='umat-json path or "self"')
    _add_hyper_flags(s)
    s.add_argument("--out", help="report path")
    s.add_argument("--out-circuit", help="write the instantiated circuit as QASM")
    s.set_defaults(func=cmd_instantiate)

    s = sub.add_parser("optimize", help="partition and delete redundant gates")
    s.add_argument("--circuit", required=True)
    s.add_argument("--block-size", type=_positive_int, default=3)
    _add_hyper_flags(s)
    s.add_argument("--verify", action=argparse.BooleanOptionalAction, default=None,
                   help="full-circuit check (default: on for <= 8 qubits)")
    s.add_argument("--fixpoint", action="store_true", help="repeat deletion sweeps until nothing changes")
    s.add_argument("--out", help="report path")
    s.add_argument("--out-circuit", help="optimized QASM path")
    s.set_defaults(func=cmd_optimize)

    s = sub.add_parser("gen", help="write a benchmark circuit")
    s.add_argument("--family", required=True, choices=FAMILIES)
    s.add_argument("--qubits", type=_positive_int, required=True)
    s.add_argument("--depth", type=_positive_int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="QASM path (default: stdout)")
    s.add_argument("--report", help="report path")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("verify", help="distance between two circuits or a circuit and a unitary")
    s.add_argument("--circuit-a", required=True)
    s.add_argument("--circuit-b")
    s.add_argument("--target", help="umat-json path")
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--out", help="report path")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        seed = getattr(args, "seed", None)
        if args.command in ("instantiate", "optimize"):
            seed = resolve_seed(seed)
        report = _base_report(args.command, seed)
        code = args.func(args, report)
        report["exit_code"] = code
        path = args.report if args.command == "gen" else args.out
        if path:
            _write_text(path, json.dumps(report, indent=2, sort_keys=True) + "\n")
        return code
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
