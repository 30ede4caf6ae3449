"""Partition, delete-and-reinstantiate, reassemble.

Blocks come from a greedy scan over the gate list. Each block is optimized on
its own by removing one gate at a time and re-instantiating the rest to the
block's original unitary; removals that keep the block within ``dist_tol``
are kept.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from unifactor.circuit import Circuit, circuit_unitary
from unifactor.distance import distance_delta
from unifactor.qfactor import HyperParams, multistart_instantiate, resolve_seed

MAX_BLOCK = 8
VERIFY_MAX_QUBITS = 8


@dataclass
class Partition:
    qubit_subset: tuple
    gate_indices: list
    local_circuit: Circuit
    # index in the parent of the block's first gate
    boundary: int

    def to_parent(self, local_circuit=None):
        """Gates of ``local_circuit`` (default: own) relabeled to parent qubits."""
        local = self.local_circuit if local_circuit is None else local_circuit
        return [g.with_location(tuple(self.qubit_subset[q] for q in g.location)) for g in local.gates]


class _Block:
    def __init__(self):
        self.qubits = set()
        self.gates = []


def _close(block, open_blocks, owner, closed):
    open_blocks.remove(block)
    for q in block.qubits:
        if owner.get(q) is block:
            del owner[q]
    closed.append(block)


def partition_circuit(c, k):
    """Split ``c`` into blocks of at most ``k`` qubits.

    Walk the gates in order. A gate joins the open block already owning its
    qubits when the union fits in ``k``; a gate on unowned qubits joins the
    first open block with room. Otherwise the blocking owners are closed and
    a new block starts. Blocks are returned in closing order, which is a
    valid dependency order.
    """
    if c.gates:
        widest = max(g.num_qubits for g in c.gates)
        if k < widest:
            raise ValueError(f"block size {k} is smaller than the widest gate ({widest} qubits)")
    if k < 1:
        raise ValueError("block size must be positive")
    k = min(k, c.num_qubits)

    open_blocks, closed = [], []
    owner = {}
    for idx, g in enumerate(c.gates):
        qs = set(g.location)
        owners = []
        for q in g.location:
            b = owner.get(q)
            if b is not None and b not in owners:
                owners.append(b)
        target = None
        if owners:
            union = set(qs).union(*(b.qubits for b in owners))
            if len(union) <= k:
                # merging independent open blocks keeps dependency order intact
                target = owners[0]
                for b in owners[1:]:
                    target.gates.extend(b.gates)
                    target.qubits |= b.qubits
                    open_blocks.remove(b)
                target.gates.sort()
            else:
                for b in sorted(owners, key=open_blocks.index):
                    _close(b, open_blocks, owner, closed)
        else:
            target = next((b for b in open_blocks if len(b.qubits | qs) <= k), None)
        if target is None:
            target = _Block()
            open_blocks.append(target)
        target.qubits |= qs
        for q in target.qubits:
            owner[q] = target
        target.gates.append(idx)
    for b in list(open_blocks):
        _close(b, open_blocks, owner, closed)

    parts = []
    for b in closed:
        subset = tuple(sorted(b.qubits))
        relabel = {q: i for i, q in enumerate(subset)}
        local = Circuit(len(subset), [
            c.gates[i].with_location(tuple(relabel[q] for q in c.gates[i].location)) for i in b.gates
        ])
        parts.append(Partition(subset, list(b.gates), local, b.gates[0]))
    return parts


def reassemble(num_qubits, parts, locals_=None):
    """Concatenate partitions (optionally with replacement local circuits)."""
    gates = []
    for i, p in enumerate(parts):
        gates.extend(p.to_parent(None if locals_ is None else locals_[i]))
    return Circuit(num_qubits, gates)


def delete_gates_pass(p, instantiator, dist_tol, until_fixpoint=False):
    """Try removing each gate of ``p`` once, left to right.

    ``instantiator(circuit, target)`` returns an InstantiationResult; an
    exception from it counts as a failed removal. The target is always the
    block's original unitary.
    """
    target = circuit_unitary(p.local_circuit)
    cur = p.local_circuit
    while True:
        before = len(cur.gates)
        i = 0
        while i < len(cur.gates):
            cand = Circuit(cur.num_qubits, cur.gates[:i] + cur.gates[i + 1:])
            try:
                r = instantiator(cand, target)
            except (ValueError, ArithmeticError, np.linalg.LinAlgError):
                r = None
            if r is not None and r.distance_delta <= dist_tol:
                # the next gate now sits at index i
                cur = r.circuit
            else:
                i += 1
        if not until_fixpoint or len(cur.gates) == before:
            break
    return Partition(p.qubit_subset, p.gate_indices, cur, p.boundary)


def make_instantiator(choice, hyper, deadline=None):
    """Warm-started multistart instantiator for the deletion pass."""
    if choice == "qfactor":
        fn = multistart_instantiate
    elif choice == "lbfgs":
        from unifactor.baseline import baseline_instantiate as fn
    else:
        raise ValueError(f"unknown optimizer {choice!r}")

    def run(circuit, target):
        return fn(circuit, target, hyper, warm_start=True, deadline=deadline)
    return run


@dataclass
class PartitionReport:
    index: int
    qubits: list
    gates_before: int
    gates_after: int
    delta: float
    skipped: bool = False

    def to_dict(self):
        return {
            "index": self.index,
            "qubits": list(self.qubits),
            "gates_before": self.gates_before,
            "gates_after": self.gates_after,
            "delta": self.delta,
            "skipped": self.skipped,
        }


@dataclass
class Report:
    gate_counts_before: dict
    gate_counts_after: dict
    partitions: list = field(default_factory=list)
    full_delta: float | None = None
    partial: bool = False
    wall_time: float = 0.0

    @property
    def num_partitions(self):
        return len(self.partitions)

    @property
    def deleted(self):
        return sum(self.gate_counts_before.values()) - sum(self.gate_counts_after.values())

    def reduction_pct(self):
        out = {}
        for key in ("U3", "CNOT"):
            b = self.gate_counts_before.get(key, 0)
            a = self.gate_counts_after.get(key, 0)
            out[key] = 100.0 * (b - a) / b if b else 0.0
        return out

    def to_dict(self):
        return {
            "gate_counts_before": dict(self.gate_counts_before),
            "gate_counts_after": dict(self.gate_counts_after),
            "reduction_pct": self.reduction_pct(),
            "deleted": self.deleted,
            "num_partitions": self.num_partitions,
            "partitions": [p.to_dict() for p in self.partitions],
            "full_delta": self.full_delta,
            "partial": self.partial,
        }


def _optimize_partition(args):
    index, part, choice, hyper, dist_tol, deadline, fixpoint = args
    if deadline is not None and time.monotonic() > deadline:
        return index, part, True
    inst = make_instantiator(choice, hyper, deadline)
    return index, delete_gates_pass(part, inst, dist_tol, fixpoint), False


def optimize_circuit(c, k, instantiator_choice="qfactor", hyper=None, time_budget=None,
                     workers=1, verify=None, until_fixpoint=False):
    """Gate-deletion optimization of ``c`` over blocks of ``k`` qubits.

    Returns ``(optimized_circuit, Report)``. Each block gets its own seed
    derived from ``hyper.seed`` so results do not depend on scheduling.
    ``verify`` (default: on when ``n <= 8``) adds the full-circuit Delta.
    """
    hyper = hyper or HyperParams()
    t0 = time.monotonic()
    deadline = None if time_budget is None else t0 + float(time_budget)
    base = resolve_seed(hyper.seed)
    parts = partition_circuit(c, k) if c.gates else []

    jobs = []
    for i, p in enumerate(parts):
        h = HyperParams(**{**hyper.to_dict(), "seed": base + 7919 * i})
        jobs.append((i, p, instantiator_choice, h, hyper.dist_tol, deadline, until_fixpoint))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(_optimize_partition, jobs))
    else:
        outs = [_optimize_partition(j) for j in jobs]
    outs.sort(key=lambda o: o[0])

    new_parts = [o[1] for o in outs]
    result = reassemble(c.num_qubits, new_parts) if parts else c.copy()
    report = Report(c.gate_counts(), result.gate_counts())
    for (i, p_new, skipped), p_old in zip(outs, parts):
        d = 0.0 if skipped else distance_delta(circuit_unitary(p_new.local_circuit),
                                               circuit_unitary(p_old.local_circuit))
        report.partitions.append(PartitionReport(
            i, list(p_old.qubit_subset), len(p_old.local_circuit.gates),
            len(p_new.local_circuit.gates), d, skipped,
        ))
        report.partial |= skipped
    if verify is None:
        verify = c.num_qubits <= VERIFY_MAX_QUBITS
    if verify:
        report.full_delta = distance_delta(circuit_unitary(result), circuit_unitary(c))
    report.wall_time = time.monotonic() - t0
    return result, report
