import math
from pathlib import Path

import numpy as np
import pytest

from unifactor.circuit import Circuit, GateKind, circuit_unitary
from unifactor.generators import FAMILIES, gen_benchmark
from unifactor.qasm import QasmError, load_qasm, parse_qasm, write_qasm

DATA = Path(__file__).parent / "data" / "qasm"
GOOD = sorted((DATA / "good").glob("*.qasm"))
MALFORMED = sorted((DATA / "malformed").glob("*.qasm"))


def generated_corpus():
    """100 deterministic circuits across the three families."""
    out = []
    for i in range(100):
        family = FAMILIES[i % 3]
        out.append(gen_benchmark(family, 2 + i % 5, 1 + i % 4, seed=i))
    return out


class TestParse:
    def test_bell(self):
        c = load_qasm(DATA / "good" / "bell.qasm")
        assert c.num_qubits == 2
        assert [g.kind for g in c.gates] == [GateKind.U3, GateKind.CNOT]
        assert c.gates[0].params == (math.pi / 2, 0.0, math.pi)

    def test_expressions(self):
        c = load_qasm(DATA / "good" / "expressions.qasm")
        assert c.gates[0].params == pytest.approx((-math.pi / 4, 2 * math.pi / 3 - 0.5, (math.pi + 1) * 0.5))
        assert c.gates[1].params == pytest.approx((math.pi,))
        assert c.gates[2].params == pytest.approx((1.5e-3,))

    def test_barrier_ignored(self):
        c = load_qasm(DATA / "good" / "barrier.qasm")
        assert len(c.gates) == 2

    def test_register_name_free(self):
        c = load_qasm(DATA / "good" / "no_include.qasm")
        assert [g.location for g in c.gates] == [(0, 1), (1, 0)]

    def test_empty_body(self):
        c = load_qasm(DATA / "good" / "empty_body.qasm")
        assert c.num_qubits == 4 and not c.gates

    def test_error_position(self):
        with pytest.raises(QasmError) as info:
            parse_qasm("OPENQASM 2.0;\nqreg q[2];\n  cx q[0], q[5];\n")
        assert info.value.line == 3
        assert info.value.col == 14

    def test_no_qreg(self):
        with pytest.raises(QasmError, match="no qreg"):
            parse_qasm("OPENQASM 2.0;\n")

    def test_qubit_before_qreg(self):
        with pytest.raises(QasmError, match="before qreg"):
            parse_qasm("OPENQASM 2.0;\ncx q[0], q[1];\n")

    def test_whole_register_operand(self):
        with pytest.raises(QasmError, match="whole-register"):
            parse_qasm("OPENQASM 2.0;\nqreg q[2];\nrz(1) q;\n")

    def test_bad_character(self):
        with pytest.raises(QasmError, match="unexpected character"):
            parse_qasm("OPENQASM 2.0;\nqreg q[2];\nrz(1) q[0] @;\n")


class TestMalformedCorpus:
    def test_corpus_size(self):
        assert len(MALFORMED) == 10

    def test_diagnostics_distinct(self):
        messages = []
        for path in MALFORMED:
            with pytest.raises(QasmError) as info:
                load_qasm(path)
            assert info.value.line is not None
            messages.append(info.value.message)
        assert len(set(messages)) == len(messages), messages


class TestWriter:
    def test_header_and_register(self):
        text = write_qasm(Circuit(3))
        assert text.splitlines()[:3] == ["OPENQASM 2.0;", 'include "qelib1.inc";', "qreg q[3];"]

    def test_lowers_one_qubit_matrix(self):
        c = Circuit(1)
        c.add(GateKind.VARIABLE, (0,), matrix=np.array([[0, 1j], [1j, 0]]))
        back = parse_qasm(write_qasm(c))
        assert back.gates[0].kind is GateKind.U3
        assert abs(abs(np.trace(circuit_unitary(back).conj().T @ circuit_unitary(c))) - 2) < 1e-12

    def test_rejects_two_qubit_matrix(self):
        c = Circuit(2)
        c.add(GateKind.CONSTANT, (0, 1), matrix=np.eye(4))
        with pytest.raises(ValueError, match="cannot write"):
            write_qasm(c)


class TestRoundTrip:
    @pytest.mark.parametrize("path", GOOD, ids=lambda p: p.stem)
    def test_hand_written(self, path):
        c = load_qasm(path)
        assert parse_qasm(write_qasm(c)) == c

    def test_generated(self):
        for c in generated_corpus():
            once = parse_qasm(write_qasm(c))
            assert once == c
            assert parse_qasm(write_qasm(once)) == once
