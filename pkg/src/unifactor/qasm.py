"""OpenQASM 2.0 subset reader/writer.

Supported statements: the ``OPENQASM 2.0;`` header, ``include``, a single
``qreg``, ``u3``/``u``/``U``, ``rz``, ``cx``/``CX`` and ``barrier`` (ignored).
Angle expressions accept numbers, ``pi``, ``+ - * /``, unary minus and
parentheses.
"""
import math
import re

from unifactor.circuit import Circuit, GateKind, LocatedGate, unitary_to_u3


class QasmError(ValueError):
    def __init__(self, message, line=None, col=None):
        self.message = message
        self.line = line
        self.col = col
        where = f"line {line}, column {col}: " if line is not None else ""
        super().__init__(where + message)


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"[^"\n]*")
  | (?P<op>[()\[\],;+\-*/])
    """,
    re.VERBOSE,
)

_GATES = {
    "u3": (GateKind.U3, 3, 1),
    "u": (GateKind.U3, 3, 1),
    "U": (GateKind.U3, 3, 1),
    "rz": (GateKind.RZ, 1, 1),
    "cx": (GateKind.CNOT, 0, 2),
    "CX": (GateKind.CNOT, 0, 2),
}


def _tokenize(text):
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise QasmError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append((kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    tokens.append(("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0
        self.reg = None
        self.size = None
        self.circuit = None

    def peek(self):
        return self.toks[self.i]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise QasmError(msg, tok[2], tok[3])

    def expect(self, value, what=None):
        tok = self.next()
        if tok[1] != value:
            found = tok[1] or "end of file"
            self.fail(f"expected {what or repr(value)}, found {found!r}", tok)
        return tok

    def parse(self):
        self.header()
        while self.peek()[0] != "eof":
            self.statement()
        if self.circuit is None:
            self.fail("no qreg declared")
        return self.circuit

    def header(self):
        tok = self.next()
        if tok[1] != "OPENQASM":
            self.fail("missing 'OPENQASM 2.0;' header", tok)
        ver = self.next()
        if ver[0] != "number" or float(ver[1]) != 2.0:
            self.fail(f"unsupported OpenQASM version {ver[1]!r}", ver)
        self.expect(";")

    def statement(self):
        tok = self.next()
        word = tok[1]
        if word == "include":
            s = self.next()
            if s[0] != "string":
                self.fail("include expects a quoted file name", s)
            self.expect(";")
        elif word == "qreg":
            self.qreg(tok)
        elif word == "barrier":
            self.barrier()
        elif word in _GATES:
            self.gate(tok)
        elif tok[0] == "id":
            self.fail(f"unsupported statement {word!r}", tok)
        else:
            self.fail(f"unexpected token {word!r}", tok)

    def qreg(self, tok):
        if self.circuit is not None:
            self.fail("multiple qreg declarations are not supported", tok)
        name = self.next()
        if name[0] != "id":
            self.fail("expected register name", name)
        self.expect("[")
        size = self.next()
        if size[0] != "number" or not size[1].isdigit() or int(size[1]) < 1:
            self.fail("register size must be a positive integer", size)
        self.expect("]")
        self.expect(";")
        self.reg = name[1]
        self.circuit = Circuit(int(size[1]))

    def qubit(self):
        tok = self.next()
        if tok[0] != "id":
            self.fail(f"expected qubit operand, found {tok[1] or 'end of file'!r}", tok)
        if self.circuit is None:
            self.fail("qubit used before qreg declaration", tok)
        if tok[1] != self.reg:
            self.fail(f"unknown register {tok[1]!r}", tok)
        if self.peek()[1] != "[":
            return None
        self.next()
        idx = self.next()
        if idx[0] != "number" or not idx[1].isdigit():
            self.fail("qubit index must be a non-negative integer", idx)
        self.expect("]")
        q = int(idx[1])
        if q >= self.circuit.num_qubits:
            self.fail(f"qubit index {q} out of range for {self.reg}[{self.circuit.num_qubits}]", idx)
        return q

    def barrier(self):
        self.qubit()
        while self.peek()[1] == ",":
            self.next()
            self.qubit()
        self.expect(";")

    def gate(self, tok):
        kind, nparams, nqubits = _GATES[tok[1]]
        params = []
        if self.peek()[1] == "(":
            self.next()
            if self.peek()[1] != ")":
                params.append(self.expr())
                while self.peek()[1] == ",":
                    self.next()
                    params.append(self.expr())
            self.expect(")")
        if len(params) != nparams:
            self.fail(f"{tok[1]} takes {nparams} parameters, got {len(params)}", tok)
        qubits = []
        for k in range(nqubits):
            if k:
                self.expect(",")
            start = self.peek()
            q = self.qubit()
            if q is None:
                self.fail("whole-register gate operands are not supported", start)
            qubits.append(q)
        if len(set(qubits)) != len(qubits):
            self.fail(f"{tok[1]} operands must be distinct qubits", tok)
        self.expect(";")
        self.circuit.append(LocatedGate(kind, tuple(qubits), tuple(params)))

    # expression grammar: expr := term (('+'|'-') term)*, term := unary (('*'|'/') unary)*
    def expr(self):
        value = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.next()[1]
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self):
        value = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.next()
            rhs = self.unary()
            if op[1] == "*":
                value *= rhs
            elif rhs == 0.0:
                self.fail("division by zero in angle expression", op)
            else:
                value /= rhs
        return value

    def unary(self):
        if self.peek()[1] == "-":
            self.next()
            return -self.unary()
        if self.peek()[1] == "+":
            self.next()
            return self.unary()
        return self.primary()

    def primary(self):
        tok = self.next()
        if tok[0] == "number":
            return float(tok[1])
        if tok[1] == "pi":
            return math.pi
        if tok[1] == "(":
            value = self.expr()
            self.expect(")", "')'")
            return value
        self.fail(f"invalid angle expression near {tok[1] or 'end of file'!r}", tok)


def parse_qasm(text):
    """Parse QASM text into a :class:`Circuit`. Raises :class:`QasmError`."""
    return _Parser(text).parse()


def load_qasm(path):
    with open(path) as fh:
        return parse_qasm(fh.read())


def _fmt(x):
    return f"{x:.17g}"


def write_qasm(c):
    """Serialize a U3/RZ/CNOT circuit; 1-qubit matrix gates are lowered to u3."""
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{c.num_qubits}];"]
    for g in c.gates:
        if g.kind is GateKind.U3:
            lines.append(f"u3({', '.join(_fmt(p) for p in g.params)}) q[{g.location[0]}];")
        elif g.kind is GateKind.RZ:
            lines.append(f"rz({_fmt(g.params[0])}) q[{g.location[0]}];")
        elif g.kind is GateKind.CNOT:
            lines.append(f"cx q[{g.location[0]}], q[{g.location[1]}];")
        elif g.num_qubits == 1:
            theta, phi, lam, _ = unitary_to_u3(g.matrix)
            lines.append(f"u3({_fmt(theta)}, {_fmt(phi)}, {_fmt(lam)}) q[{g.location[0]}];")
        else:
            raise ValueError(
                f"cannot write {g.num_qubits}-qubit {g.kind.value} gate; lower it to u3/cx first"
            )
    return "\n".join(lines) + "\n"
