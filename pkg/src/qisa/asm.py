"""Text assembly for the gate ISA.

Grammar, one statement per line::

    .qubits N
    x q[0]
    cnot q[0], q[1]        # control first, then target
    ccx q[0], q[1], q[2]   # macro: controls, target

``#`` starts a comment. Mnemonics are case-insensitive; emitted text is lowercase.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import AssemblyError, DuplicateOperand, UnknownOpcode
from .isa import EncodingMode, GateInstruction, Program, gate, opcode_lookup

MACROS = {"ccx": 3}


@dataclass(frozen=True)
class ParseDiagnostic:
    line: int
    column: int
    message: str
    severity: str = "error"

    def __str__(self):
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


@dataclass(frozen=True)
class Macro:
    """An unexpanded multi-qubit statement; only ``ccx`` exists."""

    name: str
    operands: tuple[int, ...]

    def __str__(self):
        return f"{self.name} " + ", ".join(f"q[{q}]" for q in self.operands)


_OPERAND = re.compile(r"\s*q\s*\[\s*(\d+)\s*\]\s*$", re.IGNORECASE)
_STATEMENT = re.compile(r"(\S+)\s*(.*)$")
_DIRECTIVE = re.compile(r"\.qubits\s+(\S+)\s*$", re.IGNORECASE)


def _split_operands(text: str, base_col: int):
    """Yield (column, raw operand) for a comma-separated operand list."""
    col = base_col
    for piece in text.split(","):
        lead = len(piece) - len(piece.lstrip())
        yield col + lead, piece
        col += len(piece) + 1


def parse_assembly(source: str, *, expand: bool = True) -> Program:
    """Parse assembly text. Raises :class:`AssemblyError` carrying every diagnostic found.

    With ``expand=False`` the returned program may still contain :class:`Macro` entries.
    """
    diags: list[ParseDiagnostic] = []
    qubit_count: int | None = None
    items: list = []

    def err(line, col, msg):
        diags.append(ParseDiagnostic(line, col, msg))

    for lineno, raw in enumerate(source.splitlines(), start=1):
        text = raw.split("#", 1)[0].rstrip()
        stripped = text.lstrip()
        if not stripped:
            continue
        col0 = len(text) - len(stripped) + 1

        if stripped.startswith("."):
            m = _DIRECTIVE.match(stripped)
            if not m:
                err(lineno, col0, f"unknown directive {stripped.split()[0]!r}")
                continue
            if qubit_count is not None:
                err(lineno, col0, "duplicate .qubits directive")
                continue
            if items:
                err(lineno, col0, ".qubits must precede all instructions")
            try:
                n = int(m.group(1))
                if n < 1:
                    raise ValueError
            except ValueError:
                err(lineno, col0 + m.start(1), f"invalid qubit count {m.group(1)!r}")
                continue
            qubit_count = n
            continue

        m = _STATEMENT.match(stripped)
        mnemonic, rest = m.group(1).lower(), m.group(2)
        rest_col = col0 + m.start(2)
        if qubit_count is None:
            err(lineno, col0, "instruction before .qubits directive")
            # keep going so the rest of the line still gets checked

        arity = MACROS.get(mnemonic)
        op = None
        if arity is None:
            try:
                op = opcode_lookup(mnemonic)
            except UnknownOpcode:
                err(lineno, col0, f"unknown mnemonic {mnemonic!r}")
                continue
            arity = op.arity

        operands: list[int] = []
        bad = False
        if rest.strip():
            for col, piece in _split_operands(rest, rest_col):
                m = _OPERAND.match(piece)
                if not m:
                    err(lineno, col, f"malformed operand {piece.strip()!r}")
                    bad = True
                    continue
                q = int(m.group(1))
                if qubit_count is not None and q >= qubit_count:
                    err(lineno, col, f"qubit index {q} out of range for {qubit_count} qubits")
                    bad = True
                operands.append(q)
        if bad:
            continue
        if len(operands) != arity:
            err(lineno, col0, f"{mnemonic} expects {arity} operand(s), got {len(operands)}")
            continue
        if len(set(operands)) != len(operands):
            msg = "control equals target" if arity == 2 else "duplicate operands"
            err(lineno, col0, f"{mnemonic}: {msg}")
            continue

        if op is None:
            items.append(Macro(mnemonic, tuple(operands)))
        elif arity == 1:
            items.append(gate(op, operands[0]))
        else:
            items.append(gate(op, target=operands[1], control=operands[0]))

    if qubit_count is None and not diags:
        err(1, 1, "missing .qubits directive")
    if any(d.severity == "error" for d in diags):
        raise AssemblyError(diags)
    prog = Program(qubit_count, items)
    return expand_macros(prog) if expand else prog


def emit_assembly(prog: Program) -> str:
    """Canonical text for ``prog``; no trailing newline."""
    lines = [f".qubits {prog.qubit_count}"]
    lines += [str(inst) for inst in prog.instructions]
    return "\n".join(lines)


def _ccx(a: int, b: int, c: int) -> list[GateInstruction]:
    def cx(ctl, tgt):
        return gate("cnot", target=tgt, control=ctl)

    return [
        gate("h", c), cx(b, c), gate("tdg", c), cx(a, c), gate("t", c),
        cx(b, c), gate("tdg", c), cx(a, c), gate("t", b), gate("t", c),
        gate("h", c), cx(a, b), gate("t", a), gate("tdg", b), cx(a, b),
    ]


def expand_macros(prog: Program) -> Program:
    out = []
    for item in prog.instructions:
        if not isinstance(item, Macro):
            out.append(item)
            continue
        if len(set(item.operands)) != len(item.operands):
            raise DuplicateOperand(f"{item}: operands must be distinct")
        if item.name == "ccx":
            out.extend(_ccx(*item.operands))
        else:  # pragma: no cover - MACROS has only ccx
            raise ValueError(f"no expansion for macro {item.name}")
    return Program(prog.qubit_count, out)


def validate_program(prog: Program, mode: EncodingMode | None = None) -> list[ParseDiagnostic]:
    """Check operand bounds and arity invariants; an empty list means the program is valid.

    Diagnostics point at the line the instruction occupies in :func:`emit_assembly`
    output (instruction ``i`` is on line ``i + 2``).
    """
    diags = []
    limit = 1 << mode.address_bits if mode is not None else None
    for i, inst in enumerate(prog.instructions):
        line = i + 2

        def bad(msg):
            diags.append(ParseDiagnostic(line, 1, f"{inst}: {msg}"))

        if isinstance(inst, Macro):
            bad("unexpanded macro")
            continue
        op = inst.opcode
        if op.arity == 1 and inst.control != inst.target:
            bad("one-qubit gate with control != target")
        if op.arity == 2 and inst.control == inst.target:
            bad("control equals target")
        for q in sorted({inst.target, inst.control}):
            if q < 0:
                bad(f"negative qubit index {q}")
            elif q >= prog.qubit_count:
                bad(f"qubit index {q} out of range for {prog.qubit_count} qubits")
            if limit is not None and q >= limit:
                bad(f"qubit index {q} exceeds 2^{mode.address_bits} addressable qubits in {mode.value} mode")
    return diags
