"""Addressable-qubit ceilings for fixed-width instruction formats."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidBudget


@dataclass(frozen=True)
class CapacityReport:
    scheme: str
    word_bits: int
    field_bits: int  # opcode bits for gate formats, value bits for QMI
    operands: int
    address_bits: int
    unused_bits: int = 0

    @property
    def max_qubits(self) -> int:
        return 1 << self.address_bits

    @property
    def approx(self) -> float:
        return float(self.max_qubits)

    @property
    def scientific(self) -> str:
        """Four-decimal mantissa, e.g. ``1.0737e9``."""
        return sci(self.max_qubits)

    def summary(self) -> str:
        return f"2^{self.address_bits} (≈{self.scientific})"

    def as_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "word_bits": self.word_bits,
            "field_bits": self.field_bits,
            "operands": self.operands,
            "address_bits": self.address_bits,
            "unused_bits": self.unused_bits,
            "max_qubits": self.max_qubits,
            "approx": self.scientific,
        }


def sci(n: int, digits: int = 4) -> str:
    exp = len(str(n)) - 1
    mant = n / 10**exp
    if round(mant, digits) >= 10:
        exp, mant = exp + 1, mant / 10
    return f"{mant:.{digits}f}e{exp}"


def gate_isa_capacity(word_bits: int, opcode_bits: int, operands: int) -> CapacityReport:
    if operands < 1:
        raise InvalidBudget("need at least one operand")
    if not 0 <= opcode_bits < word_bits:
        raise InvalidBudget(f"opcode width {opcode_bits} leaves no room in a {word_bits}-bit word")
    left = word_bits - opcode_bits
    width = left // operands
    if width <= 0:
        raise InvalidBudget(f"{left} bits cannot address {operands} operands")
    return CapacityReport("gate", word_bits, opcode_bits, operands, width, left - width * operands)


def multi_message_capacity(word_bits: int, opcode_bits: int) -> CapacityReport:
    """One operand per message: every non-opcode bit addresses a qubit."""
    rep = gate_isa_capacity(word_bits, opcode_bits, 1)
    return CapacityReport("multi-message", word_bits, opcode_bits, 1, rep.address_bits)


def qmi_capacity(word_bits: int, value_bits: int) -> CapacityReport:
    left = word_bits - value_bits
    width = left // 2
    if width <= 0:
        raise InvalidBudget(f"{left} bits cannot address two qubits")
    return CapacityReport("qmi", word_bits, value_bits, 2, width, left - 2 * width)


def logical_clique_estimate(n_physical: int) -> int:
    """``floor(sqrt(n_physical / 8))``.

    A fitted model: it reproduces 4096 fully connected logical qubits for 2^27
    physical qubits, and is not claimed to be a derivation of that figure.
    """
    if n_physical < 8:
        raise ValueError("need at least one 8-qubit cell")
    return math.isqrt(n_physical // 8)


def standard_reports() -> list[CapacityReport]:
    """The 64/128-bit gate formats, the two-message format and the 64-bit QMI format."""
    return [
        gate_isa_capacity(64, 4, 2),
        gate_isa_capacity(128, 4, 2),
        multi_message_capacity(64, 4),
        qmi_capacity(64, 10),
    ]


def format_table(reports: list[CapacityReport]) -> str:
    head = f"{'scheme':<14}{'word':>6}{'field':>7}{'ops':>5}{'addr':>6}{'unused':>8}  {'max qubits':<22}{'approx':>11}"
    rows = [head, "-" * len(head)]
    for r in reports:
        rows.append(
            f"{r.scheme:<14}{r.word_bits:>6}{r.field_bits:>7}{r.operands:>5}{r.address_bits:>6}"
            f"{r.unused_bits:>8}  {r.max_qubits:<22}{r.scientific:>11}"
        )
    return "\n".join(rows)


def format_kv(report: CapacityReport) -> str:
    return "\n".join(f"{k}={v}" for k, v in report.as_dict().items())
