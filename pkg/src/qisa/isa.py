"""Gate-model opcode table and bit-exact instruction codecs.

Three wire formats are supported:

* ``SINGLE64``      one 64-bit word: ``[63:60] opcode | [59:30] target | [29:0] control``
* ``TWO_MESSAGE64`` one word ``[63:60] opcode | [59:0] target`` per message; two-qubit
  gates take a second, consecutive message repeating the opcode and carrying the control
* ``SINGLE128``     one 128-bit word: ``[127:124] opcode | [123:62] target | [61:0] control``

Streams are serialized word by word, little-endian.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import (
    AddressOverflow,
    BadHeader,
    DecodeError,
    InvalidInstruction,
    MalformedPair,
    QisaError,
    TrailingBytes,
    UnknownOpcode,
)

OPCODE_BITS = 4


class Kind(str, enum.Enum):
    UNITARY = "unitary"
    MEASUREMENT = "measurement"
    NOOP = "no-op"


@dataclass(frozen=True)
class Opcode:
    mnemonic: str
    code: int
    arity: int
    kind: Kind

    def __str__(self):
        return self.mnemonic


OPCODES: tuple[Opcode, ...] = (
    Opcode("nop", 0, 1, Kind.NOOP),
    Opcode("x", 1, 1, Kind.UNITARY),
    Opcode("y", 2, 1, Kind.UNITARY),
    Opcode("z", 3, 1, Kind.UNITARY),
    Opcode("h", 4, 1, Kind.UNITARY),
    Opcode("s", 5, 1, Kind.UNITARY),
    Opcode("sdg", 6, 1, Kind.UNITARY),
    Opcode("t", 7, 1, Kind.UNITARY),
    Opcode("tdg", 8, 1, Kind.UNITARY),
    Opcode("cnot", 9, 2, Kind.UNITARY),
    Opcode("cz", 10, 2, Kind.UNITARY),
    Opcode("swap", 11, 2, Kind.UNITARY),
    Opcode("measure", 12, 1, Kind.MEASUREMENT),
)
# codes 13-15 are reserved

_BY_CODE = {op.code: op for op in OPCODES}
_BY_MNEMONIC = {op.mnemonic: op for op in OPCODES}

# mnemonic-level inverses; anything absent is self-inverse
INVERSE_MNEMONIC = {"s": "sdg", "sdg": "s", "t": "tdg", "tdg": "t"}


def opcode_lookup(key: str | int | Opcode) -> Opcode:
    """Find an opcode by mnemonic (case-insensitive) or by 4-bit code."""
    if isinstance(key, Opcode):
        return key
    if isinstance(key, str):
        try:
            return _BY_MNEMONIC[key.lower()]
        except KeyError:
            raise UnknownOpcode(f"unknown mnemonic {key!r}") from None
    try:
        return _BY_CODE[int(key)]
    except KeyError:
        raise UnknownOpcode(f"unassigned opcode {key}") from None


class EncodingMode(enum.Enum):
    SINGLE64 = "single64"
    TWO_MESSAGE64 = "two-message"
    SINGLE128 = "single128"

    @property
    def address_bits(self) -> int:
        return {"single64": 30, "two-message": 60, "single128": 62}[self.value]

    @property
    def word_bits(self) -> int:
        return 128 if self is EncodingMode.SINGLE128 else 64

    @property
    def word_bytes(self) -> int:
        return self.word_bits // 8

    @property
    def tag(self) -> int:
        return _MODE_TAGS[self]

    @classmethod
    def from_tag(cls, tag: int) -> "EncodingMode":
        for mode, t in _MODE_TAGS.items():
            if t == tag:
                return mode
        raise BadHeader(f"unknown mode tag {tag}")

    @classmethod
    def parse(cls, name: str) -> "EncodingMode":
        name = name.lower().replace("_", "-")
        aliases = {"two-message64": "two-message", "twomessage64": "two-message"}
        return cls(aliases.get(name, name))


_MODE_TAGS = {EncodingMode.SINGLE64: 0, EncodingMode.TWO_MESSAGE64: 1, EncodingMode.SINGLE128: 2}


@dataclass(frozen=True)
class GateInstruction:
    """One decoded message. Arity-1 gates carry ``control == target``.

    Construction does not enforce the arity invariants so that arbitrary
    words can be decoded; :meth:`check` does.
    """

    opcode: Opcode
    target: int
    control: int

    @property
    def mnemonic(self) -> str:
        return self.opcode.mnemonic

    @property
    def qubits(self) -> tuple[int, ...]:
        if self.opcode.arity == 1:
            return (self.target,)
        return (self.control, self.target)

    def check(self) -> None:
        if self.target < 0 or self.control < 0:
            raise InvalidInstruction(f"{self}: negative qubit index")
        if self.opcode.arity == 1 and self.control != self.target:
            raise InvalidInstruction(f"{self}: one-qubit gate must repeat target in control field")
        if self.opcode.arity == 2 and self.control == self.target:
            raise InvalidInstruction(f"{self}: control equals target")

    def __str__(self):
        if self.opcode.arity == 1:
            return f"{self.mnemonic} q[{self.target}]"
        return f"{self.mnemonic} q[{self.control}], q[{self.target}]"


def gate(mnemonic: str | Opcode, target: int, control: int | None = None) -> GateInstruction:
    """Build an instruction; ``control`` defaults to ``target`` for one-qubit gates."""
    op = opcode_lookup(mnemonic)
    if control is None:
        if op.arity == 2:
            raise InvalidInstruction(f"{op.mnemonic} needs a control qubit")
        control = target
    return GateInstruction(op, target, control)


@dataclass(frozen=True)
class Program:
    """Ordered instruction list over a declared register of ``qubit_count`` qubits."""

    qubit_count: int
    instructions: tuple = ()

    def __post_init__(self):
        if not isinstance(self.instructions, tuple):
            object.__setattr__(self, "instructions", tuple(self.instructions))

    def __len__(self):
        return len(self.instructions)

    def __iter__(self):
        return iter(self.instructions)


@dataclass(frozen=True)
class EncodedWord:
    width: int
    bits: int

    def __post_init__(self):
        if self.width not in (64, 128):
            raise ValueError(f"unsupported word width {self.width}")
        if not 0 <= self.bits < (1 << self.width):
            raise ValueError(f"value does not fit in {self.width} bits")

    def __int__(self):
        return self.bits

    def __repr__(self):
        return f"EncodedWord({self.width}, {self.bits:#0{self.width // 4 + 2}x})"


def _mask(n: int) -> int:
    return (1 << n) - 1


def encode_instruction(inst: GateInstruction, mode: EncodingMode) -> list[EncodedWord]:
    inst.check()
    width = mode.address_bits
    for name, idx in (("target", inst.target), ("control", inst.control)):
        if idx >= 1 << width:
            raise AddressOverflow(f"{name} index {idx} exceeds 2^{width} addressable qubits ({mode.value})")
    code = inst.opcode.code
    wb = mode.word_bits
    if mode is EncodingMode.TWO_MESSAGE64:
        head = code << 60
        words = [head | inst.target]
        if inst.opcode.arity == 2:
            words.append(head | inst.control)
        return [EncodedWord(64, w) for w in words]
    op_shift = wb - OPCODE_BITS
    return [EncodedWord(wb, (code << op_shift) | (inst.target << width) | inst.control)]


def _as_word(w, mode: EncodingMode) -> int:
    if isinstance(w, EncodedWord):
        if w.width != mode.word_bits:
            raise DecodeError(f"{w.width}-bit word given to {mode.value} decoder")
        return w.bits
    w = int(w)
    if not 0 <= w < 1 << mode.word_bits:
        raise DecodeError(f"word {w:#x} does not fit in {mode.word_bits} bits")
    return w


def _decode_at(words: Sequence, pos: int, mode: EncodingMode) -> tuple[GateInstruction, int]:
    """Decode the instruction starting at ``words[pos]``; return it with the word count consumed."""
    w = _as_word(words[pos], mode)
    if mode is EncodingMode.TWO_MESSAGE64:
        op = opcode_lookup(w >> 60)
        target = w & _mask(60)
        if op.arity == 1:
            return GateInstruction(op, target, target), 1
        if pos + 1 >= len(words):
            raise MalformedPair(f"stream ends inside {op.mnemonic} pair")
        w2 = _as_word(words[pos + 1], mode)
        if w2 >> 60 != op.code:
            raise MalformedPair(f"pair opcode mismatch: {op.code} then {w2 >> 60}")
        return GateInstruction(op, target, w2 & _mask(60)), 2
    width = mode.address_bits
    op = opcode_lookup(w >> (mode.word_bits - OPCODE_BITS))
    return GateInstruction(op, (w >> width) & _mask(width), w & _mask(width)), 1


def decode_instruction(words: Sequence, mode: EncodingMode) -> GateInstruction:
    """Inverse of :func:`encode_instruction`. Fields are returned as stored, unchecked."""
    words = list(words)
    if not words:
        raise DecodeError("no words to decode")
    inst, used = _decode_at(words, 0, mode)
    if used != len(words):
        raise DecodeError(f"{len(words)} words given, instruction uses {used}")
    return inst


def encode_stream(prog: Iterable[GateInstruction], mode: EncodingMode) -> bytes:
    nbytes = mode.word_bytes
    out = bytearray()
    for inst in prog:
        for w in encode_instruction(inst, mode):
            out += w.bits.to_bytes(nbytes, "little")
    return bytes(out)


def decode_stream(data: bytes, mode: EncodingMode) -> list[GateInstruction]:
    nbytes = mode.word_bytes
    if len(data) % nbytes:
        raise TrailingBytes(f"{len(data)} bytes is not a multiple of the {nbytes}-byte word size")
    words = [int.from_bytes(data[i:i + nbytes], "little") for i in range(0, len(data), nbytes)]
    out = []
    pos = 0
    while pos < len(words):
        try:
            inst, used = _decode_at(words, pos, mode)
        except QisaError as e:
            raise type(e)(f"word {pos}: {e}", offset=pos) from e
        out.append(inst)
        pos += used
    return out


# .qbin container
QBIN_MAGIC = b"QISA"
QBIN_VERSION = 1
_QBIN_HEADER = struct.Struct("<4sBBQ2s")


def write_qbin(prog: Program, mode: EncodingMode) -> bytes:
    header = _QBIN_HEADER.pack(QBIN_MAGIC, QBIN_VERSION, mode.tag, prog.qubit_count, b"\0\0")
    return header + encode_stream(prog.instructions, mode)


def read_qbin(data: bytes) -> tuple[Program, EncodingMode]:
    if len(data) < _QBIN_HEADER.size:
        raise BadHeader("file shorter than the 16-byte header")
    magic, version, tag, count, reserved = _QBIN_HEADER.unpack_from(data)
    if magic != QBIN_MAGIC:
        raise BadHeader(f"bad magic {magic!r}")
    if version != QBIN_VERSION:
        raise BadHeader(f"unsupported version {version}")
    if reserved != b"\0\0":
        raise BadHeader("reserved header bytes must be zero")
    mode = EncodingMode.from_tag(tag)
    return Program(count, decode_stream(data[_QBIN_HEADER.size:], mode)), mode
