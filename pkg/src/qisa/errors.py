"""Exception hierarchy shared by every qisa module."""

from __future__ import annotations


class QisaError(Exception):
    """Base class. ``offset`` is set when the error was raised at a word/line position."""

    def __init__(self, message: str = "", *, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


# isa
class UnknownOpcode(QisaError):
    pass


class AddressOverflow(QisaError):
    pass


class InvalidInstruction(QisaError):
    pass


class DecodeError(QisaError):
    pass


class MalformedPair(DecodeError):
    pass


class TrailingBytes(DecodeError):
    pass


class BadHeader(DecodeError):
    pass


# asm
class AssemblyError(QisaError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


class DuplicateOperand(QisaError):
    pass


# vm
class NotUnitary(QisaError):
    pass


class IndexOutOfRange(QisaError):
    pass


class CapExceeded(QisaError):
    pass


class ContainsMeasurement(QisaError):
    pass


class TooLarge(QisaError):
    pass


# passes
class NotCnot(QisaError):
    pass


class Disconnected(QisaError):
    pass


class Unroutable(QisaError):
    pass


# qmi
class InvalidCode(QisaError):
    pass


class HeaderMismatch(QisaError):
    pass


class DuplicateKey(QisaError):
    pass


class MalformedLine(QisaError):
    pass


# capacity
class InvalidBudget(QisaError):
    pass
