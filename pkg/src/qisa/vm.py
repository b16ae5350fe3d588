"""Deterministic state-vector virtual machine for gate programs.

Qubit ``i`` is bit ``i`` of the basis index, so ``|q1 q0> = |10>`` is amplitude 2.
Two-qubit gate matrices are written in the ``(control, target)`` basis with the
control as the high bit.

Measurement randomness comes from splitmix64 seeded directly with the run seed;
shot ``k`` of :func:`sample_shots` uses ``seed + k`` (mod 2^64).
"""

from __future__ import annotations

import os
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import CapExceeded, ContainsMeasurement, IndexOutOfRange, NotUnitary, QisaError, TooLarge
from .isa import INVERSE_MNEMONIC, GateInstruction, Kind, Opcode, Program, opcode_lookup

DEFAULT_QUBIT_CAP = 24
UNITARY_MAX_QUBITS = 10
IMPOSSIBLE = 1e-15

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """splitmix64; ``random()`` returns the top 53 bits as a float in [0, 1)."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))


def default_qubit_cap() -> int:
    env = os.environ.get("QISA_QUBIT_CAP")
    return int(env) if env else DEFAULT_QUBIT_CAP


_S2 = 1 / np.sqrt(2)
_MATRICES = {
    "nop": np.eye(2),
    "x": np.array([[0, 1], [1, 0]]),
    "y": np.array([[0, -1j], [1j, 0]]),
    "z": np.diag([1, -1]),
    "h": np.array([[_S2, _S2], [_S2, -_S2]]),
    "s": np.diag([1, 1j]),
    "sdg": np.diag([1, -1j]),
    "t": np.diag([1, np.exp(1j * np.pi / 4)]),
    "tdg": np.diag([1, np.exp(-1j * np.pi / 4)]),
    "cnot": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]),
    "cz": np.diag([1, 1, 1, -1]),
    "swap": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]]),
}
_MATRICES = {k: np.asarray(v, dtype=complex) for k, v in _MATRICES.items()}
for _m in _MATRICES.values():
    _m.setflags(write=False)


def gate_unitary(op: Opcode | str) -> np.ndarray:
    """Read-only 2x2 or 4x4 matrix for a unitary (or no-op) opcode."""
    op = opcode_lookup(op)
    if op.kind is Kind.MEASUREMENT:
        raise NotUnitary(f"{op.mnemonic} has no unitary matrix")
    return _MATRICES[op.mnemonic]


@dataclass
class StateVector:
    n: int
    amplitudes: np.ndarray

    @classmethod
    def zero(cls, n: int) -> "StateVector":
        amps = np.zeros(1 << n, dtype=complex)
        amps[0] = 1.0
        return cls(n, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def qubit_probability(self, qubit: int, value: int = 1) -> float:
        """Marginal probability that ``qubit`` reads ``value``."""
        t = self.probabilities().reshape((2,) * self.n)
        axis = self.n - 1 - qubit
        p1 = float(np.take(t, 1, axis=axis).sum())
        return p1 if value else 1.0 - p1


@dataclass(frozen=True)
class MeasurementRecord:
    step: int
    qubit: int
    outcome: int
    probability: float


@dataclass
class RunResult:
    final_state: StateVector
    records: list[MeasurementRecord] = field(default_factory=list)
    seed: int = 0

    @property
    def bitstring(self) -> str:
        """Measurement outcomes in program order."""
        return "".join(str(r.outcome) for r in self.records)


def _apply_matrix(tensor: np.ndarray, n: int, mat: np.ndarray, qubits: tuple[int, ...]) -> np.ndarray:
    """Apply ``mat`` to ``qubits`` of a tensor whose first ``n`` axes are qubits n-1..0."""
    k = len(qubits)
    axes = [n - 1 - q for q in qubits]
    g = mat.reshape((2,) * (2 * k))
    res = np.tensordot(g, tensor, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(res, list(range(k)), axes)


def apply_instruction(state: StateVector, inst: GateInstruction, rng: SplitMix64 | None = None,
                      step: int = 0) -> tuple[StateVector, MeasurementRecord | None]:
    """Apply one instruction, updating ``state`` in place.

    Returns the state and, for ``measure``, the measurement record.
    """
    for q in inst.qubits:
        if not 0 <= q < state.n:
            raise IndexOutOfRange(f"{inst}: qubit {q} outside {state.n}-qubit register")
    op = inst.opcode
    if op.kind is Kind.MEASUREMENT:
        if rng is None:
            raise ValueError("measurement needs an rng")
        q = inst.target
        t = state.amplitudes.reshape((2,) * state.n)
        axis = state.n - 1 - q
        p1 = float(np.sum(np.abs(np.take(t, 1, axis=axis)) ** 2))
        p0 = 1.0 - p1
        u = rng.random()
        if p1 < IMPOSSIBLE:
            outcome = 0
        elif p0 < IMPOSSIBLE:
            outcome = 1
        else:
            outcome = 0 if u < p0 else 1
        prob = p1 if outcome else p0
        sel = [slice(None)] * state.n
        sel[axis] = 1 - outcome
        t = t.copy()
        t[tuple(sel)] = 0
        state.amplitudes = t.reshape(-1) / np.sqrt(prob)
        return state, MeasurementRecord(step, q, outcome, min(max(prob, 0.0), 1.0))
    if op.kind is Kind.NOOP:
        return state, None
    t = state.amplitudes.reshape((2,) * state.n)
    t = _apply_matrix(t, state.n, _MATRICES[op.mnemonic], inst.qubits)
    state.amplitudes = np.ascontiguousarray(t).reshape(-1)
    return state, None


def run_program(prog: Program, seed: int = 0, cap: int | None = None) -> RunResult:
    cap = default_qubit_cap() if cap is None else cap
    if prog.qubit_count > cap:
        raise CapExceeded(f"{prog.qubit_count} qubits exceeds the simulator cap of {cap}")
    rng = SplitMix64(seed)
    state = StateVector.zero(prog.qubit_count)
    records = []
    for i, inst in enumerate(prog.instructions):
        try:
            state, rec = apply_instruction(state, inst, rng, step=i)
        except QisaError as e:
            raise type(e)(f"instruction {i}: {e}", offset=i) from e
        if rec is not None:
            records.append(rec)
    return RunResult(state, records, seed)


def sample_shots(prog: Program, shots: int, seed: int = 0, cap: int | None = None) -> Counter:
    """Histogram of measured bitstrings (outcomes in program order) over ``shots`` runs."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    hist: Counter = Counter()
    for k in range(shots):
        hist[run_program(prog, (seed + k) & _MASK64, cap).bitstring] += 1
    return hist


def program_unitary(prog: Program) -> np.ndarray:
    """Full 2^n x 2^n matrix of a measurement-free program."""
    n = prog.qubit_count
    if n > UNITARY_MAX_QUBITS:
        raise TooLarge(f"program_unitary supports at most {UNITARY_MAX_QUBITS} qubits, got {n}")
    dim = 1 << n
    u = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    for i, inst in enumerate(prog.instructions):
        op = inst.opcode
        if op.kind is Kind.MEASUREMENT:
            raise ContainsMeasurement(f"instruction {i} is a measurement")
        if op.kind is Kind.NOOP:
            continue
        for q in inst.qubits:
            if not 0 <= q < n:
                raise IndexOutOfRange(f"instruction {i}: qubit {q} outside {n}-qubit register")
        u = _apply_matrix(u, n, _MATRICES[op.mnemonic], inst.qubits)
    return np.ascontiguousarray(u).reshape(dim, dim)


def inverse_program(prog: Program) -> Program:
    """Reverse order and invert each gate at the mnemonic level."""
    out = []
    for inst in reversed(prog.instructions):
        name = INVERSE_MNEMONIC.get(inst.mnemonic, inst.mnemonic)
        out.append(GateInstruction(opcode_lookup(name), inst.target, inst.control))
    return Program(prog.qubit_count, out)


def basis_state(n: int, bits: dict[int, int] | None = None) -> StateVector:
    """Computational basis state with the given qubits set."""
    idx = sum(1 << q for q, b in (bits or {}).items() if b)
    amps = np.zeros(1 << n, dtype=complex)
    amps[idx] = 1.0
    return StateVector(n, amps)

