"""Quantum machine instructions for annealers.

A QMI is ``{qubit_a, qubit_b, value}``: equal qubits set a bias, distinct qubits set
a coupler. Words are 64 bits: ``[63:37] qubit_a | [36:10] qubit_b | [9:0] value``,
the value being a 10-bit two's-complement fixed-point number with scale 1/511.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    AddressOverflow,
    BadHeader,
    DuplicateKey,
    HeaderMismatch,
    InvalidCode,
    MalformedLine,
    TooLarge,
    TrailingBytes,
)

QUBIT_BITS = 27
VALUE_BITS = 10
VALUE_SCALE = (1 << (VALUE_BITS - 1)) - 1  # 511
INVALID_CODE = -(1 << (VALUE_BITS - 1))  # -512
MAX_BRUTE_FORCE = 24
MAX_REPORTED_CONFIGS = 1024
ENERGY_TOL = 1e-9


# -- value quantization ------------------------------------------------------

def quantize_value(v: float) -> int:
    """Round ``v * 511`` half away from zero; out-of-range inputs are clamped with a warning."""
    if abs(v) > 1:
        warnings.warn(f"QMI value {v} clamped to [-1, 1]", stacklevel=2)
        v = math.copysign(1.0, v)
    x = v * VALUE_SCALE
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def dequantize_value(q: int) -> float:
    if q == INVALID_CODE:
        raise InvalidCode("value code -512 is reserved")
    if not INVALID_CODE < q <= VALUE_SCALE:
        raise InvalidCode(f"value code {q} outside 10 bits")
    return q / VALUE_SCALE


# -- instructions -------------------------------------------------------------

@dataclass(frozen=True)
class QmiInstruction:
    qubit_a: int
    qubit_b: int
    value: float

    def __post_init__(self):
        if self.qubit_a > self.qubit_b:
            a, b = self.qubit_b, self.qubit_a
            object.__setattr__(self, "qubit_a", a)
            object.__setattr__(self, "qubit_b", b)
        if self.qubit_a < 0:
            raise ValueError("negative qubit index")

    @property
    def key(self) -> tuple[int, int]:
        return (self.qubit_a, self.qubit_b)

    @property
    def is_bias(self) -> bool:
        return self.qubit_a == self.qubit_b


def encode_qmi(inst: QmiInstruction) -> int:
    for q in inst.key:
        if q >= 1 << QUBIT_BITS:
            raise AddressOverflow(f"qubit {q} exceeds 2^{QUBIT_BITS} addressable qubits")
    code = quantize_value(inst.value) & ((1 << VALUE_BITS) - 1)
    return (inst.qubit_a << (QUBIT_BITS + VALUE_BITS)) | (inst.qubit_b << VALUE_BITS) | code


def decode_qmi(word: int) -> QmiInstruction:
    if not 0 <= word < 1 << 64:
        raise ValueError("QMI word must fit in 64 bits")
    qmask = (1 << QUBIT_BITS) - 1
    raw = word & ((1 << VALUE_BITS) - 1)
    code = raw - (1 << VALUE_BITS) if raw >> (VALUE_BITS - 1) else raw
    a = (word >> (QUBIT_BITS + VALUE_BITS)) & qmask
    b = (word >> VALUE_BITS) & qmask
    return QmiInstruction(a, b, dequantize_value(code))


@dataclass(frozen=True)
class QmiProgram:
    instructions: tuple = ()
    header_count: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        seen = set()
        for inst in self.instructions:
            if inst.key in seen:
                raise DuplicateKey(f"duplicate QMI for qubits {inst.key}")
            seen.add(inst.key)
        if self.header_count is not None and self.header_count != len(self.instructions):
            raise HeaderMismatch(f"header declares {self.header_count} QMIs, found {len(self.instructions)}")

    def __len__(self):
        return len(self.instructions)


def parse_qmi_text(source: str) -> QmiProgram:
    """Parse ``p <count>`` (optional, first statement) then ``a b value`` lines."""
    header = None
    insts = []
    seen: dict[tuple[int, int], int] = {}
    for lineno, raw in enumerate(source.splitlines(), start=1):
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        if parts[0] == "p":
            if header is not None or insts or len(parts) != 2:
                raise MalformedLine(f"line {lineno}: misplaced or malformed header", offset=lineno)
            try:
                header = int(parts[1])
            except ValueError:
                raise MalformedLine(f"line {lineno}: bad header count {parts[1]!r}", offset=lineno) from None
            continue
        if len(parts) != 3:
            raise MalformedLine(f"line {lineno}: expected 'a b value'", offset=lineno)
        try:
            inst = QmiInstruction(int(parts[0]), int(parts[1]), float(parts[2]))
        except ValueError:
            raise MalformedLine(f"line {lineno}: cannot parse {raw.strip()!r}", offset=lineno) from None
        if inst.key in seen:
            raise DuplicateKey(f"line {lineno}: qubits {inst.key} already set on line {seen[inst.key]}",
                               offset=lineno)
        seen[inst.key] = lineno
        insts.append(inst)
    return QmiProgram(insts, header)


def emit_qmi_text(prog: QmiProgram, with_header: bool | None = None) -> str:
    """Text form; ``with_header=None`` keeps whatever the program was parsed with."""
    if with_header is None:
        with_header = prog.header_count is not None
    lines = [f"p {len(prog)}"] if with_header else []
    lines += [f"{i.qubit_a} {i.qubit_b} {float(i.value)!r}" for i in prog.instructions]
    return "\n".join(lines) + ("\n" if lines else "")


QMIB_MAGIC = b"QMIB"
QMIB_VERSION = 1
_QMIB_HEADER = struct.Struct("<4sBQ3s")


def write_qmib(prog: QmiProgram) -> bytes:
    body = b"".join(encode_qmi(i).to_bytes(8, "little") for i in prog.instructions)
    return _QMIB_HEADER.pack(QMIB_MAGIC, QMIB_VERSION, len(prog), b"\0\0\0") + body


def read_qmib(data: bytes) -> QmiProgram:
    if len(data) < _QMIB_HEADER.size:
        raise BadHeader("file shorter than the 16-byte header")
    magic, version, count, reserved = _QMIB_HEADER.unpack_from(data)
    if magic != QMIB_MAGIC or version != QMIB_VERSION or reserved != b"\0\0\0":
        raise BadHeader("not a version-1 QMIB file")
    body = data[_QMIB_HEADER.size:]
    if len(body) % 8:
        raise TrailingBytes(f"{len(body)} body bytes is not a multiple of 8")
    words = [int.from_bytes(body[i:i + 8], "little") for i in range(0, len(body), 8)]
    return QmiProgram([decode_qmi(w) for w in words], count)


# -- Chimera ----------------------------------------------------------------

@dataclass(frozen=True)
class ChimeraTopology:
    """``rows x cols`` grid of K_{4,4} cells; side 0 couples vertically, side 1 horizontally."""

    rows: int
    cols: int
    shore: int = field(default=4, init=False)

    @property
    def num_qubits(self) -> int:
        return 8 * self.rows * self.cols

    def qubit(self, r: int, c: int, side: int, k: int) -> int:
        return 8 * (r * self.cols + c) + 4 * side + k

    def coords(self, q: int) -> tuple[int, int, int, int]:
        cell, rem = divmod(q, 8)
        r, c = divmod(cell, self.cols)
        return r, c, rem // 4, rem % 4

    def __contains__(self, q: int) -> bool:
        return 0 <= q < self.num_qubits


def chimera_adjacent(q1: int, q2: int, topo: ChimeraTopology) -> bool:
    if q1 not in topo or q2 not in topo:
        raise IndexError(f"qubit outside {topo.rows}x{topo.cols} Chimera")
    r1, c1, s1, k1 = topo.coords(q1)
    r2, c2, s2, k2 = topo.coords(q2)
    if (r1, c1) == (r2, c2):
        return s1 != s2
    if s1 != s2 or k1 != k2:
        return False
    if s1 == 0:
        return c1 == c2 and abs(r1 - r2) == 1
    return r1 == r2 and abs(c1 - c2) == 1


def chimera_edges(topo: ChimeraTopology) -> list[tuple[int, int]]:
    edges = []
    for r in range(topo.rows):
        for c in range(topo.cols):
            for i in range(4):
                for j in range(4):
                    edges.append((topo.qubit(r, c, 0, i), topo.qubit(r, c, 1, j)))
                if r + 1 < topo.rows:
                    edges.append((topo.qubit(r, c, 0, i), topo.qubit(r + 1, c, 0, i)))
                if c + 1 < topo.cols:
                    edges.append((topo.qubit(r, c, 1, i), topo.qubit(r, c + 1, 1, i)))
    return sorted(edges)


def validate_embedding(prog: QmiProgram, topo: ChimeraTopology) -> list[str]:
    out = []
    for i, inst in enumerate(prog.instructions):
        missing = [q for q in sorted(set(inst.key)) if q not in topo]
        if missing:
            out.append(f"QMI {i} {inst.key}: qubit {missing[0]} outside {topo.num_qubits}-qubit Chimera")
        elif not inst.is_bias and not chimera_adjacent(*inst.key, topo):
            out.append(f"QMI {i} {inst.key}: no coupler between these qubits")
    return out


# -- Ising ------------------------------------------------------------------

@dataclass
class IsingProblem:
    """``E(s) = sum h_i s_i + sum J_ij s_i s_j + offset`` with pair keys stored as ``i < j``."""

    h: dict = field(default_factory=dict)
    J: dict = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self):
        couplings = {}
        for (i, j), v in self.J.items():
            if i == j:
                raise ValueError(f"coupling on a single qubit {i}")
            key = (min(i, j), max(i, j))
            if key in couplings:
                raise DuplicateKey(f"coupling {key} given twice")
            couplings[key] = v
        self.J = couplings

    @property
    def variables(self) -> list[int]:
        """Sorted qubit indices; spin configurations are ordered this way."""
        vs = set(self.h)
        for i, j in self.J:
            vs.update((i, j))
        return sorted(vs)

    def arrays(self):
        """(variables, h vector, symmetric coupling matrix) over :attr:`variables`."""
        vs = self.variables
        pos = {v: k for k, v in enumerate(vs)}
        hv = np.zeros(len(vs))
        for q, v in self.h.items():
            hv[pos[q]] = v
        jm = np.zeros((len(vs), len(vs)))
        for (i, j), v in self.J.items():
            jm[pos[i], pos[j]] = jm[pos[j], pos[i]] = v
        return vs, hv, jm


def to_ising(prog: QmiProgram) -> IsingProblem:
    h, J = {}, {}
    for inst in prog.instructions:
        if inst.is_bias:
            h[inst.qubit_a] = inst.value
        else:
            J[inst.key] = inst.value
    return IsingProblem(h, J)


def qubo_to_ising(Q: Mapping[tuple[int, int], float]) -> IsingProblem:
    """Substitute ``x = (1 + s) / 2`` into ``sum Q_ij x_i x_j``."""
    h: dict[int, float] = {}
    J: dict[tuple[int, int], float] = {}
    offset = 0.0
    for (i, j), q in Q.items():
        if i == j:
            h[i] = h.get(i, 0.0) + q / 2
            offset += q / 2
        else:
            key = (min(i, j), max(i, j))
            J[key] = J.get(key, 0.0) + q / 4
            h[i] = h.get(i, 0.0) + q / 4
            h[j] = h.get(j, 0.0) + q / 4
            offset += q / 4
    return IsingProblem(h, J, offset)


def qubo_objective(Q: Mapping[tuple[int, int], float], x: Mapping[int, int]) -> float:
    return sum(q * x[i] * x[j] for (i, j), q in Q.items())


def ising_energy(problem: IsingProblem, s: Sequence[int] | Mapping[int, int]) -> float:
    """Energy of spins given as a mapping qubit -> spin or a sequence in ``problem.variables`` order."""
    if not isinstance(s, Mapping):
        vs = problem.variables
        if len(s) != len(vs):
            raise ValueError(f"expected {len(vs)} spins, got {len(s)}")
        s = dict(zip(vs, s))
    e = problem.offset
    e += sum(v * s[q] for q, v in problem.h.items())
    e += sum(v * s[i] * s[j] for (i, j), v in problem.J.items())
    return float(e)


def _energies(spins: np.ndarray, hv: np.ndarray, jm: np.ndarray, offset: float) -> np.ndarray:
    """Energies for a (batch, n) array of spins; ``jm`` symmetric, each pair counted once."""
    return spins @ hv + 0.5 * np.einsum("bi,ij,bj->b", spins, jm, spins) + offset


@dataclass
class GroundState:
    energy: float
    configurations: list[tuple[int, ...]]
    degeneracy: int


def brute_force_ground_state(problem: IsingProblem, chunk_bits: int = 16) -> GroundState:
    """Exhaustive minimum. Configuration ``m`` has spin ``+1`` on variable ``k`` iff bit ``k`` of ``m`` is set."""
    vs, hv, jm = problem.arrays()
    n = len(vs)
    if n > MAX_BRUTE_FORCE:
        raise TooLarge(f"{n} spins exceeds the exhaustive limit of {MAX_BRUTE_FORCE}")
    total = 1 << n
    step = 1 << min(chunk_bits, n)
    shifts = np.arange(n, dtype=np.int64)
    best = math.inf
    configs: list[tuple[int, ...]] = []
    count = 0
    for start in range(0, total, step):
        idx = np.arange(start, min(start + step, total), dtype=np.int64)
        spins = (((idx[:, None] >> shifts) & 1) * 2 - 1).astype(float)
        e = _energies(spins, hv, jm, problem.offset)
        lo = float(e.min())
        if lo < best - ENERGY_TOL:
            best, configs, count = lo, [], 0
        if lo <= best + ENERGY_TOL:
            hits = np.flatnonzero(e <= best + ENERGY_TOL)
            count += len(hits)
            room = MAX_REPORTED_CONFIGS - len(configs)
            configs.extend(tuple(int(v) for v in spins[k]) for k in hits[:room])
    return GroundState(best, configs, count)


# -- sampling ---------------------------------------------------------------

@dataclass
class Sample:
    spins: tuple[int, ...]
    energy: float
    multiplicity: int


@dataclass
class SampleSet:
    """Aggregated reads, sorted by energy then configuration."""

    variables: list[int]
    samples: list[Sample]
    reads: int
    seed: int

    @property
    def min_energy(self) -> float:
        return self.samples[0].energy


BETA_START, BETA_END = 0.1, 3.0


def simulated_anneal(problem: IsingProblem, reads: int = 100, sweeps: int = 1000, seed: int = 0) -> SampleSet:
    """Single-spin-flip Metropolis with inverse temperature rising linearly 0.1 -> 3.0.

    Read ``r`` draws its start state and acceptance uniforms from
    ``numpy.random.default_rng(seed + r)``, so results do not depend on batching.
    """
    if reads < 1 or sweeps < 1:
        raise ValueError("reads and sweeps must be >= 1")
    vs, hv, jm = problem.arrays()
    n = len(vs)
    betas = np.linspace(BETA_START, BETA_END, sweeps)
    finals = np.empty((reads, n))
    # bound the pre-drawn uniform buffer to ~4M floats
    batch = max(1, min(reads, 4_000_000 // max(1, sweeps * n)))
    for lo in range(0, reads, batch):
        rs = range(lo, min(lo + batch, reads))
        starts, uniforms = [], []
        for r in rs:
            g = np.random.default_rng(seed + r)
            starts.append(g.integers(0, 2, n) * 2 - 1)
            uniforms.append(g.random((sweeps, n)))
        s = np.array(starts, dtype=float).reshape(len(rs), n)
        u = np.array(uniforms).reshape(len(rs), sweeps, n)
        for k, beta in enumerate(betas):
            for i in range(n):
                delta = -2.0 * s[:, i] * (hv[i] + s @ jm[:, i])
                with np.errstate(over="ignore"):
                    accept = (delta <= 0) | (u[:, k, i] < np.exp(-beta * delta))
                s[accept, i] *= -1
        finals[lo:lo + len(rs)] = s
    energies = _energies(finals, hv, jm, problem.offset)
    tally: dict[tuple[int, ...], list] = {}
    for row, e in zip(finals.astype(int), energies):
        key = tuple(int(v) for v in row)
        if key in tally:
            tally[key][1] += 1
        else:
            tally[key] = [float(e), 1]
    samples = [Sample(k, e, m) for k, (e, m) in tally.items()]
    samples.sort(key=lambda x: (x.energy, x.spins))
    return SampleSet(vs, samples, reads, seed)


def success_probability(samples: SampleSet, ground_energy: float) -> tuple[float, float]:
    """Fraction of reads at the ground energy, with its binomial standard error."""
    hits = sum(x.multiplicity for x in samples.samples if x.energy <= ground_energy + ENERGY_TOL)
    p = hits / samples.reads
    return p, math.sqrt(p * (1 - p) / samples.reads)
