"""Compiler passes: connectivity checking, cnot direction fixing, swap routing, ASAP scheduling."""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import Disconnected, NotCnot, Unroutable
from .isa import GateInstruction, Kind, Program, gate


@dataclass(frozen=True)
class Topology:
    """Directed coupling graph. Edge ``(c, t)`` means ``cnot`` with control c, target t is native."""

    qubit_count: int
    edges: frozenset

    def __post_init__(self):
        edges = frozenset((int(c), int(t)) for c, t in self.edges)
        for c, t in edges:
            if c == t:
                raise ValueError(f"self-edge on qubit {c}")
            if not (0 <= c < self.qubit_count and 0 <= t < self.qubit_count):
                raise ValueError(f"edge {c}->{t} outside {self.qubit_count} qubits")
        object.__setattr__(self, "edges", edges)
        nbrs = {q: set() for q in range(self.qubit_count)}
        for c, t in edges:
            nbrs[c].add(t)
            nbrs[t].add(c)
        object.__setattr__(self, "_neighbors", {q: tuple(sorted(s)) for q, s in nbrs.items()})

    def neighbors(self, q: int) -> tuple[int, ...]:
        return self._neighbors[q]

    def coupled(self, a: int, b: int) -> bool:
        return (a, b) in self.edges or (b, a) in self.edges

    def is_connected(self) -> bool:
        if self.qubit_count <= 1:
            return True
        return len(self._bfs(0)) == self.qubit_count

    def _bfs(self, src: int) -> dict[int, int]:
        dist = {src: 0}
        todo = deque([src])
        while todo:
            q = todo.popleft()
            for nb in self._neighbors[q]:
                if nb not in dist:
                    dist[nb] = dist[q] + 1
                    todo.append(nb)
        return dist

    def shortest_path(self, src: int, dst: int) -> list[int]:
        """Shortest undirected path; among equal lengths, the lexicographically smallest."""
        dist = self._bfs(dst)
        if src not in dist:
            raise Unroutable(f"no path between qubits {src} and {dst}")
        path = [src]
        while path[-1] != dst:
            here = path[-1]
            path.append(min(nb for nb in self._neighbors[here] if dist.get(nb) == dist[here] - 1))
        return path


def line_topology(n: int) -> Topology:
    return Topology(n, frozenset((i, i + 1) for i in range(n - 1)))


def complete_topology(n: int) -> Topology:
    return Topology(n, frozenset((a, b) for a in range(n) for b in range(n) if a != b))


def star5() -> Topology:
    """Five qubits, every cnot must target the hub qubit 2."""
    return Topology(5, frozenset((i, 2) for i in range(5) if i != 2))


def preset_topology(name: str) -> Topology:
    if name == "star5":
        return star5()
    m = re.fullmatch(r"(line|complete)-(\d+)", name)
    if not m:
        raise ValueError(f"unknown topology preset {name!r}")
    n = int(m.group(2))
    if n < 1:
        raise ValueError("topology needs at least one qubit")
    return line_topology(n) if m.group(1) == "line" else complete_topology(n)


def parse_topology(text: str) -> Topology:
    """Read ``.topo`` text: ``qubits N`` then ``edge c t`` lines; ``#`` comments allowed."""
    n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        try:
            if parts[0] == "qubits" and len(parts) == 2 and n is None:
                n = int(parts[1])
            elif parts[0] == "edge" and len(parts) == 3 and n is not None:
                edges.append((int(parts[1]), int(parts[2])))
            else:
                raise ValueError
        except ValueError:
            raise ValueError(f"line {lineno}: cannot parse {raw.strip()!r}") from None
    if n is None:
        raise ValueError("missing 'qubits N' line")
    return Topology(n, frozenset(edges))


def format_topology(topo: Topology) -> str:
    lines = [f"qubits {topo.qubit_count}"]
    lines += [f"edge {c} {t}" for c, t in sorted(topo.edges)]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Layout:
    """Bijection logical -> physical; ``physical[i]`` hosts logical qubit ``i``."""

    physical: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.physical) != list(range(len(self.physical))):
            raise ValueError(f"not a bijection: {self.physical}")

    @classmethod
    def identity(cls, n: int) -> "Layout":
        return cls(tuple(range(n)))

    def logical(self, phys: int) -> int:
        return self.physical.index(phys)

    def swapped(self, pa: int, pb: int) -> "Layout":
        """Layout after exchanging the contents of physical qubits ``pa`` and ``pb``."""
        out = list(self.physical)
        la, lb = self.logical(pa), self.logical(pb)
        out[la], out[lb] = pb, pa
        return Layout(tuple(out))

    def permutation_matrix(self) -> np.ndarray:
        """Matrix sending logical basis states to physical ones: bit i moves to bit physical[i]."""
        n = len(self.physical)
        dim = 1 << n
        perm = np.zeros((dim, dim))
        for idx in range(dim):
            out = 0
            for i, p in enumerate(self.physical):
                if idx >> i & 1:
                    out |= 1 << p
            perm[out, idx] = 1
        return perm


@dataclass(frozen=True)
class Violation:
    index: int
    instruction: GateInstruction
    reason: str

    def __str__(self):
        return f"instruction {self.index} ({self.instruction}): {self.reason}"


def validate_connectivity(prog: Program, topo: Topology) -> list[Violation]:
    """Every two-qubit instruction that the topology cannot execute natively."""
    out = []
    for i, inst in enumerate(prog.instructions):
        if any(q >= topo.qubit_count for q in inst.qubits):
            out.append(Violation(i, inst, f"qubit outside {topo.qubit_count}-qubit topology"))
            continue
        if inst.opcode.arity != 2:
            continue
        c, t = inst.control, inst.target
        if inst.mnemonic == "cnot":
            if (c, t) in topo.edges:
                continue
            reason = "wrong direction" if (t, c) in topo.edges else "qubits not coupled"
        elif topo.coupled(c, t):
            continue
        else:
            reason = "qubits not coupled"
        out.append(Violation(i, inst, reason))
    return out


def reverse_cnot_rewrite(inst: GateInstruction) -> list[GateInstruction]:
    """Equivalent cnot running on the reversed edge, conjugated by Hadamards."""
    if inst.mnemonic != "cnot":
        raise NotCnot(f"{inst} is not a cnot")
    c, t = inst.control, inst.target
    return [gate("h", c), gate("h", t), gate("cnot", target=c, control=t), gate("h", c), gate("h", t)]


@dataclass(frozen=True)
class Routing:
    """Result of :func:`route_swaps`.

    ``measured`` maps the index of each ``measure`` in the routed program to the
    logical qubit it reads, so records can be relabeled even after later swaps.
    """

    program: Program
    layout: Layout
    measured: dict

    def __iter__(self):
        return iter((self.program, self.layout))


def route_swaps(prog: Program, topo: Topology) -> Routing:
    """Greedy shortest-path swap insertion with an identity initial layout."""
    if prog.qubit_count > topo.qubit_count:
        raise Unroutable(f"program needs {prog.qubit_count} qubits, topology has {topo.qubit_count}")
    if not topo.is_connected():
        raise Disconnected("topology is not connected")
    layout = Layout.identity(topo.qubit_count)
    out: list[GateInstruction] = []
    measured = {}
    for inst in prog.instructions:
        if inst.opcode.arity == 1:
            p = layout.physical[inst.target]
            if inst.opcode.kind is Kind.MEASUREMENT:
                measured[len(out)] = inst.target
            out.append(gate(inst.opcode, p))
            continue
        pc, pt = layout.physical[inst.control], layout.physical[inst.target]
        if not topo.coupled(pc, pt):
            path = topo.shortest_path(pc, pt)
            # walk the control along the path until it neighbours the target
            for a, b in zip(path, path[1:-1]):
                out.append(gate("swap", target=b, control=a))
                layout = layout.swapped(a, b)
            pc = layout.physical[inst.control]
        if inst.mnemonic == "cnot" and (pc, pt) not in topo.edges:
            out.extend(reverse_cnot_rewrite(gate("cnot", target=pt, control=pc)))
        else:
            out.append(GateInstruction(inst.opcode, pt, pc))
    return Routing(Program(topo.qubit_count, out), layout, measured)


def relabel_records(records, routing: Routing):
    """Rewrite measurement records from a run of ``routing.program`` onto logical qubits."""
    return [type(r)(r.step, routing.measured[r.step], r.outcome, r.probability) for r in records]


def schedule_time_slices(prog: Program) -> list[list[int]]:
    """ASAP schedule: each slice lists instruction indices acting on disjoint qubits."""
    ready: dict[int, int] = {}
    slices: list[list[int]] = []
    for i, inst in enumerate(prog.instructions):
        k = max((ready.get(q, 0) for q in inst.qubits), default=0)
        if k == len(slices):
            slices.append([])
        slices[k].append(i)
        for q in inst.qubits:
            ready[q] = k + 1
    return slices

