"""Exit criteria. Each test is tagged with its criterion; the terminal summary prints PASS/FAIL per criterion."""

import itertools
import random
import time

import numpy as np
import pytest

from qisa.asm import Macro, expand_macros, parse_assembly
from qisa.capacity import gate_isa_capacity, logical_clique_estimate, multi_message_capacity, qmi_capacity
from qisa.isa import OPCODES, EncodingMode, GateInstruction, Kind, Program, decode_instruction, encode_instruction, gate
from qisa.passes import Topology, line_topology, relabel_records, reverse_cnot_rewrite, route_swaps, schedule_time_slices, star5, validate_connectivity
from qisa.qmi import (
    ChimeraTopology,
    IsingProblem,
    QmiInstruction,
    brute_force_ground_state,
    chimera_adjacent,
    chimera_edges,
    decode_qmi,
    encode_qmi,
    ising_energy,
    qubo_objective,
    qubo_to_ising,
    simulated_anneal,
)
from qisa.vm import program_unitary, run_program

criterion = pytest.mark.criterion


@criterion(1, "capacity regression")
def test_capacity_regression():
    t0 = time.perf_counter()
    r64 = gate_isa_capacity(64, 4, 2)
    assert r64.max_qubits == 2**30 and r64.scientific == "1.0737e9"
    r128 = gate_isa_capacity(128, 4, 2)
    assert r128.max_qubits == 2**62 and r128.scientific == "4.6117e18"
    assert multi_message_capacity(64, 4).max_qubits == 2**60
    assert qmi_capacity(64, 10).max_qubits == 134_217_728
    assert logical_clique_estimate(2**27) == 4096
    assert time.perf_counter() - t0 < 1.0


def _random_valid(rng, mode):
    op = rng.choice(OPCODES)
    bits = mode.address_bits
    t = rng.randrange(1 << rng.randint(1, bits))
    if op.arity == 1:
        return GateInstruction(op, t, t)
    c = t
    while c == t:
        c = rng.randrange(1 << rng.randint(1, bits))
    return GateInstruction(op, t, c)


@criterion(2, "codec round-trips")
def test_codec_round_trips():
    t0 = time.perf_counter()
    rng = random.Random(2024)
    for mode in EncodingMode:
        for _ in range(10_000):
            inst = _random_valid(rng, mode)
            assert decode_instruction(encode_instruction(inst, mode), mode) == inst
    for _ in range(10_000):
        inst = QmiInstruction(rng.randrange(1 << 27), rng.randrange(1 << 27), rng.uniform(-1, 1))
        back = decode_qmi(encode_qmi(inst))
        assert back.key == inst.key and abs(back.value - inst.value) <= 1 / 1022
    assert time.perf_counter() - t0 < 5.0


def _half_adder(a, b):
    src = ".qubits 4\n" + "x q[0]\n" * a + "x q[1]\n" * b
    src += "ccx q[0], q[1], q[3]\ncnot q[0], q[2]\ncnot q[1], q[2]\nmeasure q[2]\nmeasure q[3]\n"
    return parse_assembly(src)


@criterion(3, "half-adder truth table")
def test_half_adder_truth_table():
    t0 = time.perf_counter()
    for a, b in itertools.product((0, 1), repeat=2):
        want = {2: a ^ b, 3: a & b}
        prog = _half_adder(a, b)
        recs = {r.qubit: r for r in run_program(prog, seed=a * 2 + b).records}
        for q, v in want.items():
            assert recs[q].outcome == v and abs(recs[q].probability - 1) < 1e-9

        routing = route_swaps(prog, star5())
        assert validate_connectivity(routing.program, star5()) == []
        recs = {r.qubit: r for r in relabel_records(run_program(routing.program, seed=7).records, routing)}
        for q, v in want.items():
            assert recs[q].outcome == v and abs(recs[q].probability - 1) < 1e-9
    assert time.perf_counter() - t0 < 1.0


@criterion(4, "toffoli decomposition")
def test_toffoli_decomposition():
    toffoli = np.zeros((8, 8))
    for idx in range(8):
        toffoli[idx ^ ((idx & 1) & (idx >> 1 & 1)) << 2, idx] = 1
    u = program_unitary(expand_macros(Program(3, [Macro("ccx", (0, 1, 2))])))
    assert np.max(np.abs(u - toffoli)) < 1e-10

    cnot = gate("cnot", target=1, control=0)
    rewritten = program_unitary(Program(2, reverse_cnot_rewrite(cnot)))
    assert np.max(np.abs(rewritten - program_unitary(Program(2, [cnot])))) < 1e-10


@criterion(5, "chimera counts")
def test_chimera_counts():
    big = ChimeraTopology(16, 16)
    assert big.num_qubits == 2048
    assert len(chimera_edges(big)) == 6016
    small = ChimeraTopology(2, 2)
    edges = set(chimera_edges(small))
    for a, b in itertools.product(range(small.num_qubits), repeat=2):
        assert chimera_adjacent(a, b, small) == ((min(a, b), max(a, b)) in edges)


def _oracle_ground(h, J):
    best = None
    for spins in itertools.product((-1, 1), repeat=8):
        e = sum(h[i] * spins[i] for i in h) + sum(v * spins[i] * spins[j] for (i, j), v in J.items())
        best = e if best is None else min(best, e)
    return best


def _random_cell(rng):
    J = {e: rng.uniform(-1, 1) for e in chimera_edges(ChimeraTopology(1, 1))}
    h = {q: rng.uniform(-1, 1) for q in range(8)}
    return IsingProblem(h, J)


@criterion(6, "ising correctness")
def test_ising_correctness():
    rng = random.Random(66)
    for _ in range(50):
        p = _random_cell(rng)
        assert brute_force_ground_state(p).energy == pytest.approx(_oracle_ground(p.h, p.J), abs=1e-12)
    for _ in range(20):
        n = rng.randint(1, 12)
        Q = {(i, j): rng.uniform(-3, 3) for i in range(n) for j in range(i, n) if rng.random() < 0.5}
        Q[(n - 1, n - 1)] = Q.get((n - 1, n - 1), 0.0)
        ising = qubo_to_ising(Q)
        for x in itertools.product((0, 1), repeat=n):
            xs = dict(enumerate(x))
            spins = {v: 2 * xs[v] - 1 for v in ising.variables}
            assert abs(qubo_objective(Q, xs) - ising_energy(ising, spins)) < 1e-9


@criterion(7, "annealer efficacy")
def test_annealer_efficacy():
    t0 = time.perf_counter()
    rng = random.Random(77)
    found = 0
    for k in range(20):
        p = _random_cell(rng)
        exact = brute_force_ground_state(p).energy
        ss = simulated_anneal(p, reads=100, sweeps=200, seed=1000 * k)
        assert ss.min_energy >= exact - 1e-9
        found += abs(ss.min_energy - exact) <= 1e-9
    assert found >= 19  # 95% of 20
    assert time.perf_counter() - t0 < 10.0


def _random_program(rng, n, length, measure=False):
    ops = [op for op in OPCODES if measure or op.kind is not Kind.MEASUREMENT]
    insts = []
    for _ in range(length):
        op = rng.choice(ops)
        t = rng.randrange(n)
        c = t if op.arity == 1 else rng.choice([q for q in range(n) if q != t])
        insts.append(GateInstruction(op, t, c))
    return Program(n, insts)


def _random_connected(rng, n):
    edges = set()
    for q in range(1, n):
        p = rng.randrange(q)
        edges.add((p, q) if rng.random() < 0.5 else (q, p))
    for _ in range(rng.randint(0, n)):
        a, b = rng.sample(range(n), 2)
        if (b, a) not in edges:
            edges.add((a, b))
    return Topology(n, frozenset(edges))


@criterion(8, "scheduler and routing invariants")
def test_scheduler_and_routing_invariants():
    rng = random.Random(88)
    for _ in range(1000):
        n = rng.randint(1, 8)
        prog = _random_program(rng, n, rng.randint(0, 30), measure=True) if n > 1 else Program(1, [gate("h", 0)] * rng.randint(0, 5))
        slices = schedule_time_slices(prog)
        order = [i for s in slices for i in s]
        assert sorted(order) == list(range(len(prog)))
        for s in slices:
            touched = [q for i in s for q in prog.instructions[i].qubits]
            assert len(touched) == len(set(touched))
        for q in range(n):
            on_q = [i for i in order if q in prog.instructions[i].qubits]
            assert on_q == sorted(on_q)

    for k in range(100):
        n = rng.randint(2, 8)
        topo = [line_topology(n), _random_connected(rng, n), star5() if n == 5 else _random_connected(rng, n)][k % 3]
        prog = _random_program(rng, n, rng.randint(1, 25))
        routing = route_swaps(prog, topo)
        assert validate_connectivity(routing.program, topo) == []
        expect = routing.layout.permutation_matrix() @ program_unitary(prog)
        assert np.max(np.abs(program_unitary(routing.program) - expect)) < 1e-9
