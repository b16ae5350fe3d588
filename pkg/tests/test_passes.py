import random

import numpy as np
import pytest

from qisa.asm import parse_assembly
from qisa.errors import Disconnected, NotCnot, Unroutable
from qisa.isa import OPCODES, GateInstruction, Program, gate
from qisa.passes import (
    Layout,
    Topology,
    format_topology,
    line_topology,
    parse_topology,
    preset_topology,
    relabel_records,
    reverse_cnot_rewrite,
    route_swaps,
    schedule_time_slices,
    star5,
    validate_connectivity,
)
from qisa.vm import program_unitary, run_program, sample_shots


def half_adder(a, b):
    src = ".qubits 4\n"
    src += "x q[0]\n" * a + "x q[1]\n" * b
    src += "ccx q[0], q[1], q[3]\ncnot q[0], q[2]\ncnot q[1], q[2]\nmeasure q[2]\nmeasure q[3]\n"
    return parse_assembly(src)


def asap_oracle(prog):
    """Level of each instruction = 1 + max level of any earlier instruction sharing a qubit."""
    levels = []
    for i, inst in enumerate(prog.instructions):
        deps = [levels[j] for j in range(i) if set(prog.instructions[j].qubits) & set(inst.qubits)]
        levels.append(max(deps, default=-1) + 1)
    return levels


class TestTopology:
    def test_presets(self):
        assert line_topology(3).edges == {(0, 1), (1, 2)}
        assert len(preset_topology("complete-4").edges) == 12
        assert star5().edges == {(0, 2), (1, 2), (3, 2), (4, 2)}
        with pytest.raises(ValueError):
            preset_topology("ring-3")

    def test_self_edge_rejected(self):
        with pytest.raises(ValueError):
            Topology(2, {(1, 1)})

    def test_file_round_trip(self):
        text = format_topology(star5())
        assert text.splitlines()[0] == "qubits 5"
        assert parse_topology(text) == star5()

    def test_parse_errors(self):
        with pytest.raises(ValueError):
            parse_topology("edge 0 1\n")
        with pytest.raises(ValueError):
            parse_topology("qubits 2\nedge 0\n")

    def test_shortest_path_tie_break(self):
        # two length-2 routes 0-1-3 and 0-2-3
        topo = Topology(4, {(0, 2), (2, 3), (0, 1), (1, 3)})
        assert topo.shortest_path(0, 3) == [0, 1, 3]


class TestConnectivity:
    def test_native(self):
        assert validate_connectivity(Program(2, [gate("cnot", target=1, control=0)]), line_topology(2)) == []

    def test_direction(self):
        (v,) = validate_connectivity(Program(2, [gate("cnot", target=0, control=1)]), line_topology(2))
        assert v.reason == "wrong direction"

    def test_swap_cz_undirected(self):
        prog = Program(2, [gate("swap", target=0, control=1), gate("cz", target=0, control=1)])
        assert validate_connectivity(prog, line_topology(2)) == []

    def test_uncoupled(self):
        (v,) = validate_connectivity(Program(3, [gate("cz", target=2, control=0)]), line_topology(3))
        assert v.index == 0 and "not coupled" in v.reason

    def test_half_adder_star5(self):
        prog = half_adder(1, 1)
        assert validate_connectivity(prog, star5())
        assert validate_connectivity(route_swaps(prog, star5()).program, star5()) == []


class TestReverseCnot:
    def test_shape_and_edges(self):
        out = reverse_cnot_rewrite(gate("cnot", target=1, control=0))
        assert len(out) == 5
        (mid,) = [i for i in out if i.mnemonic == "cnot"]
        assert (mid.control, mid.target) == (1, 0)

    def test_equivalent(self):
        inst = gate("cnot", target=1, control=0)
        got = program_unitary(Program(2, reverse_cnot_rewrite(inst)))
        assert np.max(np.abs(got - program_unitary(Program(2, [inst])))) < 1e-10

    def test_twice(self):
        once = reverse_cnot_rewrite(gate("cnot", target=1, control=0))
        twice = []
        for inst in once:
            twice.extend(reverse_cnot_rewrite(inst) if inst.mnemonic == "cnot" else [inst])
        # only the inner cnot is rewritten again: 4 hadamards + 5
        assert len(twice) == 9
        ref = program_unitary(Program(2, [gate("cnot", target=1, control=0)]))
        assert np.max(np.abs(program_unitary(Program(2, twice)) - ref)) < 1e-10

    def test_not_cnot(self):
        with pytest.raises(NotCnot):
            reverse_cnot_rewrite(gate("cz", target=1, control=0))


class TestRouting:
    def test_conforming_unchanged(self):
        prog = Program(3, [gate("h", 0), gate("cnot", target=1, control=0), gate("cnot", target=2, control=1)])
        routing = route_swaps(prog, line_topology(3))
        assert routing.program == prog
        assert routing.layout == Layout.identity(3)

    def test_tuple_unpacking(self):
        prog, layout = route_swaps(Program(2, []), line_topology(2))
        assert prog == Program(2, []) and layout == Layout.identity(2)

    def test_line_one_swap(self):
        prog = Program(3, [gate("h", 0), gate("cnot", target=2, control=0), gate("measure", 0), gate("measure", 2)])
        routing = route_swaps(prog, line_topology(3))
        assert sum(i.mnemonic == "swap" for i in routing.program) == 1
        assert validate_connectivity(routing.program, line_topology(3)) == []
        assert sample_shots(routing.program, 400, seed=5) == sample_shots(prog, 400, seed=5)

    def test_line_records_relabel(self):
        prog = Program(3, [gate("x", 0), gate("cnot", target=2, control=0), gate("measure", 0), gate("measure", 2)])
        routing = route_swaps(prog, line_topology(3))
        recs = relabel_records(run_program(routing.program).records, routing)
        assert [(r.qubit, r.outcome) for r in recs] == [(0, 1), (2, 1)]

    def test_measure_then_swap(self):
        # logical 0 is measured, then moved by a routing swap; relabeling must use the measure-time layout
        prog = Program(3, [gate("x", 0), gate("measure", 0), gate("cnot", target=2, control=0), gate("measure", 1)])
        routing = route_swaps(prog, line_topology(3))
        recs = relabel_records(run_program(routing.program).records, routing)
        assert [(r.qubit, r.outcome) for r in recs] == [(0, 1), (1, 0)]

    @pytest.mark.parametrize("a,b", [(0, 0), (0, 1), (1, 0), (1, 1)])
    def test_half_adder_truth_table_star5(self, a, b):
        routing = route_swaps(half_adder(a, b), star5())
        assert validate_connectivity(routing.program, star5()) == []
        recs = {r.qubit: r for r in relabel_records(run_program(routing.program).records, routing)}
        assert (recs[2].outcome, recs[3].outcome) == (a ^ b, a & b)
        state = run_program(Program(routing.program.qubit_count, [i for i in routing.program if i.mnemonic != "measure"])).final_state
        assert abs(state.qubit_probability(routing.layout.physical[2], a ^ b) - 1) < 1e-9
        assert abs(state.qubit_probability(routing.layout.physical[3], a & b) - 1) < 1e-9

    def test_disconnected(self):
        with pytest.raises(Disconnected):
            route_swaps(Program(2, []), Topology(3, {(0, 1)}))

    def test_too_big(self):
        with pytest.raises(Unroutable):
            route_swaps(Program(4, []), line_topology(3))

    def test_layout_permutation_matrix(self):
        layout = Layout((1, 2, 0))
        p = layout.permutation_matrix()
        # logical |q0=1> lands on physical qubit 1
        assert p[0b010, 0b001] == 1
        assert np.array_equal(p @ p.T, np.eye(8))

    def test_unitary_equivalence_small(self):
        prog = Program(3, [gate("h", 0), gate("cnot", target=2, control=0), gate("t", 2), gate("cz", target=0, control=2)])
        routing = route_swaps(prog, line_topology(3))
        expect = routing.layout.permutation_matrix() @ program_unitary(prog)
        assert np.max(np.abs(program_unitary(routing.program) - expect)) < 1e-9


class TestSchedule:
    def test_disjoint(self):
        assert schedule_time_slices(Program(2, [gate("x", 0), gate("x", 1)])) == [[0, 1]]

    def test_dependency(self):
        assert schedule_time_slices(Program(2, [gate("x", 0), gate("cnot", target=1, control=0)])) == [[0], [1]]

    def test_mixed(self):
        prog = Program(3, [gate("x", 0), gate("x", 1), gate("cnot", target=1, control=0), gate("x", 2)])
        slices = schedule_time_slices(prog)
        levels = asap_oracle(prog)
        assert levels == [0, 0, 1, 0]
        assert slices == [[0, 1, 3], [2]]

    def test_chain(self):
        prog = Program(2, [gate("h", 0)] * 7)
        assert len(schedule_time_slices(prog)) == 7

    def test_empty(self):
        assert schedule_time_slices(Program(2, [])) == []

    def test_matches_oracle(self):
        rng = random.Random(17)
        ops = [op for op in OPCODES]
        for _ in range(200):
            n = rng.randint(2, 6)
            insts = []
            for _ in range(rng.randint(0, 25)):
                op = rng.choice(ops)
                t = rng.randrange(n)
                c = t if op.arity == 1 else rng.choice([q for q in range(n) if q != t])
                insts.append(GateInstruction(op, t, c))
            prog = Program(n, insts)
            slices = schedule_time_slices(prog)
            levels = asap_oracle(prog)
            assert sorted(i for s in slices for i in s) == list(range(len(insts)))
            for k, s in enumerate(slices):
                assert all(levels[i] == k for i in s)
