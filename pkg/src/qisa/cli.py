"""``qisa`` command line.

Exit codes: 0 success, 1 parse/validation failure, 2 usage error, 3 size limit.
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

from . import __version__
from .asm import emit_assembly, parse_assembly, validate_program
from .capacity import (
    format_kv,
    format_table,
    gate_isa_capacity,
    multi_message_capacity,
    qmi_capacity,
    standard_reports,
)
from .errors import AssemblyError, CapExceeded, InvalidBudget, QisaError, TooLarge
from .isa import EncodingMode, read_qbin, write_qbin
from .passes import parse_topology, preset_topology, route_swaps, validate_connectivity
from .qmi import (
    ChimeraTopology,
    brute_force_ground_state,
    parse_qmi_text,
    read_qmib,
    simulated_anneal,
    success_probability,
    to_ising,
    validate_embedding,
)
from .vm import sample_shots

EXIT_OK, EXIT_INVALID, EXIT_USAGE, EXIT_LIMIT = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _read(path: str, binary: bool = False):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{path}: no such file")
    return p.read_bytes() if binary else p.read_text(encoding="utf-8")


def _load_program(path: str):
    if path.endswith(".qbin"):
        prog, _ = read_qbin(_read(path, binary=True))
        return prog
    return parse_assembly(_read(path))


def _report_diagnostics(path, diags) -> None:
    for d in diags:
        _err(f"{path}:{d}")


def cmd_assemble(args) -> int:
    mode = EncodingMode.parse(args.mode)
    prog = parse_assembly(_read(args.input))
    diags = validate_program(prog, mode)
    if diags:
        _report_diagnostics(args.input, diags)
        return EXIT_INVALID
    Path(args.output).write_bytes(write_qbin(prog, mode))
    return EXIT_OK


def cmd_disassemble(args) -> int:
    prog, _ = read_qbin(_read(args.input, binary=True))
    text = emit_assembly(prog) + "\n"
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text, encoding="utf-8")
    return EXIT_OK


def _load_topology(spec: str):
    if Path(spec).is_file():
        return parse_topology(Path(spec).read_text(encoding="utf-8"))
    try:
        return preset_topology(spec)
    except ValueError as e:
        raise UsageError(str(e)) from None


def cmd_run(args) -> int:
    prog = _load_program(args.input)
    diags = validate_program(prog)
    if diags:
        _report_diagnostics(args.input, diags)
        return EXIT_INVALID
    if args.topology:
        topo = _load_topology(args.topology)
        if args.route:
            routing = route_swaps(prog, topo)
            prog = routing.program
            print("layout\t" + " ".join(f"{lq}->{pq}" for lq, pq in enumerate(routing.layout.physical)))
        else:
            bad = validate_connectivity(prog, topo)
            if bad:
                for v in bad:
                    _err(f"{args.input}: {v}")
                return EXIT_INVALID
    elif args.route:
        raise UsageError("--route needs --topology")
    hist = sample_shots(prog, args.shots, args.seed)
    for bits in sorted(hist):
        print(f"{bits}\t{hist[bits]}")
    return EXIT_OK


def _parse_chimera(text: str) -> ChimeraTopology:
    m = re.fullmatch(r"(\d+)[xX](\d+)", text)
    if not m:
        raise UsageError(f"--chimera expects MxN, got {text!r}")
    return ChimeraTopology(int(m.group(1)), int(m.group(2)))


def cmd_anneal(args) -> int:
    if args.input.endswith(".qmib"):
        prog = read_qmib(_read(args.input, binary=True))
    else:
        prog = parse_qmi_text(_read(args.input))
    if args.chimera:
        bad = validate_embedding(prog, _parse_chimera(args.chimera))
        if bad:
            for v in bad:
                _err(f"{args.input}: {v}")
            return EXIT_INVALID
    problem = to_ising(prog)
    if args.reads < 1 or args.sweeps < 1:
        raise UsageError("--reads and --sweeps must be >= 1")
    samples = simulated_anneal(problem, args.reads, args.sweeps, args.seed)
    print("variables\t" + " ".join(map(str, samples.variables)))
    print("energy\tcount\tspins")
    for s in samples.samples:
        spins = "".join("+" if v > 0 else "-" for v in s.spins)
        print(f"{s.energy:.6f}\t{s.multiplicity}\t{spins}")
    if args.exact:
        ground = brute_force_ground_state(problem)
        p, se = success_probability(samples, ground.energy)
        print(f"ground_energy\t{ground.energy:.6f}")
        print(f"degeneracy\t{ground.degeneracy}")
        print(f"success_probability\t{p:.4f}\t±{se:.4f}")
    return EXIT_OK


def cmd_capacity(args) -> int:
    if args.qmi:
        reports = [qmi_capacity(args.word or 64, args.value)]
    elif args.multi_message:
        reports = [multi_message_capacity(args.word or 64, args.opcode)]
    elif args.word is not None:
        reports = [gate_isa_capacity(args.word, args.opcode, args.operands)]
    else:
        reports = standard_reports()
    if args.format == "kv":
        print("\n\n".join(format_kv(r) for r in reports))
    else:
        print(format_table(reports))
        for r in reports:
            print(f"{r.scheme}: {r.summary()}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qisa", description="Fixed-width quantum ISA toolchain.")
    parser.add_argument("--version", action="version", version=f"qisa {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("assemble", help="assemble .qisa text into a .qbin file")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--mode", default="single64", choices=[m.value for m in EncodingMode])
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("disassemble", help="print a .qbin file as canonical assembly")
    p.add_argument("input")
    p.add_argument("output", nargs="?")
    p.set_defaults(func=cmd_disassemble)

    p = sub.add_parser("run", help="simulate a program and print the measurement histogram")
    p.add_argument("input")
    p.add_argument("--shots", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--topology", help="preset (star5, line-N, complete-N) or .topo file")
    p.add_argument("--route", action="store_true", help="insert swaps to fit --topology")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("anneal", help="sample a QMI program with simulated annealing")
    p.add_argument("input")
    p.add_argument("--reads", type=int, default=100)
    p.add_argument("--sweeps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--chimera", metavar="MxN", help="check couplers against an MxN Chimera")
    p.add_argument("--exact", action="store_true", help="also solve exhaustively and report success rate")
    p.set_defaults(func=cmd_anneal)

    p = sub.add_parser("capacity", help="addressable-qubit arithmetic")
    p.add_argument("--word", type=int)
    p.add_argument("--opcode", type=int, default=4)
    p.add_argument("--operands", type=int, default=2)
    p.add_argument("--multi-message", action="store_true")
    p.add_argument("--qmi", action="store_true")
    p.add_argument("--value", type=int, default=10)
    p.add_argument("--format", choices=["table", "kv"], default="table")
    p.set_defaults(func=cmd_capacity)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except UsageError as e:
        _err(f"qisa: {e}")
        return EXIT_USAGE
    except AssemblyError as e:
        _report_diagnostics(args.input, e.diagnostics)
        return EXIT_INVALID
    except (CapExceeded, TooLarge) as e:
        _err(f"qisa: {e}")
        return EXIT_LIMIT
    except InvalidBudget as e:
        _err(f"qisa: {e}")
        return EXIT_INVALID
    except (QisaError, ValueError) as e:
        _err(f"qisa: {e}")
        return EXIT_INVALID
    except OSError as e:
        _err(f"qisa: {e}")
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
