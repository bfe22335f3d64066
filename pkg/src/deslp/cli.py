"""Command-line front end.

Subcommands mirror the workbench stages: `encrypt`/`decrypt` run the
reference cipher, `encode` writes a generated instance's program and
completion to disk, `solve` runs the solver on a ground program file,
`attack` and `bench` run key searches, and `emit-dimacs` converts a
program file to CNF.  Output paths default to $DESLP_OUT_DIR.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .bits import BitBlock
from .des import FULL_ROUNDS, decrypt, encrypt
from .errors import DeslpError, ResourceLimitError
from .harness import (
    DEFAULT_BRANCH_CAP,
    DEFAULT_TIME_CAP_S,
    ENCODINGS,
    benchmark,
    default_out_dir,
    emit_artifacts,
    gen_instance,
    run_attack,
)
from .program import parse_program
from .solver import solve
from .translate import completion, emit_dimacs


def hex_block(text: str) -> BitBlock:
    try:
        return BitBlock.from_hex(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def rounds_arg(text: str) -> int:
    n = int(text)
    if not 1 <= n <= FULL_ROUNDS:
        raise argparse.ArgumentTypeError(f"rounds must be in 1..{FULL_ROUNDS}")
    return n


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="deslp",
        description="Stable-model workbench for round-reduced DES.",
    )
    top.add_argument("--version", action="version", version=f"deslp {__version__}")
    sub = top.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encrypt", help="run the reference cipher forward")
    enc.add_argument("plaintext", type=hex_block, help="64-bit hex block")
    enc.add_argument("--key", type=hex_block, required=True)
    enc.add_argument("--rounds", type=rounds_arg, default=FULL_ROUNDS)

    dec = sub.add_parser("decrypt", help="run the reference cipher backward")
    dec.add_argument("ciphertext", type=hex_block, help="64-bit hex block")
    dec.add_argument("--key", type=hex_block, required=True)
    dec.add_argument("--rounds", type=rounds_arg, default=FULL_ROUNDS)

    ecd = sub.add_parser(
        "encode", help="generate an instance and write .lp/.cnf/.json artifacts"
    )
    ecd.add_argument("--mode", choices=ENCODINGS, default="direct")
    ecd.add_argument("--rounds", type=rounds_arg, default=1)
    ecd.add_argument("--blocks", type=int, default=1)
    ecd.add_argument("--seed", type=int, default=0)
    ecd.add_argument("--out", default=None, help="output directory")
    ecd.add_argument(
        "--reveal-key",
        action="store_true",
        help="record the hidden key in the metadata file",
    )

    slv = sub.add_parser("solve", help="solve a ground program file")
    slv.add_argument("program", help="path to a .lp file")
    slv.add_argument("--heuristic", choices=("lookahead", "first"), default="lookahead")
    slv.add_argument("--branch-cap", type=int, default=None)
    slv.add_argument("--time-cap", type=float, default=None)

    atk = sub.add_parser("attack", help="generate an instance and search for its key")
    atk.add_argument("--encoding", choices=ENCODINGS, default="direct")
    atk.add_argument("--rounds", type=rounds_arg, default=1)
    atk.add_argument("--blocks", type=int, default=1)
    atk.add_argument("--seed", type=int, default=0)
    atk.add_argument("--branch-cap", type=int, default=None)
    atk.add_argument("--time-cap", type=float, default=None)

    ben = sub.add_parser("bench", help="run repeated attacks and write reports")
    ben.add_argument("--encoding", choices=ENCODINGS, default="direct")
    ben.add_argument("--rounds", type=rounds_arg, default=1)
    ben.add_argument("--blocks", type=int, default=1)
    ben.add_argument("--trials", type=int, default=10)
    ben.add_argument("--seed", type=int, default=0)
    ben.add_argument("--jobs", type=int, default=1)
    ben.add_argument("--branch-cap", type=int, default=DEFAULT_BRANCH_CAP)
    ben.add_argument("--time-cap", type=float, default=DEFAULT_TIME_CAP_S)
    ben.add_argument("--json", default=None, help="JSON report path")
    ben.add_argument("--csv", default=None, help="CSV rows path")

    dim = sub.add_parser("emit-dimacs", help="completion of a program file as DIMACS")
    dim.add_argument("program", help="path to a .lp file")
    dim.add_argument("--out", default=None, help="output file (default stdout)")

    return top


def _cmd_encrypt(args) -> int:
    print(encrypt(args.plaintext, args.key, args.rounds).hex())
    return 0


def _cmd_decrypt(args) -> int:
    print(decrypt(args.ciphertext, args.key, args.rounds).hex())
    return 0


def _cmd_encode(args) -> int:
    inst = gen_instance(args.rounds, args.blocks, args.seed)
    out = args.out if args.out is not None else default_out_dir()
    paths = emit_artifacts(inst, args.mode, out, reveal_key=args.reveal_key)
    for kind in ("lp", "cnf", "json"):
        print(f"{kind}: {paths[kind]}")
    return 0


def _cmd_solve(args) -> int:
    with open(args.program) as fh:
        program = parse_program(fh.read())
    result = solve(
        program.freeze(),
        heuristic=args.heuristic,
        branch_cap=args.branch_cap,
        time_cap_s=args.time_cap,
    )
    st = result.stats
    print(
        f"% branches={st.branches} conflicts={st.conflicts} "
        f"time={st.wall_time_s:.3f}s"
    )
    if result.model is None:
        print("UNSATISFIABLE")
        return 1
    print("SATISFIABLE")
    names = sorted(program.atom_name(a) for a in result.model)
    print(" ".join(names))
    return 0


def _cmd_attack(args) -> int:
    inst = gen_instance(args.rounds, args.blocks, args.seed)
    res = run_attack(
        inst,
        args.encoding,
        branch_cap=args.branch_cap,
        time_cap_s=args.time_cap,
    )
    print(f"key: {res.key.hex()}")
    print(
        f"branches: {res.stats.branches}  conflicts: {res.stats.conflicts}  "
        f"search: {res.search_s:.3f}s  preprocess: {res.preprocess_s:.3f}s"
    )
    print("verified: recovered key re-encrypts all pairs")
    return 0


def _cmd_bench(args) -> int:
    out = default_out_dir()
    stem = f"bench_{args.encoding}_r{args.rounds}_b{args.blocks}"
    json_path = args.json if args.json is not None else out / f"{stem}.json"
    csv_path = args.csv if args.csv is not None else out / f"{stem}.csv"
    report = benchmark(
        args.rounds,
        args.blocks,
        args.trials,
        args.encoding,
        args.seed,
        branch_cap=args.branch_cap,
        time_cap_s=args.time_cap,
        jobs=args.jobs,
        json_path=json_path,
        csv_path=csv_path,
    )
    print(json.dumps(report.summary(), indent=2))
    print(f"json: {json_path}")
    print(f"csv: {csv_path}")
    return 0


def _cmd_emit_dimacs(args) -> int:
    with open(args.program) as fh:
        program = parse_program(fh.read()).freeze()
    formula, atom_var = completion(program)
    names = {atom_var[a]: program.atom_name(a) for a in range(program.num_atoms)}
    text = emit_dimacs(formula, names)
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"cnf: {args.out}")
    return 0


_COMMANDS = {
    "encrypt": _cmd_encrypt,
    "decrypt": _cmd_decrypt,
    "encode": _cmd_encode,
    "solve": _cmd_solve,
    "attack": _cmd_attack,
    "bench": _cmd_bench,
    "emit-dimacs": _cmd_emit_dimacs,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ResourceLimitError as exc:
        print(f"deslp: {exc}", file=sys.stderr)
        return 2
    except (DeslpError, ValueError, OSError) as exc:
        print(f"deslp: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
