"""Instance generation, end-to-end key search, and benchmark reports.

One experiment: draw a hidden key and random plaintexts, encode the
known-plaintext pairs under either encoding, search for a stable model,
and read the key back out of it.  `benchmark` repeats the experiment over
derived seeds and aggregates machine-readable reports; `emit_artifacts`
writes the ground program and its completion for external solvers.

Reported search time never includes encoding or preprocessing; that cost
is recorded separately per trial.
"""

from __future__ import annotations

import concurrent.futures
import csv
import json
import os
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from . import __version__
from .bits import BitBlock
from .des import FULL_ROUNDS, encrypt
from .direct import (
    KEY_BITS,
    DirectInstance,
    instantiate,
    key_choice_atoms,
    key_from_model,
)
from .errors import DeslpError, ResourceLimitError
from .optimized import OptInstance, build_attack
from .program import format_program
from .solver import SearchStats, solve
from .translate import completion, emit_dimacs

ENCODINGS = ("direct", "optimized")

# A trial that exceeds either cap is marked failed in the report.
DEFAULT_BRANCH_CAP = 10**6
DEFAULT_TIME_CAP_S = 600.0

_M64 = (1 << 64) - 1


class SplitMix64:
    """Counter-based 64-bit generator (splitmix64).

    state += 0x9e3779b97f4a7c15
    z = state
    z = (z ^ z >> 30) * 0xbf58476d1ce4e5b9
    z = (z ^ z >> 27) * 0x94d049bb133111eb
    output z ^ z >> 31

    The whole algorithm fits above, so instance streams can be reproduced
    from the seed in any language; the stdlib generator offers no such
    cross-implementation guarantee.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _M64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _M64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
        return z ^ (z >> 31)

    def next_block(self) -> BitBlock:
        return BitBlock(64, self.next_u64())


def normalize_parity(key: BitBlock) -> BitBlock:
    """Recompute the 8 parity positions so every key byte has even weight.

    The 56 effective bits are untouched; two keys that agree on them
    normalize identically.
    """
    bits = list(key.bits())
    for byte in range(8):
        bits[byte * 8 + 7] = sum(bits[byte * 8 : byte * 8 + 7]) & 1
    return BitBlock.from_bits(bits)


def effective_key_equal(a: BitBlock, b: BitBlock) -> bool:
    """Equality over the 56 effective positions, ignoring parity bits."""
    return all(a.bit(k) == b.bit(k) for k in KEY_BITS)


@dataclass(frozen=True)
class AttackInstance:
    """A known-plaintext key search with its withheld answer.

    The hidden key only manufactures the ciphertexts and checks recovered
    keys; encoders never see it.  Construction re-derives every
    ciphertext from the hidden key, so an inconsistent instance cannot
    exist.
    """

    rounds: int
    blocks: int
    plaintexts: tuple
    ciphertexts: tuple
    hidden_key: BitBlock
    seed: int

    def __post_init__(self):
        if not 1 <= self.rounds <= FULL_ROUNDS:
            raise ValueError(f"rounds must be in 1..{FULL_ROUNDS}")
        if self.blocks < 1:
            raise ValueError("blocks must be at least 1")
        if len(self.plaintexts) != self.blocks or len(self.ciphertexts) != self.blocks:
            raise ValueError("plaintext/ciphertext counts must equal blocks")
        for pt, ct in zip(self.plaintexts, self.ciphertexts):
            if encrypt(pt, self.hidden_key, self.rounds) != ct:
                raise ValueError("ciphertext does not come from the hidden key")


def gen_instance(rounds: int, blocks: int, seed: int) -> AttackInstance:
    """Deterministic random instance from one splitmix64 stream.

    Draw order is fixed: first word supplies the key (its 56 effective
    bits are kept, parity recomputed even), then one word per plaintext.
    Plaintext collisions are possible and harmless.
    """
    if not 1 <= rounds <= FULL_ROUNDS:
        raise ValueError(f"rounds must be in 1..{FULL_ROUNDS}")
    if blocks < 1:
        raise ValueError("blocks must be at least 1")
    rng = SplitMix64(seed)
    key = normalize_parity(rng.next_block())
    plaintexts = tuple(rng.next_block() for _ in range(blocks))
    ciphertexts = tuple(encrypt(pt, key, rounds) for pt in plaintexts)
    return AttackInstance(rounds, blocks, plaintexts, ciphertexts, key, seed)


def prepare_attack(inst: AttackInstance, encoding: str):
    """Program and search configuration for an instance.

    Returns (program, solve keyword args, model -> key reader).  The
    search defaults differ by encoding: the direct programs repay
    two-sided lookahead over the 56 key choice atoms, while the
    simplified programs are so reduced that a lookahead pass costs more
    than fixed-order branching with backjumping saves.
    """
    if encoding not in ENCODINGS:
        raise ValueError(f"encoding must be one of {ENCODINGS}, got {encoding!r}")
    if encoding == "direct":
        program = instantiate(
            DirectInstance(
                rounds=inst.rounds,
                mode="attack",
                plaintexts=inst.plaintexts,
                ciphertexts=inst.ciphertexts,
            )
        )
        kwargs = {"decision_atoms": key_choice_atoms(program)}
        return program, kwargs, lambda model: key_from_model(program, model)
    atk = build_attack(OptInstance(inst.rounds, inst.plaintexts, inst.ciphertexts))
    kwargs = {"decision_atoms": atk.choice_atom_ids(), "heuristic": "first"}
    return atk.program, kwargs, atk.key_from_model


@dataclass
class AttackResult:
    """Recovered key plus the accounting the reports need."""

    key: BitBlock
    stats: SearchStats
    encoding: str
    preprocess_s: float
    search_s: float


def run_attack(
    inst: AttackInstance,
    encoding: str = "direct",
    *,
    branch_cap: int | None = None,
    time_cap_s: float | None = None,
) -> AttackResult:
    """Search an instance and return a verified key.

    The first stable model is mapped to a key (parity normalized even)
    and re-encrypted against every pair.  An unsatisfiable program or a
    key that fails re-encryption is an encoder or solver defect and
    raises; resource caps raise ResourceLimitError with the counters at
    the point of interruption.
    """
    t0 = time.perf_counter()
    program, kwargs, read_key = prepare_attack(inst, encoding)
    preprocess_s = time.perf_counter() - t0
    try:
        result = solve(program, branch_cap=branch_cap, time_cap_s=time_cap_s, **kwargs)
    except ResourceLimitError as exc:
        exc.preprocess_s = preprocess_s  # benchmark records it with the failure
        raise
    if result.model is None:
        raise DeslpError("attack program is unsatisfiable; the encoding is broken")
    key = normalize_parity(read_key(result.model))
    for pt, ct in zip(inst.plaintexts, inst.ciphertexts):
        if encrypt(pt, key, inst.rounds) != ct:
            raise DeslpError("recovered key fails re-encryption; the search is broken")
    return AttackResult(
        key=key,
        stats=result.stats,
        encoding=encoding,
        preprocess_s=preprocess_s,
        search_s=result.stats.wall_time_s,
    )


# -- benchmark protocol -----------------------------------------------------


@dataclass(frozen=True)
class TrialRecord:
    encoding: str
    rounds: int
    blocks: int
    seed: int
    time_s: float
    preprocess_s: float
    branches: int
    conflicts: int
    success: bool
    key_hex: str | None


@dataclass(frozen=True)
class BenchReport:
    """Per-trial records plus everything needed to reproduce them."""

    encoding: str
    rounds: int
    blocks: int
    master_seed: int
    branch_cap: int | None
    time_cap_s: float | None
    records: tuple
    environment: dict

    def summary(self) -> dict:
        """Aggregates recomputed from the records; means cover successful
        trials only (a capped trial's counters measure the cap)."""
        ok = [r for r in self.records if r.success]
        n = len(ok)
        return {
            "trials": len(self.records),
            "successes": n,
            "success_rate": n / len(self.records),
            "mean_time_s": sum(r.time_s for r in ok) / n if n else None,
            "mean_preprocess_s": sum(r.preprocess_s for r in ok) / n if n else None,
            "mean_branches": sum(r.branches for r in ok) / n if n else None,
            "mean_conflicts": sum(r.conflicts for r in ok) / n if n else None,
        }


def trial_seeds(master_seed: int, trials: int) -> list:
    """Per-trial seeds: the first `trials` outputs of splitmix64(master)."""
    rng = SplitMix64(master_seed)
    return [rng.next_u64() for _ in range(trials)]


def environment_info() -> dict:
    import platform

    return {
        "package_version": __version__,
        "python": sys.version.split()[0],
        "implementation": platform.python_implementation(),
        "platform": platform.platform(),
    }


def _run_trial(encoding, rounds, blocks, seed, branch_cap, time_cap_s) -> TrialRecord:
    inst = gen_instance(rounds, blocks, seed)
    try:
        res = run_attack(inst, encoding, branch_cap=branch_cap, time_cap_s=time_cap_s)
    except ResourceLimitError as exc:
        st = exc.stats if exc.stats is not None else SearchStats()
        return TrialRecord(
            encoding=encoding,
            rounds=rounds,
            blocks=blocks,
            seed=seed,
            time_s=st.wall_time_s,
            preprocess_s=getattr(exc, "preprocess_s", 0.0),
            branches=st.branches,
            conflicts=st.conflicts,
            success=False,
            key_hex=None,
        )
    return TrialRecord(
        encoding=encoding,
        rounds=rounds,
        blocks=blocks,
        seed=seed,
        time_s=res.search_s,
        preprocess_s=res.preprocess_s,
        branches=res.stats.branches,
        conflicts=res.stats.conflicts,
        success=True,
        key_hex=res.key.hex(),
    )


def _run_trial_tuple(args) -> TrialRecord:
    return _run_trial(*args)


def benchmark(
    rounds: int,
    blocks: int,
    trials: int,
    encoding: str = "direct",
    seed: int = 0,
    *,
    branch_cap: int | None = DEFAULT_BRANCH_CAP,
    time_cap_s: float | None = DEFAULT_TIME_CAP_S,
    jobs: int = 1,
    json_path=None,
    csv_path=None,
) -> BenchReport:
    """Run independent attack trials and aggregate a report.

    Trial seeds derive from the master seed, so reruns reproduce every
    branch and conflict counter.  A trial exceeding a resource cap
    becomes a failed record; any other error is a defect and propagates.
    Trials share nothing and may run in `jobs` worker processes; records
    keep seed order either way.  Reports are written to `json_path` and
    `csv_path` when given.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if encoding not in ENCODINGS:
        raise ValueError(f"encoding must be one of {ENCODINGS}, got {encoding!r}")
    args = [
        (encoding, rounds, blocks, s, branch_cap, time_cap_s)
        for s in trial_seeds(seed, trials)
    ]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            records = tuple(pool.map(_run_trial_tuple, args))
    else:
        records = tuple(_run_trial(*a) for a in args)
    report = BenchReport(
        encoding=encoding,
        rounds=rounds,
        blocks=blocks,
        master_seed=seed,
        branch_cap=branch_cap,
        time_cap_s=time_cap_s,
        records=records,
        environment=environment_info(),
    )
    if json_path is not None:
        write_json_report(report, json_path)
    if csv_path is not None:
        write_csv_records(report.records, csv_path)
    return report


def report_dict(report: BenchReport) -> dict:
    """The JSON document: settings, environment, summary, then records."""
    return {
        "schema": "deslp-bench-1",
        "encoding": report.encoding,
        "rounds": report.rounds,
        "blocks": report.blocks,
        "master_seed": report.master_seed,
        "branch_cap": report.branch_cap,
        "time_cap_s": report.time_cap_s,
        "environment": dict(report.environment),
        "summary": report.summary(),
        "records": [asdict(r) for r in report.records],
    }


def write_json_report(report: BenchReport, path) -> None:
    Path(path).write_text(json.dumps(report_dict(report), indent=2) + "\n")


CSV_COLUMNS = ("encoding", "rounds", "blocks", "seed", "time_s", "branches",
               "conflicts", "success")


def write_csv_records(records, path) -> None:
    """Fixed-column CSV, one row per trial; success is 1 or 0."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow(
                [r.encoding, r.rounds, r.blocks, r.seed, f"{r.time_s:.6f}",
                 r.branches, r.conflicts, int(r.success)]
            )


# -- artifact emission ------------------------------------------------------


def default_out_dir() -> Path:
    """$DESLP_OUT_DIR if set, else the working directory."""
    return Path(os.environ.get("DESLP_OUT_DIR", "."))


def emit_artifacts(
    inst: AttackInstance,
    encoding: str,
    out_dir,
    *,
    reveal_key: bool = False,
    name: str | None = None,
) -> dict:
    """Write `<name>.lp`, `<name>.cnf`, and `<name>.json` under out_dir.

    The .lp file is the ground attack program, the .cnf its completion
    (both encodings are tight, so CNF models and stable models agree),
    and the .json the instance metadata.  The hidden key is withheld
    unless `reveal_key`.  Returns {"lp": path, "cnf": path, "json": path}.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if name is None:
        name = f"{encoding}_r{inst.rounds}_b{inst.blocks}_s{inst.seed}"
    program, _, _ = prepare_attack(inst, encoding)

    lp_path = out / f"{name}.lp"
    lp_path.write_text(format_program(program))

    formula, atom_var = completion(program)
    names = {atom_var[a]: program.atom_name(a) for a in range(program.num_atoms)}
    cnf_path = out / f"{name}.cnf"
    cnf_path.write_text(emit_dimacs(formula, names))

    meta = {
        "encoding": encoding,
        "rounds": inst.rounds,
        "blocks": inst.blocks,
        "seed": inst.seed,
        "plaintexts": [b.hex() for b in inst.plaintexts],
        "ciphertexts": [b.hex() for b in inst.ciphertexts],
        "atoms": program.num_atoms,
        "rules": len(program.rules),
    }
    if reveal_key:
        meta["hidden_key"] = inst.hidden_key.hex()
    json_path = out / f"{name}.json"
    json_path.write_text(json.dumps(meta, indent=2) + "\n")
    return {"lp": lp_path, "cnf": cnf_path, "json": json_path}
