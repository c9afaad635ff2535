"""Command-line entry point: ``synth``, ``verify``, ``bench`` and ``repair``.

Exit codes: 0 solved/valid, 1 input error, 2 schedule exhausted,
3 invalid Skolem vector, 4 repair target not realizable.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .cegis import (
    DEFAULT_SCHEDULE, ScheduleEntry, build_error_formula, parse_schedule, repair_check, run_schedule, verify,
)
from .extract import parse_skolem, print_skolem
from .formula import BfsError, BfsSpec, Iff, parse_spec, print_formula, tseitin
from .gcln import Arch, TrainConfig
from .sampling import UnrealizableSpec, build_table

log = logging.getLogger("boundsynth")

EXIT_OK, EXIT_INPUT, EXIT_EXHAUSTED, EXIT_INVALID, EXIT_UNREALIZABLE = 0, 1, 2, 3, 4
BENCH_COLUMNS = ["Benchmark", "K", "T", "C", "L", "I", "Status"]


@dataclass
class RunConfig:
    schedule: list[ScheduleEntry]
    arch: Arch = Arch.CNF
    seed: int = 0
    samples: int = 500

    def __post_init__(self):
        if not self.schedule:
            raise ValueError("schedule must not be empty")
        if self.samples < 1:
            raise ValueError("--samples must be positive")

    def train_config(self, seed: int | None = None) -> TrainConfig:
        return TrainConfig(seed=self.seed if seed is None else seed)


@dataclass
class BenchRow:
    benchmark: str
    k_used: int | None
    time_seconds: float
    clauses: int | None
    literals: int | None
    unique_inputs: int | None
    status: str

    def cells(self) -> list[str]:
        def opt(v):
            return "-" if v is None else str(v)

        return [self.benchmark, opt(self.k_used), f"{self.time_seconds:.3f}", opt(self.clauses),
                opt(self.literals), opt(self.unique_inputs), self.status]


def _read_spec(path: str | Path, require_outputs: bool = True) -> BfsSpec:
    return parse_spec(Path(path).read_text(encoding="utf-8"), require_outputs=require_outputs)


def _run_config(args) -> RunConfig:
    schedule = parse_schedule(args.k_schedule) if args.k_schedule else list(DEFAULT_SCHEDULE)
    return RunConfig(schedule, Arch(args.arch), args.seed, args.samples)


def _report_dict(name: str, report) -> dict:
    m = report.metrics
    return {
        "benchmark": name,
        "k": report.k_used,
        "time_ms": round(report.wall_time * 1000),
        "clauses": m.clauses if m and report.solved else None,
        "literals": m.literals if m and report.solved else None,
        "unique_inputs": m.unique_inputs if m and report.solved else None,
        "iterations": report.cegis_iterations,
        "status": report.status,
    }


def synthesize(spec: BfsSpec, rc: RunConfig, seed: int | None = None):
    seed = rc.seed if seed is None else seed
    return run_schedule(spec, rc.schedule, rc.train_config(seed), rc.arch, rc.samples)


def cmd_synth(args) -> int:
    try:
        spec = _read_spec(args.spec)
        rc = _run_config(args)
        if args.table_csv:
            Path(args.table_csv).write_text(build_table(spec, rc.samples, rc.seed).to_csv())
        report = synthesize(spec, rc)
    except UnrealizableSpec:
        print("error: specification unsatisfiable", file=sys.stderr)
        return EXIT_INPUT
    except (BfsError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    info = _report_dict(Path(args.spec).stem, report)
    if args.json:
        Path(args.json).write_text(json.dumps(info, indent=2) + "\n")
    if args.gates_json and report.skolem is not None:
        params = report.skolem.extra.get("params", [])
        Path(args.gates_json).write_text(
            "[" + ",\n".join(p.to_json() for p in params) + "]\n")
    if not report.solved:
        print(f"exhausted schedule after {report.cegis_iterations} rounds", file=sys.stderr)
        print(json.dumps(info), file=sys.stderr)
        return EXIT_EXHAUSTED
    text = print_skolem(report.skolem, info)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _format_assignment(values: dict[str, bool]) -> str:
    return " ".join(f"{k}={int(v)}" for k, v in values.items())


def cmd_verify(args) -> int:
    try:
        spec = _read_spec(args.spec)
        sv, _ = parse_skolem(Path(args.skolem).read_text(encoding="utf-8"), set(spec.input_names))
        missing = [y for y in spec.output_names if y not in sv.outputs]
        unknown = [y for y in sv.outputs if y not in spec.output_names]
        if missing:
            raise BfsError(f"no Skolem function for {', '.join(missing)}")
        if unknown:
            raise BfsError(f"{', '.join(unknown)} is not an output of the specification")
        if args.dimacs:
            names = spec.input_names + spec.output_names
            cnf = tseitin(build_error_formula(spec, sv), {n: i + 1 for i, n in enumerate(names)})
            Path(args.dimacs).write_text(cnf.to_dimacs())
        outcome = verify(spec, sv)
    except (BfsError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if outcome.valid:
        print("Valid")
        return EXIT_OK
    print("Invalid")
    print(f"counterexample: {_format_assignment(outcome.x_star)}")
    print(f"witness: {_format_assignment(outcome.y_witness)}")
    return EXIT_INVALID


def file_seed(seed: int, name: str) -> int:
    """Per-benchmark seed: the run seed xor a stable hash of the file name."""
    return seed ^ zlib.crc32(name.encode("utf-8"))


def _bench_one(path: str, rc: RunConfig) -> BenchRow:
    name = Path(path).stem
    start = time.monotonic()
    try:
        spec = _read_spec(path)
        report = synthesize(spec, rc, file_seed(rc.seed, Path(path).name))
    except UnrealizableSpec:
        return BenchRow(name, None, time.monotonic() - start, None, None, None, "Unrealizable")
    except (BfsError, OSError, ValueError) as exc:
        log.warning("%s: %s", name, exc)
        return BenchRow(name, None, time.monotonic() - start, None, None, None, "Error")
    m = report.metrics if report.solved else None
    return BenchRow(name, report.k_used, report.wall_time,
                    m.clauses if m else None, m.literals if m else None, m.unique_inputs if m else None,
                    report.status)


def bench_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_COLUMNS)
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()


def bench_markdown(rows: list[BenchRow]) -> str:
    lines = ["| " + " | ".join(BENCH_COLUMNS) + " |",
             "|" + "|".join(["---"] + ["---:"] * 5 + ["---"]) + "|"]
    for r in rows:
        lines.append("| " + " | ".join(r.cells()) + " |")
    return "\n".join(lines) + "\n"


def run_bench(files: list[Path], rc: RunConfig, jobs: int = 1) -> list[BenchRow]:
    paths = [str(p) for p in files]
    if jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_bench_one, paths, [rc] * len(paths)))
    return [_bench_one(p, rc) for p in paths]


def cmd_bench(args) -> int:
    directory = Path(args.dir)
    files = sorted(directory.glob("*.bfs")) if directory.is_dir() else []
    if not files:
        print(f"error: no .bfs files in {directory}", file=sys.stderr)
        return EXIT_INPUT
    try:
        rc = _run_config(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    jobs = args.jobs or min(len(files), os.cpu_count() or 1)
    rows = run_bench(files, rc, jobs)
    if args.csv:
        Path(args.csv).write_text(bench_csv(rows))
    md = bench_markdown(rows)
    if args.md:
        Path(args.md).write_text(md)
    sys.stdout.write(md)
    return EXIT_OK if all(r.status == "Solved" for r in rows) else EXIT_EXHAUSTED


def compose_repair(gprime: BfsSpec, h: BfsSpec) -> BfsSpec:
    """F(X, Y) = G'(X, Y) <-> H(X) for LUT placeholders Y."""
    if set(gprime.input_names) != set(h.input_names):
        raise BfsError("circuit and target declare different inputs")
    if h.outputs:
        raise BfsError("target specification must not declare outputs")
    return BfsSpec.build(gprime.input_names, gprime.output_names, Iff(gprime.spec, h.spec))


def cmd_repair(args) -> int:
    try:
        gprime = _read_spec(args.gprime, require_outputs=False)
        h = _read_spec(args.h, require_outputs=False)
        spec = compose_repair(gprime, h)
        rc = _run_config(args)
    except (BfsError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        report = synthesize(spec, rc)
    except UnrealizableSpec:
        print("unrealizable: no LUT contents satisfy the target at any input")
        return EXIT_UNREALIZABLE
    if not report.solved:
        print(f"exhausted schedule after {report.cegis_iterations} rounds", file=sys.stderr)
        return EXIT_EXHAUSTED
    for y, f in zip(report.skolem.outputs, report.skolem.formulas):
        print(f"lut {y} {print_formula(f)}")
    if args.out:
        Path(args.out).write_text(print_skolem(report.skolem, _report_dict(Path(args.gprime).stem, report)))
    if repair_check(h.spec, spec, report.skolem):
        print("realizable")
        return EXIT_OK
    print("unrealizable: the target cannot be met for every input")
    return EXIT_UNREALIZABLE


def _add_synth_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k-schedule", metavar="L", help="comma list of k:seconds (default: 1:60,5:120,...)")
    p.add_argument("--arch", choices=["cnf", "dnf"], default="cnf")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=500)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boundsynth", description="Bounded Boolean functional synthesis.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize Skolem functions for a .bfs specification")
    p.add_argument("spec")
    _add_synth_flags(p)
    p.add_argument("--out", metavar="P", help="Skolem file (default: stdout)")
    p.add_argument("--json", metavar="P", help="write the JSON run report here")
    p.add_argument("--table-csv", metavar="P", help="dump the refined sample table as CSV")
    p.add_argument("--gates-json", metavar="P", help="dump the trained gate matrices as JSON")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("verify", help="check a Skolem file against a specification")
    p.add_argument("spec")
    p.add_argument("skolem")
    p.add_argument("--dimacs", metavar="P", help="write the error formula as DIMACS CNF")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="run every .bfs file in a directory")
    p.add_argument("dir")
    _add_synth_flags(p)
    p.add_argument("--csv", metavar="P")
    p.add_argument("--md", metavar="P")
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("repair", help="fill LUT placeholders of a circuit so it meets a target")
    p.add_argument("gprime")
    p.add_argument("h")
    _add_synth_flags(p)
    p.add_argument("--out", metavar="P")
    p.set_defaults(func=cmd_repair)
    return parser


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("BBFS_LOG", "WARNING").upper()
    logging.basicConfig(level=level if isinstance(logging.getLevelName(level), int) else "WARNING",
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
