"""Counterexample-guided synthesis loop over a schedule of clause bounds."""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .extract import Metrics, SkolemVector, fextract, metrics, simplify
from .formula import (
    TRUE, And, BfsError, BfsSpec, Formula, Iff, Not, Ref, all_assignments, substitute,
    truth_table, tseitin, variables,
)
from .gcln import Arch, TrainConfig, TrainingFailed, train_all_outputs
from .sampling import SampleTable, build_table
from .sat import Solver, SolverConfig, solve

__all__ = [
    "DEFAULT_SCHEDULE", "ScheduleEntry", "VerifyOutcome", "RoundKind", "RoundResult",
    "SynthesisReport", "DomainTooLarge", "build_error_formula", "verify",
    "exhaustive_verify", "cegis_round", "run_schedule", "repair_check", "parse_schedule",
]

log = logging.getLogger(__name__)


class DomainTooLarge(BfsError):
    pass


@dataclass(frozen=True)
class ScheduleEntry:
    k: int
    timeout: float

    def __post_init__(self):
        if self.k < 1 or self.timeout <= 0:
            raise ValueError(f"bad schedule entry {self.k}:{self.timeout}")


DEFAULT_SCHEDULE = (
    ScheduleEntry(1, 60), ScheduleEntry(5, 120), ScheduleEntry(20, 120),
    ScheduleEntry(50, 180), ScheduleEntry(500, 300), ScheduleEntry(1000, 600),
)


def parse_schedule(text: str) -> list[ScheduleEntry]:
    """``"1:60,5:120"`` -> entries."""
    out = []
    for part in text.split(","):
        k, _, t = part.strip().partition(":")
        if not t:
            raise ValueError(f"schedule entry {part!r} is not k:seconds")
        out.append(ScheduleEntry(int(k), float(t)))
    if not out:
        raise ValueError("empty schedule")
    return out


@dataclass
class VerifyOutcome:
    valid: bool
    x_star: dict[str, bool] | None = None
    y_witness: dict[str, bool] | None = None

    @property
    def status(self) -> str:
        return "Valid" if self.valid else "Invalid"


def _primed_names(spec: BfsSpec) -> dict[str, str]:
    taken = set(spec.input_names) | set(spec.output_names)
    out = {}
    for y in spec.output_names:
        cand = y + "_p"
        while cand in taken:
            cand += "_"
        taken.add(cand)
        out[y] = cand
    return out


def build_error_formula(spec: BfsSpec, sv: SkolemVector) -> Formula:
    """F(X, Y) and not F(X, Y') and (Y' <-> Psi(X)), with fresh primed outputs."""
    psi = sv.as_dict()
    missing = [y for y in spec.output_names if y not in psi]
    if missing:
        raise ValueError(f"no Skolem function for {missing}")
    primed = _primed_names(spec)
    f_primed = substitute(spec.spec, {y: Ref(p) for y, p in primed.items()})
    parts = [spec.spec, Not(f_primed)]
    parts += [Iff(Ref(primed[y]), psi[y]) for y in spec.output_names]
    return And(*parts)


def verify(spec: BfsSpec, sv: SkolemVector, cfg: SolverConfig = SolverConfig()) -> VerifyOutcome:
    """SAT check of the error formula: UNSAT means the Skolem vector is valid."""
    names = spec.input_names + spec.output_names
    _check_support(spec, sv)
    cnf = tseitin(build_error_formula(spec, sv), {n: i + 1 for i, n in enumerate(names)})
    res = solve(cnf, cfg)
    if not res.sat:
        return VerifyOutcome(True)
    x_star = {n: res.model[cnf.var_map[n]] for n in spec.input_names}
    y_witness = {n: res.model[cnf.var_map[n]] for n in spec.output_names}
    return VerifyOutcome(False, x_star, y_witness)


def _check_support(spec: BfsSpec, sv: SkolemVector) -> None:
    allowed = set(spec.input_names)
    for y, f in zip(sv.outputs, sv.formulas):
        extra = variables(f) - allowed
        if extra:
            raise ValueError(f"Skolem function for {y} uses non-input variables {sorted(extra)}")


def exhaustive_verify(spec: BfsSpec, sv: SkolemVector) -> VerifyOutcome:
    """Truth-table check, independent of the Tseitin encoder and the SAT solver."""
    nx = len(spec.inputs)
    if nx > 16:
        raise DomainTooLarge(f"{nx} inputs is too many for exhaustive checking")
    _check_support(spec, sv)
    xs = all_assignments(spec.input_names)
    n_x = 2 ** nx
    psi = sv.as_dict()
    cols = dict(xs)
    for y in spec.output_names:
        cols[y] = _broadcast(truth_table(psi[y], xs), n_x)
    ok = _broadcast(truth_table(spec.spec, cols), n_x)
    for xi in np.flatnonzero(~ok):
        x = {n: bool(xs[n][xi]) for n in spec.input_names}
        witness = _find_witness(spec, x)
        if witness is not None:
            return VerifyOutcome(False, x, witness)
    return VerifyOutcome(True)


def _broadcast(a: np.ndarray, n: int) -> np.ndarray:
    return a if a.shape == (n,) else np.broadcast_to(a, (n,)).copy()


def _find_witness(spec: BfsSpec, x: dict[str, bool]) -> dict[str, bool] | None:
    ny = len(spec.outputs)
    if ny <= 16:
        ys = all_assignments(spec.output_names)
        cols = {n: np.full(2 ** ny, v) for n, v in x.items()}
        cols.update(ys)
        sat = _broadcast(truth_table(spec.spec, cols), 2 ** ny)
        hits = np.flatnonzero(sat)
        if len(hits) == 0:
            return None
        return {n: bool(ys[n][hits[0]]) for n in spec.output_names}
    names = spec.input_names + spec.output_names
    cnf = tseitin(spec.spec, {n: i + 1 for i, n in enumerate(names)})
    solver = Solver(cnf.num_vars)
    for c in cnf.clauses:
        solver.add_clause(c)
    for n, v in x.items():
        solver.add_clause([cnf.var_map[n] if v else -cnf.var_map[n]])
    res = solver.solve()
    if not res.sat:
        return None
    return {n: res.model[cnf.var_map[n]] for n in spec.output_names}


class RoundKind(enum.Enum):
    SOLVED = "solved"
    TRAIN_FAILED = "train_failed"
    CEX_ADDED = "cex_added"


@dataclass
class RoundResult:
    kind: RoundKind
    table: SampleTable
    skolem: SkolemVector | None = None
    counterexample: VerifyOutcome | None = None


def candidate_from_table(spec: BfsSpec, table: SampleTable, k: int, arch: Arch, cfg: TrainConfig) -> SkolemVector:
    """Train one network per output on ``table`` and read off simplified formulas.

    An empty table yields the constant-true function for every output.
    """
    outputs = spec.output_names
    if not outputs:
        return SkolemVector([], [], arch, k)
    if len(table) == 0:
        return SkolemVector(list(outputs), [TRUE] * len(outputs), arch, k)
    results = train_all_outputs(table, spec, k, arch, cfg)
    formulas = [simplify(fextract(r.params, cfg.extract_threshold, spec.input_names), arch) for r in results]
    return SkolemVector(list(outputs), formulas, arch, k, {"params": [r.params for r in results]})


def cegis_round(spec: BfsSpec, table: SampleTable, k: int, arch: Arch = Arch.CNF,
                cfg: TrainConfig = TrainConfig()) -> RoundResult:
    """Train, extract, verify; on failure feed the counterexample back into the table."""
    if k < 1:
        raise ValueError("k must be at least 1")
    try:
        sv = candidate_from_table(spec, table, k, arch, cfg)
    except TrainingFailed as exc:
        log.debug("k=%d: %s", k, exc)
        return RoundResult(RoundKind.TRAIN_FAILED, table)
    outcome = verify(spec, sv)
    if outcome.valid:
        return RoundResult(RoundKind.SOLVED, table, sv)
    x = tuple(int(outcome.x_star[n]) for n in spec.input_names)
    y = tuple(int(outcome.y_witness[n]) for n in spec.output_names)
    return RoundResult(RoundKind.CEX_ADDED, table.with_row(x, y), sv, outcome)


@dataclass
class SynthesisReport:
    status: str  # "Solved" or "Exhausted"
    skolem: SkolemVector | None
    k_used: int | None
    wall_time: float
    cegis_iterations: int
    metrics: Metrics | None
    table: SampleTable | None = field(default=None, repr=False)

    @property
    def solved(self) -> bool:
        return self.status == "Solved"


RESEED_LIMIT = 3


def run_schedule(spec: BfsSpec, schedule=DEFAULT_SCHEDULE, cfg: TrainConfig = TrainConfig(),
                 arch: Arch = Arch.CNF, samples: int = 500, table: SampleTable | None = None) -> SynthesisReport:
    """Try each (k, timeout) entry in order and return the first verified solution.

    The sample table is built once and carries accumulated counterexamples
    from one entry to the next.
    """
    schedule = list(schedule)
    if not schedule:
        raise ValueError("schedule must not be empty")
    start = time.monotonic()
    if table is None:
        table = build_table(spec, samples, cfg.seed)
    iterations = 0
    last = None
    for entry in schedule:
        deadline = time.monotonic() + entry.timeout
        seed = cfg.seed
        stale: dict[tuple, int] = {}
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                break
            round_cfg = TrainConfig(**{**cfg.__dict__, "max_wall_time": remaining, "seed": seed})
            iterations += 1
            res = cegis_round(spec, table, entry.k, arch, round_cfg)
            if res.skolem is not None:
                last = res.skolem
            if res.kind is RoundKind.SOLVED:
                sv = res.skolem
                if len(spec.inputs) <= 16 and not exhaustive_verify(spec, sv).valid:
                    raise AssertionError("SAT verifier and exhaustive oracle disagree")
                return SynthesisReport("Solved", sv, entry.k, time.monotonic() - start,
                                       iterations, metrics(sv), table)
            if res.kind is RoundKind.TRAIN_FAILED:
                break
            log.debug("k=%d round %d: counterexample %s", entry.k, iterations, res.counterexample.x_star)
            x_star = tuple(int(res.counterexample.x_star[n]) for n in spec.input_names)
            if table.lookup(x_star) is not None:
                # the candidate fails on a row it was trained on; retry with a new seed
                key = tuple(sorted(table.rows))
                stale[key] = stale.get(key, 0) + 1
                if stale[key] > RESEED_LIMIT:
                    break
                seed += 1
            table = res.table
    return SynthesisReport("Exhausted", last, None, time.monotonic() - start, iterations,
                           metrics(last) if last is not None else None, table)


def repair_check(h: Formula, spec: BfsSpec, sv: SkolemVector) -> bool:
    """True iff H and not F(X, Psi(X)) is unsatisfiable."""
    filled = substitute(spec.spec, sv.as_dict())
    names = spec.input_names
    cnf = tseitin(And(h, Not(filled)), {n: i + 1 for i, n in enumerate(names)})
    return not solve(cnf).sat
