"""Positive examples of F(X, Y), refined into a partial function X -> Y."""

from __future__ import annotations

import csv
import enum
import io
import random
from dataclasses import dataclass, field

import numpy as np

from .formula import BfsError, BfsSpec, Not, all_assignments, evaluate, truth_table, tseitin
from .sat import Polarity, Solver, SolverConfig, enumerate_models

__all__ = [
    "UnrealizableSpec", "Provenance", "SampleTable", "sample_positive",
    "remove_nondeterministic", "remove_dont_cares", "build_table", "EXHAUSTIVE_LIMIT",
]

# sample exhaustively when 2^(|X|+|Y|) is at most this
EXHAUSTIVE_LIMIT = 4096

Row = tuple[tuple[int, ...], tuple[int, ...]]


class UnrealizableSpec(BfsError):
    pass


class Provenance(enum.Enum):
    SAMPLED = "sampled"
    COUNTEREXAMPLE = "counterexample"


@dataclass
class SampleTable:
    """Rows of (x bits, y bits); at most one row per x valuation."""

    inputs: list[str]
    outputs: list[str]
    rows: list[Row] = field(default_factory=list)
    provenance: list[Provenance] = field(default_factory=list)

    def __post_init__(self):
        if len(self.provenance) < len(self.rows):
            self.provenance += [Provenance.SAMPLED] * (len(self.rows) - len(self.provenance))

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def columns(self) -> list[str]:
        return self.inputs + self.outputs

    def x_matrix(self) -> np.ndarray:
        return np.array([x for x, _ in self.rows], dtype=np.int8).reshape(len(self.rows), len(self.inputs))

    def y_column(self, i: int) -> np.ndarray:
        return np.array([y[i] for _, y in self.rows], dtype=np.int8)

    def lookup(self, x: tuple[int, ...]) -> tuple[int, ...] | None:
        for rx, ry in self.rows:
            if rx == x:
                return ry
        return None

    def with_row(self, x: tuple[int, ...], y: tuple[int, ...], provenance=Provenance.COUNTEREXAMPLE) -> "SampleTable":
        """Copy with (x, y) inserted, replacing any row that has the same x."""
        rows, prov = [], []
        for r, p in zip(self.rows, self.provenance):
            if r[0] != x:
                rows.append(r)
                prov.append(p)
        rows.append((tuple(x), tuple(y)))
        prov.append(provenance)
        return SampleTable(list(self.inputs), list(self.outputs), rows, prov)

    def check(self, spec: BfsSpec) -> None:
        """Raise AssertionError if a row violates F or two rows share an x."""
        seen = set()
        for x, y in self.rows:
            if x in seen:
                raise AssertionError(f"two rows for x={x}")
            seen.add(x)
            if not evaluate(spec.spec, self.assignment((x, y))):
                raise AssertionError(f"row {x}->{y} does not satisfy the specification")

    def assignment(self, row: Row) -> dict[str, bool]:
        x, y = row
        out = {n: bool(b) for n, b in zip(self.inputs, x)}
        out.update({n: bool(b) for n, b in zip(self.outputs, y)})
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for x, y in self.rows:
            w.writerow(list(x) + list(y))
        return buf.getvalue()


def sample_positive(spec: BfsSpec, n: int, seed: int = 0) -> list[Row]:
    """Satisfying rows of F, projected onto X then Y.

    Small domains are enumerated exhaustively (all satisfying rows are
    returned). Otherwise up to ``n`` distinct rows come from blocking-clause
    enumeration with randomised branching polarity.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    names = spec.input_names + spec.output_names
    nx = len(spec.inputs)
    if 2 ** len(names) <= EXHAUSTIVE_LIMIT:
        cols = all_assignments(names)
        sat = truth_table(spec.spec, cols)
        if not names:
            sat = sat[:1]
        bits = np.stack([cols[nm] for nm in names], axis=1).astype(int) if names else np.zeros((1, 0), int)
        rows = [(tuple(b[:nx].tolist()), tuple(b[nx:].tolist())) for b in bits[sat]]
    else:
        cnf = tseitin(spec.spec, {nm: i + 1 for i, nm in enumerate(names)})
        models = enumerate_models(cnf, list(range(1, len(names) + 1)), n,
                                  SolverConfig(seed=seed, polarity=Polarity.RANDOM))
        rows = []
        for m in models:
            b = [int(m[i + 1]) for i in range(len(names))]
            rows.append((tuple(b[:nx]), tuple(b[nx:])))
    if not rows:
        raise UnrealizableSpec("specification unsatisfiable")
    return rows


def remove_nondeterministic(rows: list[Row], seed: int = 0) -> list[Row]:
    """Keep one row per x valuation, picked uniformly by a seeded RNG."""
    rng = random.Random(seed)
    groups: dict[tuple, list[Row]] = {}
    for r in rows:
        groups.setdefault(r[0], []).append(r)
    out = []
    for x, grp in groups.items():
        distinct = list(dict.fromkeys(grp))
        out.append(distinct[0] if len(distinct) == 1 else rng.choice(distinct))
    return out


class _DontCareOracle:
    """SAT check of "not F with X fixed"; UNSAT means every Y works at that x."""

    def __init__(self, spec: BfsSpec):
        names = spec.input_names + spec.output_names
        self.cnf = tseitin(Not(spec.spec), {nm: i + 1 for i, nm in enumerate(names)})
        self.index = [self.cnf.var_map[nm] for nm in spec.input_names]
        self.cache: dict[tuple, bool] = {}

    def is_dont_care(self, x: tuple[int, ...]) -> bool:
        if x not in self.cache:
            solver = Solver(self.cnf.num_vars)
            for c in self.cnf.clauses:
                solver.add_clause(c)
            for v, b in zip(self.index, x):
                solver.add_clause([v if b else -v])
            self.cache[x] = not solver.solve().sat
        return self.cache[x]


def remove_dont_cares(rows: list[Row], spec: BfsSpec) -> list[Row]:
    oracle = _DontCareOracle(spec)
    return [r for r in rows if not oracle.is_dont_care(r[0])]


def build_table(spec: BfsSpec, n: int = 500, seed: int = 0) -> SampleTable:
    """Sample, drop non-deterministic rows, then drop don't-care rows."""
    rows = sample_positive(spec, n, seed)
    rows = remove_nondeterministic(rows, seed)
    rows = remove_dont_cares(rows, spec)
    table = SampleTable(spec.input_names, spec.output_names, rows)
    table.check(spec)
    return table
