"""A small CDCL SAT solver.

Two watched literals, first-UIP learning, VSIDS branching with seeded
tie-breaking, Luby restarts. Literals are DIMACS-style signed integers.
"""

from __future__ import annotations

import enum
import heapq
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .formula import BfsError, CnfInstance

__all__ = [
    "Status", "Polarity", "SolverConfig", "SatResult", "ConflictLimitExceeded",
    "Solver", "solve", "enumerate_models", "check_model", "parse_dimacs",
]


class ConflictLimitExceeded(BfsError):
    pass


class Status(enum.Enum):
    SAT = "sat"
    UNSAT = "unsat"


class Polarity(enum.Enum):
    FALSE = "false"
    RANDOM = "random"


@dataclass(frozen=True)
class SolverConfig:
    seed: int = 0
    polarity: Polarity = Polarity.FALSE
    conflict_limit: int | None = None

    def __post_init__(self):
        if self.conflict_limit is not None and self.conflict_limit <= 0:
            raise ValueError("conflict_limit must be positive")


@dataclass(frozen=True)
class SatResult:
    status: Status
    model: dict[int, bool] | None = None

    @property
    def sat(self) -> bool:
        return self.status is Status.SAT


def check_model(clauses: Iterable[Sequence[int]], model: dict[int, bool]) -> bool:
    """Independent clause walker: does ``model`` satisfy every clause?"""
    return all(any(model[abs(l)] == (l > 0) for l in clause) for clause in clauses)


def _luby(i: int) -> int:
    # i-th element (1-based) of the Luby sequence 1 1 2 1 1 2 4 ...
    k = 1
    while (1 << k) - 1 < i:
        k += 1
    while True:
        if i == (1 << k) - 1:
            return 1 << (k - 1)
        i -= (1 << (k - 1)) - 1
        k = 1
        while (1 << k) - 1 < i:
            k += 1


class Solver:
    """Stateful CDCL solver. Clauses may be added between calls to :meth:`solve`."""

    RESTART_BASE = 100
    VAR_DECAY = 0.95

    def __init__(self, num_vars: int, cfg: SolverConfig = SolverConfig()):
        self.n = num_vars
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.clauses: list[list[int]] = []
        self.original: list[tuple[int, ...]] = []
        self.watches: list[list[int]] = [[] for _ in range(2 * num_vars + 2)]
        self.value = [0] * (num_vars + 1)  # 1 true, -1 false, 0 unassigned
        self.level = [0] * (num_vars + 1)
        self.reason: list[int | None] = [None] * (num_vars + 1)
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.ok = True
        self.var_inc = 1.0
        # seeded jitter breaks activity ties reproducibly
        self.activity = [0.0] + [self.rng.random() * 1e-6 for _ in range(num_vars)]
        self.heap = [(-self.activity[v], v) for v in range(1, num_vars + 1)]
        heapq.heapify(self.heap)
        self.conflicts = 0

    @staticmethod
    def _w(lit: int) -> int:
        return 2 * lit if lit > 0 else -2 * lit + 1

    def _lit_value(self, lit: int) -> int:
        v = self.value[abs(lit)]
        return v if lit > 0 else -v

    def _enqueue(self, lit: int, reason: int | None) -> None:
        v = abs(lit)
        self.value[v] = 1 if lit > 0 else -1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def _backtrack(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        start = self.trail_lim[lvl]
        for lit in self.trail[start:]:
            v = abs(lit)
            self.value[v] = 0
            self.reason[v] = None
            heapq.heappush(self.heap, (-self.activity[v], v))
        del self.trail[start:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)

    def add_clause(self, lits: Iterable[int]) -> bool:
        """Add a clause permanently; returns False once the instance is known UNSAT."""
        lits = list(dict.fromkeys(lits))
        for l in lits:
            if l == 0 or abs(l) > self.n:
                raise ValueError(f"literal {l} out of range")
        self.original.append(tuple(lits))
        if not self.ok:
            return False
        self._backtrack(0)
        if any(-l in lits for l in lits):
            return True
        live = []
        for l in lits:
            val = self._lit_value(l)
            if val == 1:
                return True
            if val == 0:
                live.append(l)
        if not live:
            self.ok = False
        elif len(live) == 1:
            self._enqueue(live[0], None)
            if self._propagate() is not None:
                self.ok = False
        else:
            self._attach(live)
        return self.ok

    def _attach(self, lits: list[int]) -> int:
        idx = len(self.clauses)
        self.clauses.append(lits)
        self.watches[self._w(-lits[0])].append(idx)
        self.watches[self._w(-lits[1])].append(idx)
        return idx

    def _propagate(self) -> int | None:
        """Unit propagation; returns the index of a conflicting clause or None."""
        value = self.value
        while self.qhead < len(self.trail):
            p = self.trail[self.qhead]
            self.qhead += 1
            false_lit = -p
            ws = self.watches[self._w(p)]  # clauses watching the literal that just became false
            i = j = 0
            while i < len(ws):
                ci = ws[i]
                i += 1
                c = self.clauses[ci]
                if c[0] == false_lit:
                    c[0], c[1] = c[1], c[0]
                first = c[0]
                fv = value[abs(first)]
                if (fv if first > 0 else -fv) == 1:
                    ws[j] = ci
                    j += 1
                    continue
                for k in range(2, len(c)):
                    lk = c[k]
                    vk = value[abs(lk)]
                    if (vk if lk > 0 else -vk) != -1:
                        c[1], c[k] = lk, c[1]
                        self.watches[self._w(-lk)].append(ci)
                        break
                else:
                    ws[j] = ci
                    j += 1
                    if (fv if first > 0 else -fv) == -1:
                        while i < len(ws):
                            ws[j] = ws[i]
                            j += 1
                            i += 1
                        del ws[j:]
                        self.qhead = len(self.trail)
                        return ci
                    self._enqueue(first, ci)
            del ws[j:]
        return None

    def _bump(self, v: int) -> None:
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            self.activity = [a * 1e-100 for a in self.activity]
            self.var_inc *= 1e-100
            self.heap = [(-self.activity[u], u) for u in range(1, self.n + 1) if self.value[u] == 0]
            heapq.heapify(self.heap)
        elif self.value[v] == 0:
            heapq.heappush(self.heap, (-self.activity[v], v))

    def _analyze(self, confl: int) -> tuple[list[int], int]:
        seen = [False] * (self.n + 1)
        learnt = [0]
        counter = 0
        cur_level = len(self.trail_lim)
        idx = len(self.trail) - 1
        p = None
        clause = self.clauses[confl]
        while True:
            for q in clause if p is None else clause[1:]:
                v = abs(q)
                if not seen[v] and self.level[v] > 0:
                    seen[v] = True
                    self._bump(v)
                    if self.level[v] >= cur_level:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[abs(self.trail[idx])]:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            seen[abs(p)] = False
            counter -= 1
            if counter == 0:
                break
            clause = self.clauses[self.reason[abs(p)]]
            # the implied literal sits at position 0 of its reason clause
        learnt[0] = -p
        if len(learnt) == 1:
            return learnt, 0
        best = max(range(1, len(learnt)), key=lambda i: self.level[abs(learnt[i])])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, self.level[abs(learnt[1])]

    def _pick_branch(self) -> int | None:
        while self.heap:
            neg_act, v = heapq.heappop(self.heap)
            if self.value[v] == 0 and -neg_act == self.activity[v]:
                return v
        # stale heap entries exhausted; fall back to a scan
        for v in range(1, self.n + 1):
            if self.value[v] == 0:
                return v
        return None

    def solve(self, assumptions: Sequence[int] = ()) -> SatResult:
        """Decide satisfiability of the clauses added so far plus unit ``assumptions``."""
        if not self.ok:
            return SatResult(Status.UNSAT)
        self._backtrack(0)
        if assumptions:
            sub = Solver(self.n, self.cfg)
            for c in self.original:
                sub.add_clause(c)
            for a in assumptions:
                sub.add_clause([a])
            return sub.solve()
        if self._propagate() is not None:
            self.ok = False
            return SatResult(Status.UNSAT)
        restart_no = 1
        budget = self.RESTART_BASE * _luby(restart_no)
        since_restart = 0
        while True:
            confl = self._propagate()
            if confl is not None:
                self.conflicts += 1
                since_restart += 1
                if not self.trail_lim:
                    self.ok = False
                    return SatResult(Status.UNSAT)
                if self.cfg.conflict_limit is not None and self.conflicts > self.cfg.conflict_limit:
                    self._backtrack(0)
                    raise ConflictLimitExceeded(f"more than {self.cfg.conflict_limit} conflicts")
                learnt, back = self._analyze(confl)
                self._backtrack(back)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], None)
                else:
                    self._enqueue(learnt[0], self._attach(learnt))
                self.var_inc /= self.VAR_DECAY
                continue
            if since_restart >= budget:
                restart_no += 1
                budget = self.RESTART_BASE * _luby(restart_no)
                since_restart = 0
                self._backtrack(0)
                continue
            v = self._pick_branch()
            if v is None:
                model = {u: self.value[u] == 1 for u in range(1, self.n + 1)}
                if not check_model(self.original, model):
                    raise AssertionError("solver produced a model violating a clause")
                self._backtrack(0)
                return SatResult(Status.SAT, model)
            if self.cfg.polarity is Polarity.RANDOM:
                lit = v if self.rng.random() < 0.5 else -v
            else:
                lit = -v
            self.trail_lim.append(len(self.trail))
            self._enqueue(lit, None)


def solve(cnf: CnfInstance, cfg: SolverConfig = SolverConfig()) -> SatResult:
    solver = Solver(cnf.num_vars, cfg)
    for clause in cnf.clauses:
        if not solver.add_clause(clause):
            return SatResult(Status.UNSAT)
    return solver.solve()


def enumerate_models(
    cnf: CnfInstance,
    project_onto: Sequence[int],
    limit: int,
    cfg: SolverConfig = SolverConfig(),
) -> list[dict[int, bool]]:
    """Up to ``limit`` distinct projections of models onto ``project_onto``.

    After each model a blocking clause over the projection variables is added,
    so every projection is returned at most once.
    """
    for v in project_onto:
        if not 1 <= v <= cnf.num_vars:
            raise ValueError(f"projection variable {v} not declared")
    solver = Solver(cnf.num_vars, cfg)
    for clause in cnf.clauses:
        solver.add_clause(clause)
    found: list[dict[int, bool]] = []
    while len(found) < limit:
        res = solver.solve()
        if not res.sat:
            break
        proj = {v: res.model[v] for v in project_onto}
        found.append(proj)
        if not project_onto:
            break
        solver.add_clause([-v if val else v for v, val in proj.items()])
    return found


def parse_dimacs(text: str) -> CnfInstance:
    num_vars = 0
    clauses: list[tuple[int, ...]] = []
    current: list[int] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            num_vars = int(line.split()[2])
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(tuple(current))
                current = []
            else:
                current.append(lit)
    if any(not c for c in clauses):
        return CnfInstance.contradiction()
    return CnfInstance(num_vars, tuple(clauses))
