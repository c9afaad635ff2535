"""Reading formulas off trained gates, clause-level simplification, size metrics."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .formula import (
    FALSE, TRUE, And, BfsError, Const, Formula, Not, Or, Ref, SpecSyntaxError, parse_formula,
    print_formula, variables,
)
from .gcln import Arch, GclnParams

__all__ = [
    "SkolemVector", "Metrics", "fextract", "simplify", "metrics", "clauses_of", "from_clauses",
    "print_skolem", "parse_skolem",
]

Lit = tuple[str, bool]  # (name, positive)
Clause = frozenset  # of Lit


@dataclass(frozen=True)
class Metrics:
    clauses: int
    literals: int
    unique_inputs: int

    def as_dict(self) -> dict:
        return {"clauses": self.clauses, "literals": self.literals, "unique_inputs": self.unique_inputs}


@dataclass
class SkolemVector:
    """One formula per output, in declaration order."""

    outputs: list[str]
    formulas: list[Formula]
    arch: Arch = Arch.CNF
    k: int | None = None
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict[str, Formula]:
        return dict(zip(self.outputs, self.formulas))

    def metrics(self) -> Metrics:
        return metrics(self)

    def to_text(self, report: dict | None = None) -> str:
        return print_skolem(self, report)


def _literal(name: str, positive: bool) -> Formula:
    return Ref(name) if positive else Not(Ref(name))


def fextract(params: GclnParams, threshold: float = 0.5, names: list[str] | None = None) -> Formula:
    """Round gates (``g > threshold``) and build the CNF (or DNF) they select.

    A selected clause with no selected literals is the empty disjunction
    (false); no selected clauses at all is the empty conjunction (true).
    DNF is the dual.
    """
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    n = params.n_inputs
    names = names or [f"x{i}" for i in range(n)]
    cnf = params.arch is Arch.CNF
    groups = []
    for j in range(params.k):
        if params.clause_gates[j] <= threshold:
            continue
        lits = []
        for i in range(2 * n):
            if params.literal_gates[j, i] > threshold:
                lits.append(_literal(names[i // 2], i % 2 == 0))
        if not lits:
            groups.append(FALSE if cnf else TRUE)
        else:
            groups.append(Or(*lits) if cnf else And(*lits))
    if not groups:
        return TRUE if cnf else FALSE
    return And(*groups) if cnf else Or(*groups)


def clauses_of(f: Formula, arch: Arch = Arch.CNF) -> list[Clause]:
    """Clauses (or DNF terms) of a normal-form formula as frozensets of ``(name, positive)``.

    In CNF, ``true`` is ``[]`` and ``false`` is ``[frozenset()]``; DNF swaps them.
    A bare literal or a single clause counts as a one-clause formula.
    """
    outer, inner = (And, Or) if arch is Arch.CNF else (Or, And)
    unit = arch is Arch.CNF  # value of the empty outer operator

    def lit_of(g):
        if isinstance(g, Ref):
            return (g.name, True)
        if isinstance(g, Not) and isinstance(g.child, Ref):
            return (g.child.name, False)
        return None

    def group(g):
        if isinstance(g, Const):
            # a constant inside the outer operator: neutral or absorbing
            return None if g.value == unit else frozenset()
        lit = lit_of(g)
        if lit is not None:
            return frozenset([lit])
        if isinstance(g, inner):
            lits = []
            for c in g.children:
                if isinstance(c, Const):
                    if c.value == unit:
                        return None  # absorbing: whole group is the neutral element
                    continue
                l = lit_of(c)
                if l is None:
                    raise ValueError(f"not in {arch.value.upper()} shape: {print_formula(f)}")
                lits.append(l)
            return frozenset(lits)
        raise ValueError(f"not in {arch.value.upper()} shape: {print_formula(f)}")

    if isinstance(f, Const):
        return [] if f.value == unit else [frozenset()]
    if isinstance(f, outer):
        parts = [group(g) for g in f.children]
    else:
        parts = [group(f)]
    return [p for p in parts if p is not None]


def from_clauses(clauses: list[Clause], arch: Arch = Arch.CNF) -> Formula:
    outer, inner = (And, Or) if arch is Arch.CNF else (Or, And)
    unit = arch is Arch.CNF
    if not clauses:
        return Const(unit)
    if any(not c for c in clauses):
        return Const(not unit)
    groups = [inner(*[_literal(n, p) for n, p in sorted(c)]) for c in clauses]
    return outer(*groups)


def _simplify_clauses(clauses: list[Clause]) -> list[Clause]:
    # works for CNF clauses and, by duality, for DNF terms
    changed = True
    cur = list(clauses)
    while changed:
        changed = False
        # tautological clauses (x and not x) are always satisfied
        nxt = [c for c in cur if not any((n, not p) in c for n, p in c)]
        # duplicates
        nxt = list(dict.fromkeys(nxt))
        if any(not c for c in nxt):
            nxt = [frozenset()]
        # subsumption: a clause that contains another is redundant
        nxt = [c for c in nxt if not any(d < c for d in nxt)]
        # self-subsuming resolution: (a|b) & (a|~b|c) -> (a|b) & (a|c)
        for i, c in enumerate(nxt):
            for d in nxt:
                if d is c:
                    continue
                for n, p in d:
                    if (n, not p) in c and (d - {(n, p)}) <= c:
                        nxt[i] = c - {(n, not p)}
                        c = nxt[i]
                        break
        if nxt != cur:
            changed = True
            cur = nxt
    return cur


def simplify(f: Formula, arch: Arch = Arch.CNF) -> Formula:
    """Semantics-preserving cleanup of a CNF (or DNF) formula, run to a fixpoint.

    Removes duplicate literals, tautological clauses, duplicate and subsumed
    clauses, strengthens clauses by self-subsuming resolution, and folds
    constants. Never grows the clause or literal count.
    """
    cl = clauses_of(f, arch)
    out = from_clauses(_simplify_clauses(cl), arch)
    if _size(out, arch) > _size(f, arch):
        return f
    return out


def _size(f: Formula, arch: Arch) -> tuple[int, int]:
    cl = clauses_of(f, arch)
    if not cl or any(not c for c in cl):
        return (0, 0)
    return (len(cl), sum(len(c) for c in cl))


def metrics(sv: SkolemVector) -> Metrics:
    """Total clauses C, literal occurrences L and distinct inputs I; constants count 0."""
    C = L = 0
    inputs: set[str] = set()
    for f in sv.formulas:
        if isinstance(f, Const):
            continue
        cl = clauses_of(f, sv.arch)
        if not cl or any(not c for c in cl):
            continue
        C += len(cl)
        L += sum(len(c) for c in cl)
        inputs |= variables(f)
    return Metrics(C, L, len(inputs))


def print_skolem(sv: SkolemVector, report: dict | None = None) -> str:
    """Skolem file text: one ``skolem <name> <sexpr>`` line per output, then a JSON object."""
    lines = [f"skolem {y} {print_formula(f)}" for y, f in zip(sv.outputs, sv.formulas)]
    body = {"arch": sv.arch.value}
    try:
        body.update(metrics(sv).as_dict())
    except ValueError:
        pass  # hand-written functions need not be in normal form
    if report:
        body.update(report)
    return "\n".join(lines) + "\n" + json.dumps(body, indent=2) + "\n"


def parse_skolem(text: str, declared: set[str] | None = None) -> tuple[SkolemVector, dict]:
    """Read a Skolem file back; returns the vector and the trailing JSON object (or {})."""
    outputs, formulas = [], []
    lines = text.split("\n")
    meta: dict = {}
    for i, raw in enumerate(lines):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("{"):
            try:
                meta = json.loads("\n".join(lines[i:]))
            except json.JSONDecodeError as exc:
                raise SpecSyntaxError(f"bad metrics object: {exc.msg}", i + 1, 1) from None
            break
        head, _, rest = line.partition(" ")
        name, _, body = rest.strip().partition(" ")
        if head != "skolem" or not name or not body:
            raise SpecSyntaxError("expected 'skolem <name> <expr>'", i + 1, 1)
        if name in outputs:
            raise BfsError(f"line {i + 1}: second Skolem function for {name!r}")
        try:
            f = parse_formula(body, declared)
        except SpecSyntaxError as exc:
            raise SpecSyntaxError(str(exc).split(": ", 1)[-1], i + 1, exc.column) from None
        outputs.append(name)
        formulas.append(f)
    arch = Arch(meta.get("arch", "cnf"))
    return SkolemVector(outputs, formulas, arch), meta
