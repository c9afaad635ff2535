"""Propositional formula trees, the ``.bfs`` text format, and Tseitin CNF encoding.

A ``.bfs`` file looks like::

    # F(x, y1, y2) = XOR(x, y1, y2)
    inputs x
    outputs y1 y2
    spec (xor x y1 y2)

The ``spec`` body is an s-expression and may span several lines.
"""

from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence, Union

import numpy as np

__all__ = [
    "BfsError", "SpecSyntaxError", "UnknownVariable", "DuplicateDeclaration",
    "EmptyOutputs", "MissingAssignment", "RecursiveBinding",
    "VarKind", "Var", "Const", "Ref", "Not", "And", "Or", "Xor", "Iff", "Implies",
    "Formula", "TRUE", "FALSE", "BfsSpec", "CnfInstance",
    "parse_formula", "parse_spec", "evaluate", "truth_table", "substitute",
    "variables", "tseitin", "print_formula", "print_spec", "structurally_equal",
]

IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
KEYWORDS = frozenset({"true", "false", "not", "and", "or", "xor", "iff", "=>"})


class BfsError(Exception):
    """Base class for every error raised by this package."""


class SpecSyntaxError(BfsError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class UnknownVariable(BfsError):
    def __init__(self, name: str, line: int | None = None, column: int | None = None):
        where = f"{line}:{column}: " if line is not None else ""
        super().__init__(f"{where}unknown variable {name!r}")
        self.name = name
        self.line = line
        self.column = column


class DuplicateDeclaration(BfsError):
    def __init__(self, name: str, line: int | None = None):
        where = f"{line}: " if line is not None else ""
        super().__init__(f"{where}variable {name!r} declared twice")
        self.name = name
        self.line = line


class EmptyOutputs(BfsError):
    pass


class MissingAssignment(BfsError):
    def __init__(self, name: str):
        super().__init__(f"no value assigned to {name!r}")
        self.name = name


class RecursiveBinding(BfsError):
    def __init__(self, name: str):
        super().__init__(f"binding refers to substituted variable {name!r}")
        self.name = name


class VarKind(enum.Enum):
    INPUT = "input"
    OUTPUT = "output"
    AUXILIARY = "auxiliary"


@dataclass(frozen=True)
class Var:
    name: str
    kind: VarKind = VarKind.INPUT

    def __post_init__(self):
        if not IDENT.match(self.name) or self.name in KEYWORDS:
            raise ValueError(f"invalid variable name {self.name!r}")


# AST nodes. All are immutable; n-ary children are stored as tuples.

@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Ref:
    name: str


@dataclass(frozen=True)
class Not:
    child: "Formula"


@dataclass(frozen=True)
class And:
    children: tuple

    def __init__(self, *children: "Formula"):
        if len(children) == 1 and isinstance(children[0], (list, tuple)):
            children = tuple(children[0])
        if not children:
            raise ValueError("and needs at least one operand")
        object.__setattr__(self, "children", tuple(children))


@dataclass(frozen=True)
class Or:
    children: tuple

    def __init__(self, *children: "Formula"):
        if len(children) == 1 and isinstance(children[0], (list, tuple)):
            children = tuple(children[0])
        if not children:
            raise ValueError("or needs at least one operand")
        object.__setattr__(self, "children", tuple(children))


@dataclass(frozen=True)
class Xor:
    children: tuple

    def __init__(self, *children: "Formula"):
        if len(children) == 1 and isinstance(children[0], (list, tuple)):
            children = tuple(children[0])
        if len(children) < 2:
            raise ValueError("xor needs at least two operands")
        object.__setattr__(self, "children", tuple(children))


@dataclass(frozen=True)
class Iff:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Implies:
    lhs: "Formula"
    rhs: "Formula"


Formula = Union[Const, Ref, Not, And, Or, Xor, Iff, Implies]

TRUE = Const(True)
FALSE = Const(False)


def children_of(f: Formula) -> tuple:
    if isinstance(f, (Const, Ref)):
        return ()
    if isinstance(f, Not):
        return (f.child,)
    if isinstance(f, (Iff, Implies)):
        return (f.lhs, f.rhs)
    return f.children


def variables(f: Formula) -> set[str]:
    """Names referenced anywhere in ``f``."""
    out: set[str] = set()
    stack = [f]
    while stack:
        node = stack.pop()
        if isinstance(node, Ref):
            out.add(node.name)
        else:
            stack.extend(children_of(node))
    return out


def structurally_equal(a: Formula, b: Formula) -> bool:
    return a == b


@dataclass(frozen=True)
class BfsSpec:
    """A relational specification F(X, Y) with ordered inputs X and outputs Y."""

    inputs: tuple[Var, ...]
    outputs: tuple[Var, ...]
    spec: Formula

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        seen: set[str] = set()
        for v in self.inputs + self.outputs:
            if v.name in seen:
                raise DuplicateDeclaration(v.name)
            seen.add(v.name)
        if not self.inputs and not self.outputs:
            raise EmptyOutputs("a specification needs at least one variable")
        for name in sorted(variables(self.spec)):
            if name not in seen:
                raise UnknownVariable(name)

    @classmethod
    def build(cls, inputs: Sequence[str], outputs: Sequence[str], spec: Formula) -> "BfsSpec":
        return cls(
            tuple(Var(n, VarKind.INPUT) for n in inputs),
            tuple(Var(n, VarKind.OUTPUT) for n in outputs),
            spec,
        )

    @property
    def input_names(self) -> list[str]:
        return [v.name for v in self.inputs]

    @property
    def output_names(self) -> list[str]:
        return [v.name for v in self.outputs]


# ---------------------------------------------------------------------------
# Parsing

_ATOM = re.compile(r"[^\s()]+")


def _tokenize(text: str, line0: int = 1, col0: int = 1) -> list[tuple[str, int, int]]:
    tokens = []
    line, col = line0, col0
    pos = 0
    while pos < len(text):
        ch = text[pos]
        if ch == "\n":
            line, col = line + 1, 1
            pos += 1
            continue
        if ch.isspace():
            col += 1
            pos += 1
            continue
        if ch in "()":
            tokens.append((ch, line, col))
            pos += 1
            col += 1
            continue
        m = _ATOM.match(text, pos)
        tokens.append((m.group(), line, col))
        col += m.end() - pos
        pos = m.end()
    return tokens


class _SexprParser:
    _ARITY = {"not": (1, 1), "and": (1, None), "or": (1, None), "xor": (2, None),
              "iff": (2, 2), "=>": (2, 2)}

    def __init__(self, tokens, declared, end_pos):
        self.tokens = tokens
        self.i = 0
        self.declared = declared
        self.end_pos = end_pos

    def _peek(self):
        if self.i >= len(self.tokens):
            raise SpecSyntaxError("unexpected end of expression", *self.end_pos)
        return self.tokens[self.i]

    def parse(self) -> Formula:
        tok, line, col = self._peek()
        self.i += 1
        if tok == ")":
            raise SpecSyntaxError("unexpected ')'", line, col)
        if tok != "(":
            return self._atom(tok, line, col)
        op, oline, ocol = self._peek()
        if op not in self._ARITY:
            raise SpecSyntaxError(f"unknown operator {op!r}", oline, ocol)
        self.i += 1
        args = []
        while self._peek()[0] != ")":
            args.append(self.parse())
        self.i += 1
        lo, hi = self._ARITY[op]
        if len(args) < lo or (hi is not None and len(args) > hi):
            raise SpecSyntaxError(f"wrong number of operands for {op!r}", oline, ocol)
        if op == "not":
            return Not(args[0])
        if op == "and":
            return And(*args)
        if op == "or":
            return Or(*args)
        if op == "xor":
            return Xor(*args)
        if op == "iff":
            return Iff(*args)
        return Implies(*args)

    def _atom(self, tok, line, col) -> Formula:
        if tok == "true":
            return TRUE
        if tok == "false":
            return FALSE
        if tok in KEYWORDS or not IDENT.match(tok):
            raise SpecSyntaxError(f"unexpected token {tok!r}", line, col)
        if self.declared is not None and tok not in self.declared:
            raise UnknownVariable(tok, line, col)
        return Ref(tok)


def _parse_tokens(tokens, declared, end_pos) -> Formula:
    if not tokens:
        raise SpecSyntaxError("empty expression", *end_pos)
    p = _SexprParser(tokens, declared, end_pos)
    f = p.parse()
    if p.i != len(tokens):
        _, line, col = tokens[p.i]
        raise SpecSyntaxError("trailing tokens after expression", line, col)
    return f


def parse_formula(text: str, declared: set[str] | None = None) -> Formula:
    """Parse a single s-expression. ``declared`` restricts the allowed names."""
    lines = text.split("\n")
    return _parse_tokens(_tokenize(text), declared, (len(lines), len(lines[-1]) + 1))


def parse_spec(text: str, require_outputs: bool = True) -> BfsSpec:
    """Parse a ``.bfs`` document into a validated :class:`BfsSpec`."""
    inputs: list[str] | None = None
    outputs: list[str] | None = None
    declared_at: dict[str, int] = {}
    spec_tokens = None
    lines = text.split("\n")
    lineno = 0
    while lineno < len(lines):
        raw = lines[lineno]
        lineno += 1
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        head, _, rest = stripped.partition(" ")
        if head in ("inputs", "outputs"):
            if spec_tokens is not None:
                raise SpecSyntaxError(f"'{head}' after spec", lineno, 1)
            if (head == "inputs" and inputs is not None) or (head == "outputs" and outputs is not None):
                raise SpecSyntaxError(f"repeated '{head}' line", lineno, 1)
            names = rest.split()
            col = raw.index(head) + len(head) + 1
            for name in names:
                col = raw.index(name, col) + 1
                if not IDENT.match(name) or name in KEYWORDS:
                    raise SpecSyntaxError(f"invalid variable name {name!r}", lineno, col)
                if name in declared_at:
                    raise DuplicateDeclaration(name, lineno)
                declared_at[name] = lineno
                col += len(name)
            if head == "inputs":
                inputs = names
            else:
                outputs = names
        elif head == "spec":
            if spec_tokens is not None:
                raise SpecSyntaxError("repeated 'spec' section", lineno, 1)
            # The spec body runs to the end of the document, minus comment lines.
            start_col = raw.index("spec") + 6
            body = [(rest, lineno, start_col)]
            while lineno < len(lines):
                nxt = lines[lineno]
                lineno += 1
                if nxt.strip().startswith("#"):
                    continue
                body.append((nxt, lineno, 1))
            spec_tokens = []
            for chunk, ln, c in body:
                spec_tokens.extend(_tokenize(chunk, ln, c))
        else:
            raise SpecSyntaxError(f"unknown directive {head!r}", lineno, raw.index(head) + 1)

    if spec_tokens is None:
        raise SpecSyntaxError("missing 'spec' section", len(lines), 1)
    inputs = inputs or []
    outputs = outputs or []
    if require_outputs and not outputs:
        raise EmptyOutputs("no output variables declared")
    if not inputs and not outputs:
        raise EmptyOutputs("no variables declared")
    f = _parse_tokens(spec_tokens, set(declared_at), (len(lines), len(lines[-1]) + 1))
    return BfsSpec.build(inputs, outputs, f)


# ---------------------------------------------------------------------------
# Printing

_OP_NAMES = {And: "and", Or: "or", Xor: "xor", Iff: "iff", Implies: "=>", Not: "not"}


def print_formula(f: Formula) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Ref):
        return f.name
    parts = " ".join(print_formula(c) for c in children_of(f))
    return f"({_OP_NAMES[type(f)]} {parts})"


def print_spec(spec: BfsSpec) -> str:
    lines = [
        ("inputs " + " ".join(spec.input_names)).rstrip(),
        ("outputs " + " ".join(spec.output_names)).rstrip(),
        "spec " + print_formula(spec.spec),
    ]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Semantics

def evaluate(f: Formula, assignment: Mapping[str, bool]) -> bool:
    """Boolean value of ``f``; n-ary xor is odd parity."""
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Ref):
        try:
            return bool(assignment[f.name])
        except KeyError:
            raise MissingAssignment(f.name) from None
    if isinstance(f, Not):
        return not evaluate(f.child, assignment)
    if isinstance(f, And):
        return all(evaluate(c, assignment) for c in f.children)
    if isinstance(f, Or):
        return any(evaluate(c, assignment) for c in f.children)
    if isinstance(f, Xor):
        return sum(evaluate(c, assignment) for c in f.children) % 2 == 1
    if isinstance(f, Iff):
        return evaluate(f.lhs, assignment) == evaluate(f.rhs, assignment)
    if isinstance(f, Implies):
        return (not evaluate(f.lhs, assignment)) or evaluate(f.rhs, assignment)
    raise TypeError(f"not a formula: {f!r}")


def truth_table(f: Formula, columns: Mapping[str, np.ndarray]) -> np.ndarray:
    """Vectorised evaluation: each column is a boolean array of equal length."""
    if isinstance(f, Const):
        n = len(next(iter(columns.values()))) if columns else 1
        return np.full(n, f.value, dtype=bool)
    if isinstance(f, Ref):
        try:
            return np.asarray(columns[f.name], dtype=bool)
        except KeyError:
            raise MissingAssignment(f.name) from None
    if isinstance(f, Not):
        return ~truth_table(f.child, columns)
    if isinstance(f, And):
        return np.logical_and.reduce([truth_table(c, columns) for c in f.children])
    if isinstance(f, Or):
        return np.logical_or.reduce([truth_table(c, columns) for c in f.children])
    if isinstance(f, Xor):
        return np.logical_xor.reduce([truth_table(c, columns) for c in f.children])
    if isinstance(f, Iff):
        return truth_table(f.lhs, columns) == truth_table(f.rhs, columns)
    if isinstance(f, Implies):
        return ~truth_table(f.lhs, columns) | truth_table(f.rhs, columns)
    raise TypeError(f"not a formula: {f!r}")


def all_assignments(names: Sequence[str]) -> dict[str, np.ndarray]:
    """Columns enumerating all 2^n assignments; the first name is the most significant bit."""
    n = len(names)
    idx = np.arange(2 ** n, dtype=np.int64)
    return {name: ((idx >> (n - 1 - i)) & 1).astype(bool) for i, name in enumerate(names)}


def substitute(f: Formula, bindings: Mapping[str, Formula]) -> Formula:
    """Replace every reference to a bound name with its replacement formula."""
    if not bindings:
        return f
    for name, repl in bindings.items():
        clash = variables(repl) & set(bindings)
        if clash:
            raise RecursiveBinding(sorted(clash)[0])
    return _subst(f, bindings)


def _subst(f: Formula, bindings: Mapping[str, Formula]) -> Formula:
    if isinstance(f, Const):
        return f
    if isinstance(f, Ref):
        return bindings.get(f.name, f)
    if isinstance(f, Not):
        return Not(_subst(f.child, bindings))
    if isinstance(f, (Iff, Implies)):
        return type(f)(_subst(f.lhs, bindings), _subst(f.rhs, bindings))
    return type(f)(*(_subst(c, bindings) for c in f.children))


# ---------------------------------------------------------------------------
# CNF

@dataclass(frozen=True)
class CnfInstance:
    """Clauses over DIMACS-style signed integer literals.

    ``var_map`` maps every named (non-auxiliary) variable to its index; indices
    above those are Tseitin auxiliaries.
    """

    num_vars: int
    clauses: tuple[tuple[int, ...], ...]
    var_map: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        clauses = []
        for clause in self.clauses:
            clause = tuple(dict.fromkeys(clause))
            if not clause:
                raise ValueError("empty clause; use CnfInstance.contradiction()")
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} out of range")
            if any(-lit in clause for lit in clause):
                continue
            clauses.append(clause)
        object.__setattr__(self, "clauses", tuple(clauses))
        object.__setattr__(self, "var_map", dict(self.var_map))

    @classmethod
    def contradiction(cls, var_map: Mapping[str, int] | None = None) -> "CnfInstance":
        """The canonical unsatisfiable instance: a fresh variable forced both ways."""
        var_map = dict(var_map or {})
        v = max(var_map.values(), default=0) + 1
        return cls(v, ((v,), (-v,)), var_map)

    def with_clauses(self, extra) -> "CnfInstance":
        return CnfInstance(self.num_vars, self.clauses + tuple(tuple(c) for c in extra), self.var_map)

    def to_dimacs(self) -> str:
        lines = [f"c {name} {idx}" for name, idx in sorted(self.var_map.items(), key=lambda kv: kv[1])]
        lines.append(f"p cnf {self.num_vars} {len(self.clauses)}")
        lines.extend(" ".join(map(str, c)) + " 0" for c in self.clauses)
        return "\n".join(lines) + "\n"


def tseitin(f: Formula, var_map: Mapping[str, int] | None = None) -> CnfInstance:
    """Equisatisfiable CNF of ``f``.

    Each connective gets one auxiliary variable with a bidirectional
    definition, so CNF models projected onto the named variables are exactly
    the models of ``f``. Negation is absorbed into literals. Names not already
    in ``var_map`` are appended in sorted order.
    """
    names = dict(var_map or {})
    next_var = max(names.values(), default=0) + 1
    for name in sorted(variables(f) - set(names)):
        names[name] = next_var
        next_var += 1
    if f == FALSE:
        return CnfInstance.contradiction(names)

    clauses: list[tuple[int, ...]] = []
    counter = itertools.count(next_var)
    const_var: list[int] = []
    memo: dict[Formula, int] = {}

    def fresh() -> int:
        return next(counter)

    def true_lit() -> int:
        if not const_var:
            t = fresh()
            const_var.append(t)
            clauses.append((t,))
        return const_var[0]

    def encode(node: Formula) -> int:
        if isinstance(node, Ref):
            return names[node.name]
        if isinstance(node, Const):
            t = true_lit()
            return t if node.value else -t
        if isinstance(node, Not):
            return -encode(node.child)
        if node in memo:
            return memo[node]
        if isinstance(node, (And, Or)):
            kids = [encode(c) for c in node.children]
            a = fresh()
            if isinstance(node, And):
                clauses.extend((-a, k) for k in kids)
                clauses.append(tuple(-k for k in kids) + (a,))
            else:
                clauses.extend((a, -k) for k in kids)
                clauses.append(tuple(kids) + (-a,))
        elif isinstance(node, Xor):
            a = encode(node.children[0])
            for child in node.children[1:]:
                a = _xor2(a, encode(child), fresh(), clauses)
        elif isinstance(node, Iff):
            a = -_xor2(encode(node.lhs), encode(node.rhs), fresh(), clauses)
        elif isinstance(node, Implies):
            p, q = encode(node.lhs), encode(node.rhs)
            a = fresh()
            clauses.extend([(-a, -p, q), (p, a), (-q, a)])
        else:
            raise TypeError(f"not a formula: {node!r}")
        memo[node] = a
        return a

    root = encode(f)
    clauses.append((root,))
    num_vars = next(counter) - 1
    return CnfInstance(max(num_vars, max(names.values(), default=0)), tuple(clauses), names)


def _xor2(p: int, q: int, a: int, clauses: list) -> int:
    # a <-> (p xor q)
    clauses.extend([(-a, p, q), (-a, -p, -q), (a, -p, q), (a, p, -q)])
    return a


def iter_named_models(cnf: CnfInstance, model: Mapping[int, bool]) -> Iterator[tuple[str, bool]]:
    for name, idx in cnf.var_map.items():
        yield name, model[idx]
