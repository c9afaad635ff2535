import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boundsynth.formula import (
    FALSE, TRUE, And, BfsSpec, Const, DuplicateDeclaration, EmptyOutputs, Iff, MissingAssignment,
    Not, Or, RecursiveBinding, Ref, SpecSyntaxError, UnknownVariable, Xor, evaluate, parse_formula,
    parse_spec, print_formula, print_spec, substitute, truth_table, tseitin, variables,
)
from oracles import brute_force_models, dpll, random_formula

X = Ref("x")


def test_parse_xor_example():
    spec = parse_spec("inputs x\noutputs y1 y2\nspec (xor x y1 y2)")
    assert spec.input_names == ["x"]
    assert spec.output_names == ["y1", "y2"]
    assert spec.spec == Xor(Ref("x"), Ref("y1"), Ref("y2"))


def test_parse_or_example():
    spec = parse_spec("inputs x0\noutputs y0\nspec (or x0 y0)")
    assert spec.spec == Or(Ref("x0"), Ref("y0"))


def test_parse_unknown_variable_has_position():
    with pytest.raises(UnknownVariable) as err:
        parse_spec("inputs x\noutputs y\nspec (and x z)")
    assert err.value.name == "z"
    assert (err.value.line, err.value.column) == (3, 13)


@pytest.mark.parametrize("text, exc", [
    ("inputs x\noutputs y\nspec (and x y", SpecSyntaxError),
    ("inputs x\noutputs y\nspec (nand x y)", SpecSyntaxError),
    ("inputs x\noutputs y\nspec (not x y)", SpecSyntaxError),
    ("inputs x\noutputs y\nspec (xor x)", SpecSyntaxError),
    ("inputs x\noutputs y\nspec x y", SpecSyntaxError),
    ("inputs x\noutputs y\n", SpecSyntaxError),
    ("inputs x x\noutputs y\nspec x", DuplicateDeclaration),
    ("inputs x\noutputs x\nspec x", DuplicateDeclaration),
    ("inputs x\noutputs\nspec x", EmptyOutputs),
    ("inputs x\nspec x", EmptyOutputs),
    ("inputs\noutputs\nspec true", EmptyOutputs),
    ("inputs and\noutputs y\nspec y", SpecSyntaxError),
    ("widgets x\noutputs y\nspec y", SpecSyntaxError),
])
def test_parse_errors(text, exc):
    with pytest.raises(exc):
        parse_spec(text)


def test_parse_comments_multiline_and_empty_inputs():
    spec = parse_spec("# header\ninputs\noutputs y\nspec (or y\n# inner comment\n  (not y))\n")
    assert spec.inputs == ()
    assert spec.spec == Or(Ref("y"), Not(Ref("y")))


def test_syntax_error_reports_line_and_column():
    with pytest.raises(SpecSyntaxError) as err:
        parse_spec("inputs x\noutputs y\nspec (and x\n   ) )")
    assert err.value.line == 4
    assert err.value.column == 6


def test_eval_examples():
    assert evaluate(Xor(X, Ref("y1"), Ref("y2")), {"x": True, "y1": False, "y2": False})
    assert evaluate(And(TRUE), {})
    for v in (False, True):
        assert not evaluate(Iff(Ref("x1"), Not(Ref("x1"))), {"x1": v})


def test_eval_missing_assignment():
    with pytest.raises(MissingAssignment):
        evaluate(And(X, Ref("y")), {"x": True})


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_xor_is_odd_parity(n):
    names = [f"v{i}" for i in range(n)]
    f = Xor(*[Ref(v) for v in names])
    for bits in itertools.product([False, True], repeat=n):
        assert evaluate(f, dict(zip(names, bits))) == (sum(bits) % 2 == 1)


def test_substitute_examples():
    f = Xor(X, Ref("y1"), Ref("y2"))
    g = substitute(f, {"y1": Not(X), "y2": FALSE})
    assert g == Xor(X, Not(X), FALSE)
    assert substitute(f, {}) is f
    h = substitute(Or(Ref("x0"), Ref("y0")), {"y0": TRUE})
    assert h == Or(Ref("x0"), TRUE)
    assert all(evaluate(h, {"x0": v}) for v in (False, True))


def test_substitute_rejects_recursive_binding():
    with pytest.raises(RecursiveBinding):
        substitute(Ref("y1"), {"y1": Ref("y2"), "y2": X})


def test_substitute_homomorphism():
    rng = random.Random(7)
    names = ["a", "b", "c", "y"]
    for _ in range(300):
        f = random_formula(rng, names, 3)
        repl = random_formula(rng, ["a", "b", "c"], 2)
        g = substitute(f, {"y": repl})
        assert "y" not in variables(g)
        for bits in itertools.product([False, True], repeat=3):
            env = dict(zip("abc", bits))
            assert evaluate(g, env) == evaluate(f, {**env, "y": evaluate(repl, env)})


def test_print_examples():
    assert print_formula(Not(Ref("x1"))) == "(not x1)"
    assert print_formula(And(Or(Ref("x0"), Not(Ref("x0"))))) == "(and (or x0 (not x0)))"
    assert print_formula(Const(False)) == "false"


def test_print_parse_roundtrip_random():
    rng = random.Random(0)
    names = ["x0", "x1", "x2", "y0", "y1"]
    for _ in range(1000):
        f = random_formula(rng, names, 4)
        assert parse_formula(print_formula(f)) == f


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 4), st.integers(1, 3))
def test_spec_roundtrip(seed, nx, ny):
    rng = random.Random(seed)
    xs = [f"x{i}" for i in range(nx)]
    ys = [f"y{i}" for i in range(ny)]
    spec = BfsSpec.build(xs, ys, random_formula(rng, xs + ys, 4))
    again = parse_spec(print_spec(spec))
    assert again == spec
    assert parse_spec(print_spec(again)) == spec


def test_truth_table_matches_evaluate():
    rng = random.Random(3)
    names = ["a", "b", "c"]
    from boundsynth.formula import all_assignments

    cols = all_assignments(names)
    for _ in range(200):
        f = random_formula(rng, names, 4)
        tt = truth_table(f, cols)
        for i in range(8):
            env = {n: bool(cols[n][i]) for n in names}
            assert bool(tt[i] if tt.shape else tt) == evaluate(f, env)


# --- Tseitin -------------------------------------------------------------

def test_tseitin_false_is_canonical_unsat():
    cnf = tseitin(FALSE)
    assert len(cnf.clauses) == 2
    assert brute_force_models(cnf.num_vars, cnf.clauses) == []


def test_tseitin_literal_passthrough():
    cnf = tseitin(X)
    assert cnf.clauses == ((1,),)
    assert cnf.var_map == {"x": 1}


def test_tseitin_and_models_exhaustive():
    cnf = tseitin(And(Ref("x1"), Ref("x2")))
    models = brute_force_models(cnf.num_vars, cnf.clauses)
    projected = {(m[cnf.var_map["x1"]], m[cnf.var_map["x2"]]) for m in models}
    assert projected == {(True, True)}


def test_tseitin_respects_existing_var_map():
    cnf = tseitin(Or(Ref("b"), Ref("c")), {"a": 1, "b": 2})
    assert cnf.var_map == {"a": 1, "b": 2, "c": 3}
    assert cnf.num_vars >= 3


def _check_tseitin(f, names):
    cnf = tseitin(f, {n: i + 1 for i, n in enumerate(names)})
    # one satisfying extension per model of f, none otherwise
    for bits in itertools.product([False, True], repeat=len(names)):
        env = dict(zip(names, bits))
        units = {cnf.var_map[n]: v for n, v in env.items()}
        ext = dpll(cnf.clauses, units)
        assert (ext is not None) == evaluate(f, env), (print_formula(f), env)
    model = dpll(cnf.clauses)
    assert (model is not None) == any(
        evaluate(f, dict(zip(names, b))) for b in itertools.product([False, True], repeat=len(names)))
    if model is not None:
        env = {n: model.get(cnf.var_map[n], False) for n in names}
        assert evaluate(f, env)


def test_tseitin_equisatisfiable_random():
    rng = random.Random(11)
    for _ in range(500):
        names = [f"v{i}" for i in range(rng.randint(1, 6))]
        _check_tseitin(random_formula(rng, names, 4), names)


def test_tseitin_small_instances_full_enumeration():
    rng = random.Random(5)
    for _ in range(100):
        names = ["a", "b", "c"]
        f = random_formula(rng, names, 2)
        cnf = tseitin(f, {"a": 1, "b": 2, "c": 3})
        if cnf.num_vars > 14:
            continue
        projections = {tuple(m[i] for i in (1, 2, 3)) for m in brute_force_models(cnf.num_vars, cnf.clauses)}
        expected = {b for b in itertools.product([False, True], repeat=3) if evaluate(f, dict(zip(names, b)))}
        assert projections == expected
