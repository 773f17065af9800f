# file: tests/test_expr.py
import math

import numpy as np
import pytest
import sympy as sp

from aacord.mechanics.expr import BinOp, Call, Const, Neg, Var, compile_exprs, differentiate, evaluate, \
    make_bindings, parse
from aacord.utils.errors import ExprDomainError, ExprSyntaxError, UnboundVariableError, UnknownFunctionError


def test_parse_single_variable():
    assert parse("q1") == Var("q1")


def test_parse_sum_of_squares_over_two():
    tree = parse("(p1^2 + q1^2)/2")
    assert isinstance(tree, BinOp) and tree.op == "/"
    assert tree.right == Const(2.0)
    assert tree.left.op == "+"
    assert tree.left.left == BinOp("^", Var("p1"), Const(2.0))


def test_parse_angular_momentum():
    tree = parse("q1*p2 - q2*p1")
    assert tree == BinOp("-", BinOp("*", Var("q1"), Var("p2")), BinOp("*", Var("q2"), Var("p1")))


def test_precedence_and_associativity():
    assert evaluate(parse("2 - 3 - 4"), {}) == -5.0
    assert evaluate(parse("8 / 4 / 2"), {}) == 1.0
    assert evaluate(parse("-2^2"), {}) == -4.0
    assert evaluate(parse("2*3^2"), {}) == 18.0
    assert evaluate(parse("q1^-1"), {"q1": 4.0}) == 0.25


def test_unary_minus_and_calls():
    tree = parse("-sin(q1)")
    assert isinstance(tree, Neg) and isinstance(tree.operand, Call)
    assert evaluate(parse("atan2(1, 1)"), {}) == pytest.approx(math.pi / 4)


@pytest.mark.parametrize("text, offset", [
    ("q1 +", 5),
    ("(q1", 4),
    ("q1 $ p1", 4),
    ("q1 ** 2", 4),
    ("", 1),
    ("q1^p1", 4),
])
def test_syntax_errors_report_offsets(text, offset):
    with pytest.raises(ExprSyntaxError) as info:
        parse(text)
    assert info.value.offset == offset


def test_unknown_function():
    with pytest.raises(UnknownFunctionError, match="cosh"):
        parse("cosh(q1)")


def test_wrong_arity():
    with pytest.raises(ExprSyntaxError, match="atan2 takes 2"):
        parse("atan2(q1)")


def test_evaluate_examples():
    assert evaluate(parse("(p1^2+q1^2)/2"), {"q1": 1, "p1": 0}) == 0.5
    assert evaluate(parse("q1*p2 - q2*p1"), {"q1": 1, "q2": 0, "p1": 0, "p2": 1}) == 1.0


@pytest.mark.parametrize("text, bindings", [
    ("log(q1)", {"q1": -1.0}),
    ("sqrt(q1)", {"q1": -1.0}),
    ("1/q1", {"q1": 0.0}),
    ("atan2(q1, p1)", {"q1": 0.0, "p1": 0.0}),
    ("q1^0.5", {"q1": -2.0}),
    ("exp(q1)", {"q1": 1e4}),
])
def test_domain_errors(text, bindings):
    with pytest.raises(ExprDomainError):
        evaluate(parse(text), bindings)


def test_unbound_variable():
    with pytest.raises(UnboundVariableError, match="p1"):
        evaluate(parse("q1 + p1"), {"q1": 1.0})


def test_make_bindings_rejects_duplicates():
    with pytest.raises(ValueError):
        make_bindings([("q1", 1.0), ("q1", 2.0)])


def test_derivative_examples(rng):
    d_h = differentiate(parse("(p1^2+q1^2)/2"), "q1")
    d_l = differentiate(parse("q1*p2 - q2*p1"), "p1")
    for _ in range(10):
        q1, q2, p1, p2 = rng.normal(size=4)
        point = {"q1": q1, "q2": q2, "p1": p1, "p2": p2}
        assert evaluate(d_h, point) == pytest.approx(q1, abs=1e-14)
        assert evaluate(d_l, point) == pytest.approx(-q2, abs=1e-14)


def test_derivative_matches_finite_differences(rng):
    tree = parse("sin(q1)*p1 + exp(q1/3) - atan2(p1, q1 + 3) + sqrt(q1^2 + 1)*log(p1^2 + 2)")
    for var in ("q1", "p1"):
        derivative = differentiate(tree, var)
        for _ in range(100):
            point = dict(zip(("q1", "p1"), rng.uniform(-1.5, 1.5, size=2)))
            h = 1e-5
            up, down = dict(point), dict(point)
            up[var] += h
            down[var] -= h
            numeric = (evaluate(tree, up) - evaluate(tree, down)) / (2 * h)
            assert evaluate(derivative, point) == pytest.approx(numeric, abs=1e-7)


def test_derivative_agrees_with_sympy(rng):
    text = "q1^3*p1 - cos(q1*p1)/(1 + p1^2) + tan(q1/4)"
    tree = parse(text)
    q1, p1 = sp.symbols("q1 p1", real=True)
    reference = tree.to_sympy()
    for var, symbol in (("q1", q1), ("p1", p1)):
        expected = sp.lambdify((q1, p1), sp.diff(reference, symbol))
        ours = differentiate(tree, var).compile(["q1", "p1"])
        for _ in range(20):
            point = rng.uniform(-1.0, 1.0, size=2)
            assert ours(point.tolist()) == pytest.approx(float(expected(*point)), rel=1e-6, abs=1e-6)


def test_pretty_round_trips(rng):
    for text in ("(p1^2 + q1^2)/2", "q1*p2 - q2*p1", "-(q1 - p1)*(q1 + 2)", "a - (b - c)", "q1^-2 + 2^3^2",
                 "atan2(p2, p1) / (1 + sqrt(q1^2))"):
        tree = parse(text)
        again = parse(tree.pretty())
        assert again == tree
        names = sorted(tree.free_variables())
        point = {name: float(v) for name, v in zip(names, rng.uniform(0.5, 1.5, size=len(names)))}
        assert evaluate(again, point) == evaluate(tree, point)


def test_compile_matches_interpreter(rng):
    exprs = [parse("q1*p2 - q2*p1"), parse("(p1^2 + p2^2)/2"), parse("log(q1^2 + 1)")]
    variables = ["q1", "q2", "p1", "p2"]
    evaluator = compile_exprs(exprs, variables)
    for _ in range(20):
        z = rng.normal(size=4)
        bindings = dict(zip(variables, z))
        np.testing.assert_allclose(evaluator(z.tolist()), [evaluate(e, bindings) for e in exprs], rtol=1e-14)


def test_compiled_evaluator_keeps_domain_errors():
    f = parse("log(q1)").compile(["q1"])
    with pytest.raises(ExprDomainError):
        f([-1.0])


def test_substitute_and_free_variables():
    tree = parse("H1^2 + H2^2").substitute({"H1": parse("p1"), "H2": parse("p2")})
    assert tree.free_variables() == {"p1", "p2"}
    assert evaluate(tree, {"p1": 3.0, "p2": 4.0}) == 25.0
# end file
