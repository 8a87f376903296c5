import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings

from difinv.errors import DomainError, ExprSyntaxError, SamplingExhausted, UnboundSymbol, UnknownFunction
from difinv.expr import (
    BACKEND, Const, DomainSampler, Func, Power, Sum, Symbol, compare_numeric, compile_expr, diff,
    equivalent_numeric, evaluate, evaluate_many, expand, normalize, parse, polynomial_degree, render,
    sample_points, substitute,
)
from difinv.fixtures import ui_fixtures

from .conftest import normalized, raw_trees, tree_depth

x, u = Symbol("x"), Symbol("u")


# -- parse ---------------------------------------------------------------------

def test_parse_collects_repeated_factor():
    assert parse("x + u*u") == Sum((Symbol("x"), Power(u, Const(2))))


def test_parse_sqrt_and_exp_examples():
    assert parse("sqrt(x^2+u^2)") == Func("sqrt", Sum((Power(u, Const(2)), Power(x, Const(2)))))
    assert parse("exp(-x-u)*(1)") == Func("exp", parse("-u-x"))


def test_precedence_rules():
    assert parse("-x^2") == parse("-(x^2)")
    assert parse("2^3^2") == Const(512)
    assert parse("a-b-c") == parse("a-(b+c)")
    assert parse("a/b/c") == parse("a/(b*c)")


def test_literals_exact_and_decimal():
    assert parse("1/3").value == Fraction(1, 3)
    assert isinstance(parse("0.5").value, float)
    assert parse("2.5e-3").value == pytest.approx(2.5e-3)


def test_jet_coordinate_identifiers():
    e = parse("u1[1]*u2[0,2] + u'")
    assert {"u1[1]", "u2[0,2]"} <= e.free_symbols


@pytest.mark.parametrize("text, offset", [("x + * u", 4), ("sin(x", 5), ("(x+u))", 5)])
def test_syntax_error_carries_offset(text, offset):
    with pytest.raises(ExprSyntaxError) as info:
        parse(text)
    assert info.value.offset == offset
    assert isinstance(info.value, SyntaxError)


def test_unknown_function():
    with pytest.raises(UnknownFunction):
        parse("cosh(x)")


def test_round_trip_on_fixtures():
    for f in ui_fixtures():
        for e in list(f.I) + [f.J] + list(f.Q.coefficients):
            assert parse(render(e)) == normalize(e), render(e)


@settings(max_examples=300, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(raw_trees)
def test_round_trip_random(tree):
    e = normalized(tree)
    assert parse(render(e)) == e


# -- normalize -----------------------------------------------------------------

@settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(raw_trees)
def test_normalize_idempotent(tree):
    assert tree_depth(tree) <= 8
    once = normalized(tree)
    assert normalize(once) == once


@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(raw_trees)
def test_normalize_preserves_value(tree):
    syms = sorted(tree.free_symbols)
    pts = np.random.default_rng(7).uniform(0.5, 1.5, (20, len(syms)))
    raw, ok1 = evaluate_many([tree], syms, pts)
    norm, ok2 = evaluate_many([normalized(tree)], syms, pts)
    both = ok1 & ok2
    scale = 1 + np.maximum(np.abs(raw[0][both]), np.abs(norm[0][both]))
    assert np.all(np.abs(raw[0][both] - norm[0][both]) <= 1e-9 * scale)


def test_folding_and_cancellation():
    assert parse("x - x") == Const(0)
    assert parse("2*x + 3*x") == parse("5*x")
    assert parse("x*x^-1") == Const(1)
    assert parse("(1/2 + 1/3)*6") == Const(5)


# -- diff / substitute ---------------------------------------------------------

def test_diff_examples():
    assert diff(parse("x^2"), "x") == parse("2*x")
    assert diff(parse("u*exp(-x)"), "x") == parse("-u*exp(-x)")
    g = diff(parse("arcsin(x/sqrt(x^2+u^2))"), "u")
    assert evaluate(g, {"x": 1.0, "u": 1.0}) == pytest.approx(-0.5, abs=1e-12)


def test_diff_of_constant_expression_is_zero():
    assert diff(parse("a*b + 3"), "x") == Const(0)


def _central(e, s, pts, syms, h=1e-6):
    j = syms.index(s)
    up, dn = pts.copy(), pts.copy()
    up[:, j] += h
    dn[:, j] -= h
    vu, _ = evaluate_many([e], syms, up)
    vd, _ = evaluate_many([e], syms, dn)
    return (vu[0] - vd[0]) / (2 * h)


@pytest.mark.parametrize("fixture", ui_fixtures(), ids=lambda f: f.name)
def test_diff_matches_finite_differences(fixture, rng):
    sampler = fixture.sampler
    for e in list(fixture.I) + [fixture.J]:
        for s in sorted(e.free_symbols):
            d = diff(e, s)
            syms, pts, vals = sample_points([d, e], 100, sampler, rng, symbols=sorted(e.free_symbols))
            fd = _central(e, s, pts, list(syms))
            assert np.all(np.abs(vals[0] - fd) <= 1e-6 * (1 + np.abs(vals[0]))), (e, s)


@settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(raw_trees, raw_trees)
def test_diff_is_linear(t1, t2):
    a, b = Const(Fraction(3, 7)), Const(-2.25)
    e1, e2 = normalized(t1), normalized(t2)
    lhs = diff(a * e1 + b * e2, "x1")
    rhs = a * diff(e1, "x1") + b * diff(e2, "x1")
    assert compare_numeric(lhs, rhs, n=20, tol=1e-8).equivalent


def test_substitute_examples():
    assert substitute(parse("x+u"), {"u": parse("C*exp(x)")}) == parse("x + C*exp(x)")
    assert substitute(parse("u1[1]"), {}) == parse("u1[1]")
    assert substitute(parse("x*u"), {"x": u, "u": x}) == parse("x*u")
    assert substitute(parse("x - 2*u"), {"x": u, "u": x}) == parse("u - 2*x")


def test_expand_and_degree():
    e = expand(parse("(p + 1)^2 - p*(p+2)"))
    assert e == Const(1)
    assert polynomial_degree(parse("p^2*exp(z) + q*p + 3"), ["p", "q"]) == 2
    assert polynomial_degree(parse("1/(p+1)"), ["p"]) is None


# -- evaluation ----------------------------------------------------------------

def test_eval_examples():
    assert evaluate(parse("sqrt(x^2+u^2)"), {"x": 3, "u": 4}) == 5.0
    assert evaluate(parse("exp(x+u)/u"), {"x": 0, "u": 1}) == pytest.approx(math.e, rel=1e-15)


@pytest.mark.parametrize("text, bindings", [
    ("ln(x)", {"x": -1.0}),
    ("sqrt(x)", {"x": -0.1}),
    ("arcsin(x)", {"x": 1.5}),
    ("1/x", {"x": 0.0}),
    ("x^-2", {"x": 0.0}),
])
def test_domain_errors(text, bindings):
    with pytest.raises(DomainError):
        evaluate(parse(text), bindings)


def test_unbound_symbol():
    with pytest.raises(UnboundSymbol):
        evaluate(parse("x + y"), {"x": 1.0})


def test_equivalent_numeric_examples():
    big = parse("(x+u*u1[1])/(-u+x*u1[1])*sqrt(x^2+u^2)") / parse("sqrt(x^2+u^2)")
    sampler = DomainSampler({"u1[1]": (-1, 1)})
    assert equivalent_numeric(big, parse("(x+u*u1[1])/(-u+x*u1[1])"), sampler, tol=1e-9)
    assert equivalent_numeric(parse("sin(x)^2+cos(x)^2"), Const(1))
    assert not equivalent_numeric(parse("x"), parse("x + 1e-3"), tol=1e-9)


def test_sampling_exhausted():
    with pytest.raises(SamplingExhausted):
        sample_points([parse("ln(-x)")], 5)


# -- backends ------------------------------------------------------------------

def test_compiled_extension_is_active():
    assert BACKEND == "cython"


@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(raw_trees)
def test_backends_agree(tree):
    e = normalized(tree)
    syms = tuple(sorted(e.free_symbols))
    prog = compile_expr(e, syms)
    pts = np.random.default_rng(3).uniform(-2, 2, (32, len(syms)))
    v1, s1 = prog.run(pts)
    v2, s2 = prog.run(pts, backend="python")
    assert np.array_equal(s1, s2)
    ok = s1 == 0
    assert np.array_equal(v1[ok], v2[ok])


def test_constant_division_by_zero_rejected():
    with pytest.raises(DomainError):
        parse("x + 1/(2 - 2)")


def test_shared_subexpressions_compile_once():
    e = parse("sin(x*u + 1)")
    for _ in range(12):
        e = e * (e + 1)  # tree size doubles each step, the DAG grows by a constant
    prog = compile_expr(e, ("u", "x"))
    assert len(prog) < 200 and prog.nregs > 0
    pts = np.random.default_rng(0).uniform(0.1, 0.3, (16, 2))
    v1, s1 = prog.run(pts)
    v2, s2 = prog.run(pts, backend="python")
    assert np.array_equal(s1, s2)
    assert np.allclose(v1, v2, rtol=1e-13)
