from itertools import permutations

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings

from difinv.errors import OrderExceeded
from difinv.expr import ONE, compare_numeric, diff, evaluate_many, expand, parse, sym
from difinv.jet import JetSpace, determinant, multi_indices, total_derivative, total_jacobian

from .conftest import normalized, raw_trees

JS2 = JetSpace(2, 1, 3)


def test_coordinate_lists():
    assert JetSpace(1, 1, 1).coordinates(1) == ["x", "u", "u1[1]"]
    assert len(JetSpace(2, 1, 2).coordinates(2)) == 8
    assert JetSpace(1, 2, 1).coordinates(1) == ["x", "u1", "u2", "u1[1]", "u2[1]"]
    js = JetSpace(2, 2, 2)
    assert js.coordinates() == ["x1", "x2", "u1", "u2", "u1[0,1]", "u1[1,0]", "u2[0,1]", "u2[1,0]",
                                "u1[0,2]", "u1[1,1]", "u1[2,0]", "u2[0,2]", "u2[1,1]", "u2[2,0]"]


@pytest.mark.parametrize("n, m, r", [(1, 1, 3), (2, 1, 2), (2, 3, 2), (3, 2, 3)])
def test_coordinate_count(n, m, r):
    js = JetSpace(n, m, r)
    assert len(js.coordinates()) == js.coordinate_count() == len(set(js.coordinates()))


def test_coordinates_beyond_order():
    with pytest.raises(OrderExceeded):
        JetSpace(1, 1, 1).coordinates(2)


def test_multi_indices():
    assert multi_indices(2, 2) == [(0, 2), (1, 1), (2, 0)]
    assert multi_indices(3, 0) == [(0, 0, 0)]


def test_naming_is_bijective():
    js = JetSpace(2, 2, 2)
    for name in js.coordinates():
        pc = js.parse_coord(name)
        if pc is None:
            assert js.axis_of(name) is not None
        else:
            assert js.coord_name(*pc) == name


def test_prime_aliases():
    js = JetSpace(1, 1, 2)
    assert js.canonical(parse("u'' + u1 + x1")) == parse("u1[2] + u + x")


def test_total_derivative_examples():
    js = JetSpace(1, 1, 2)
    assert total_derivative(sym("u"), 0, js) == sym("u1[1]")
    got = total_derivative(parse("u*exp(-x)"), 0, js)
    assert expand(got) == expand(parse("(u1[1] - u)*exp(-x)"))
    assert total_derivative(sym("u1[0,1]"), 0, JetSpace(2, 1, 2)) == sym("u1[1,1]")


def test_total_derivative_needs_room():
    with pytest.raises(OrderExceeded):
        total_derivative(parse("u1[1]"), 0, JetSpace(1, 1, 1))


def test_parameters_are_constants():
    js = JetSpace(1, 1, 1)
    assert total_derivative(parse("C*x + k"), 0, js) == parse("C")


def test_total_jacobian_examples():
    js = JetSpace(1, 1, 1)
    assert total_jacobian([sym("x")], [0], js) == ONE
    got = total_jacobian([parse("sqrt(x^2+u^2)")], [0], js)
    assert compare_numeric(got, parse("(x+u*u1[1])/sqrt(x^2+u^2)")).equivalent
    assert total_jacobian([sym("x1"), sym("x2")], [0, 1], JetSpace(2, 1, 1)) == ONE


def test_total_jacobian_rejects_bad_axes():
    js = JetSpace(2, 1, 1)
    with pytest.raises(ValueError):
        total_jacobian([sym("u")], [0, 1], js)
    with pytest.raises(ValueError):
        total_jacobian([sym("u"), sym("x1")], [0, 0], js)


def _leibniz_det(m):
    """Permutation-sum determinant, independent of the cofactor code."""
    p = len(m)
    total = 0.0
    for perm in permutations(range(p)):
        inversions = sum(perm[i] > perm[j] for i in range(p) for j in range(i + 1, p))
        term = (-1.0) ** inversions
        for i, j in enumerate(perm):
            term *= m[i][j]
        total += term
    return total


@pytest.mark.parametrize("p", [1, 2, 3, 4, 5])
def test_determinant_against_permutation_sum(p):
    names = [f"a{i}{j}" for i in range(p) for j in range(p)]
    rows = [[sym(names[i * p + j]) for j in range(p)] for i in range(p)]
    d = determinant(rows)
    pts = np.random.default_rng(p).uniform(-2, 2, (10, p * p))
    vals, ok = evaluate_many([d], names, pts)
    assert ok.all()
    for k in range(10):
        expect = _leibniz_det(pts[k].reshape(p, p))
        assert vals[0][k] == pytest.approx(expect, rel=1e-12, abs=1e-12)
        assert vals[0][k] == pytest.approx(np.linalg.det(pts[k].reshape(p, p)), rel=1e-9, abs=1e-12)


def test_determinant_size_cap():
    with pytest.raises(ValueError):
        determinant([[sym("a")] * 7] * 7)


def test_matches_diff_without_jet_symbols():
    e = parse("x1^2*sin(x2) + a*x1")
    assert total_derivative(e, 0, JS2) == diff(e, "x1")


@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(raw_trees, raw_trees)
def test_leibniz(t1, t2):
    e1, e2 = normalized(t1), normalized(t2)
    lhs = total_derivative(e1 * e2, 0, JS2)
    rhs = e1 * total_derivative(e2, 0, JS2) + e2 * total_derivative(e1, 0, JS2)
    assert compare_numeric(lhs, rhs, n=20, tol=1e-8).equivalent


@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(raw_trees)
def test_total_derivatives_commute(tree):
    e = normalized(tree)
    d12 = total_derivative(total_derivative(e, 1, JS2), 0, JS2)
    d21 = total_derivative(total_derivative(e, 0, JS2), 1, JS2)
    assert compare_numeric(d12, d21, n=20, tol=1e-8).equivalent
