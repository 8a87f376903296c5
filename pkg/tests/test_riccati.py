import pytest

from difinv.errors import WrongArity, ZeroCoefficient
from difinv.expr import expand, parse
from difinv.fixtures import (
    PUSHFORWARD_SEEDS, example1, example2, example3, example4, example5, linear_field, particular_example3,
    pushforward, translation,
)
from difinv.jet import JetSpace
from difinv.prolong import VectorField
from difinv.quadrature import LevelSetParametrization
from difinv.riccati import (
    RiccatiSolution, VerificationGrid, build_system, classify_planar, general_solution_general_n,
    general_solution_n1, general_solution_systems, invariant_spread, verify_solution,
)

J11 = JetSpace(1, 1, 1)


def _grid(f, extra=None, points=41, draws=5):
    sampler = f.level_sampler.merged(extra or {})
    return VerificationGrid(f.level_sampler.interval(f.level_set.z), points, draws, sampler)


def _system(f, rng):
    return build_system(f.Q, f.level_set, sampler=f.sampler, rng=rng)


def test_example2_system_structure(rng):
    s = _system(example2(), rng)
    assert s.unknowns == ("u1[1]",)
    assert s.degree() == 2
    assert s.rhs[0] == expand(parse("u1[1]^2 + (2 - C*exp(z))*u1[1] - C*exp(z)"))


def test_example3_system_is_riccati(rng):
    s = _system(example3(2), rng)
    assert s.degree() == 2
    assert "dz" in s.equation(0)


@pytest.mark.parametrize("make", [example2, lambda: example3(2), lambda: example3(-1), example4, example5])
def test_displayed_solutions_verify(make, rng):
    f = make()
    tol = 1e-6 if f.js.m > 1 else 1e-7
    report = verify_solution(_system(f, rng), f.displayed, _grid(f, f.displayed_domain), tol, rng)
    assert report.passed, (f.name, report.max_residual, report.max_deviation)


@pytest.mark.parametrize("k", [2, -1])
def test_example3_particular_solution(k, rng):
    f = example3(k)
    report = verify_solution(_system(f, rng), particular_example3(k), _grid(f), 1e-9, rng)
    assert report.passed, (report.max_residual, report.max_deviation)


def test_corrupted_solution_is_flagged(rng):
    f = example3(2)
    bad = RiccatiSolution.from_strings({"u1[1]": "2*C*z + 1e-3"})
    report = verify_solution(_system(f, rng), bad, _grid(f), 1e-7, rng)
    assert not report.passed and report.max_residual > 1e-5


@pytest.mark.parametrize("make", [example1, example2, lambda: example3(2), lambda: example3(-1)])
def test_general_solution_n1(make, rng):
    f = make()
    sol = general_solution_n1(f.ui, f.level_set, f.level_sampler, rng)
    assert sol.agreement <= 1e-8
    system = _system(f, rng)
    for s in (sol, sol.particular()):
        report = verify_solution(system, s, _grid(f), 1e-7, rng)
        assert report.passed, (f.name, report.max_residual, report.max_deviation)


def test_general_solution_systems_with_J(rng):
    f = example4()
    sol = general_solution_systems(f.Q, f.I, f.level_set, f.J, f.level_sampler, rng)
    assert set(sol.values) == {"u1[1]", "u2[1]"}
    assert verify_solution(_system(f, rng), sol, _grid(f), 1e-7, rng).passed


@pytest.mark.parametrize("make", [example4, example5])
def test_general_solution_systems_by_quadrature(make, rng):
    f = make()
    sol = general_solution_systems(f.Q, f.I, f.level_set, None, f.level_sampler, rng)
    assert set(sol.quadratures) == {"J_C1", "J_C2"}
    system = _system(f, rng)
    for s in (sol, sol.particular()):
        report = verify_solution(system, s, _grid(f), 1e-7, rng)
        assert report.passed, (f.name, report.max_residual, report.max_deviation)


@pytest.mark.parametrize("seed", PUSHFORWARD_SEEDS)
def test_general_solution_general_n(seed, rng):
    f = pushforward(seed)
    sol = general_solution_general_n(f.ui, f.level_set, f.level_sampler, rng)
    assert sol.agreement <= 1e-8
    assert set(sol.values) == {"u1[1,0]", "u1[0,1]"}
    system = _system(f, rng)
    report = verify_solution(system, sol, _grid(f, points=21, draws=3), 1e-7, rng)
    assert report.passed, (seed, report.max_residual, report.max_deviation)


def test_zero_field_on_level_set(rng):
    f = pushforward(zero=True)
    sol = general_solution_general_n(f.ui, f.level_set, f.level_sampler, rng)
    report = verify_solution(_system(f, rng), sol, _grid(f, points=11, draws=2), 1e-7, rng)
    assert report.passed


def test_invariant_spread_along_solutions(rng):
    f = example2()
    system = _system(f, rng)
    sol = general_solution_n1(f.ui, f.level_set, f.level_sampler, rng)
    assert invariant_spread(system, sol, [f.I[0], f.reduced], _grid(f), rng) <= 1e-9
    assert invariant_spread(system, sol, [parse("u1[1]")], _grid(f), rng) > 1e-3


@pytest.mark.parametrize("xi, eta, kind", [
    ("1", "x*u", "linear"),
    ("u", "u^2", "bernoulli"),
    ("x+u", "u-x", "conformal_separable"),
    ("u", "-x", "conformal_separable"),
    ("u^2", "x", "general"),
])
def test_classify_planar(xi, eta, kind, rng):
    Q = VectorField.from_strings(J11, [xi], [eta])
    assert classify_planar(Q, rng=rng) == kind


def test_classify_planar_needs_plane():
    with pytest.raises(WrongArity):
        classify_planar(example4().Q)


def test_general_n_needs_two_variables(rng):
    f = example2()
    with pytest.raises(WrongArity):
        general_solution_general_n(f.ui, f.level_set, f.level_sampler, rng)
    with pytest.raises(WrongArity):
        general_solution_n1(pushforward(1).ui, pushforward(1).level_set)


def test_zero_coefficient_rejected():
    f = translation()
    p = LevelSetParametrization.from_strings("u", {"x": "C"}, ["C"])
    with pytest.raises(ZeroCoefficient):
        build_system(f.Q, p)


@pytest.mark.parametrize("make", [linear_field, example1, example4, example5, lambda: pushforward(11)])
def test_systems_are_at_most_quadratic(make, rng):
    f = make()
    s = _system(f, rng)
    assert 1 <= len(s.unknowns) == f.js.n * f.js.m
    assert s.degree() is not None and s.degree() <= 2


def test_linear_class_gives_linear_system(rng):
    Q = VectorField.from_strings(J11, ["1 + x^2"], ["x*u + sin(x)"])
    p = LevelSetParametrization.from_strings("x", {"u": "C + z"}, ["C"])
    assert classify_planar(Q, rng=rng) == "linear"
    assert build_system(Q, p, rng=rng).degree() <= 1
