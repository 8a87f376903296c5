from math import comb

import numpy as np
import pytest

from difinv.errors import DegenerateFrame, NotInvariant, WrongArity
from difinv.expr import (
    ONE, ZERO, compare_numeric, diff, parse, polynomial_degree, sample_points, split_fraction, sym,
)
from difinv.fixtures import PUSHFORWARD_SEEDS, example1, example2, example4, n1_fixtures, pushforward, ui_fixtures
from difinv.invariants import (
    UniversalInvariant, first_order_invariants, first_order_n1, frame_determinant, invariant_count,
    invariant_derivations, lie_chain, rank_fraction, universal_differential_invariant,
)
from difinv.jet import JetSpace, total_derivative
from difinv.prolong import VectorField, is_invariant_numeric, prolong

J11 = JetSpace(1, 1, 1)
TRANSLATION = UniversalInvariant.from_strings(VectorField.from_strings(J11, ["1"], ["0"]), ["u"], "x")


@pytest.mark.parametrize("fixture", ui_fixtures(), ids=lambda f: f.name)
def test_fixture_universal_invariants_validate(fixture, rng):
    report = fixture.ui.check(fixture.sampler, rng=rng)
    assert report.ok


def test_check_rejects_bad_companion():
    ui = UniversalInvariant.from_strings(example1().Q, ["sqrt(x^2+u^2)"], "x")
    with pytest.raises(NotInvariant):
        ui.check(example1().sampler)


def test_check_rejects_non_invariant():
    ui = UniversalInvariant.from_strings(example1().Q, ["x"], "arcsin(x/sqrt(x^2+u^2))")
    with pytest.raises(NotInvariant):
        ui.check()


def test_check_rejects_dependent_set():
    Q = VectorField.from_strings(JetSpace(2, 1, 1), ["1", "0"], ["0"])
    ui = UniversalInvariant.from_strings(Q, ["x2", "2*x2"], "x1")
    with pytest.raises(DegenerateFrame):
        ui.check()


def test_wrong_invariant_count():
    with pytest.raises(ValueError):
        UniversalInvariant.from_strings(example4().Q, ["u1*exp(-x)"], "x")


def test_n1_derivation_is_scaled_total_derivative():
    f = example1()
    (D,) = invariant_derivations(f.ui, f.sampler)
    # on the u > 0 branch sampled here D_x J = (u - x u_x)/(x^2 + u^2)
    dxj = parse("(u - x*u1[1])/(x^2+u^2)")
    assert compare_numeric(D.weights[0], 1 / dxj, f.sampler, 200, 1e-9).equivalent
    (T,) = invariant_derivations(TRANSLATION)
    assert T.weights == (ONE,)


@pytest.mark.parametrize("seed", PUSHFORWARD_SEEDS)
def test_n2_derivations_straighten_the_frame(seed):
    f = pushforward(seed)
    ops = invariant_derivations(f.ui, f.sampler)
    y = [f.I[0], f.J]
    for a, D in enumerate(ops):
        for b, yb in enumerate(y):
            expected = ONE if a == b else ZERO
            cmp = compare_numeric(D.apply(yb), expected, f.sampler, 100, 1e-9)
            assert cmp.equivalent, (seed, a, b, cmp.max_scaled_error)


def test_degenerate_frame():
    ui = UniversalInvariant(TRANSLATION.Q, (sym("u"),), parse("2"))
    assert frame_determinant(ui) == ZERO
    with pytest.raises(DegenerateFrame):
        invariant_derivations(ui)


def test_universal_invariant_translation():
    got = universal_differential_invariant(TRANSLATION, 2)
    assert got == [sym("u"), sym("u1[1]"), sym("u1[2]")]


def test_example1_first_order_list(rng):
    f = example1()
    got = universal_differential_invariant(f.ui, 1, f.sampler, rng)
    assert got[0] == f.I[0]
    expected = f.reduced * f.reduction_factor
    assert compare_numeric(got[1], expected, f.sampler, 200, 1e-9, rng).equivalent


def test_example2_first_order_invariant(rng):
    f = example2()
    (row,) = first_order_invariants(f.ui, f.sampler, rng)
    shown = parse("(u1[1]-u)*u^2*exp(-2*x-u)/(u+u*u1[1]-u1[1])")
    assert compare_numeric(row[0], shown, f.sampler, 200, 1e-9, rng).equivalent
    assert compare_numeric(row[0] / f.reduction_factor, f.reduced, f.sampler, 200, 1e-9, rng).equivalent


@pytest.mark.parametrize("fixture", ui_fixtures(), ids=lambda f: f.name)
@pytest.mark.parametrize("r", [1, 2])
def test_outputs_are_invariant(fixture, r, rng):
    out = universal_differential_invariant(fixture.ui, r, fixture.sampler, rng)
    Qr = prolong(fixture.Q, r)
    for e in out:
        v = is_invariant_numeric(Qr, e, fixture.sampler, 200, 1e-8, rng)
        assert v.invariant, (fixture.name, r, str(e)[:80], v.max_scaled_residual)


@pytest.mark.parametrize("fixture", ui_fixtures(), ids=lambda f: f.name)
@pytest.mark.parametrize("r", [0, 1, 2])
def test_count_and_rank(fixture, r, rng):
    out = universal_differential_invariant(fixture.ui, r, fixture.sampler, rng)
    js = fixture.js.with_order(r)
    assert len(out) == invariant_count(js, r) == (js.n - 1) + js.m * comb(js.n + r, r)
    frac = rank_fraction(out, js.coordinates(r), 100, fixture.sampler, rng)
    assert frac >= 0.95


def test_first_order_entries_have_order_one(rng):
    f = pushforward(1)
    rows = first_order_invariants(f.ui, f.sampler, rng)
    assert all(f.js.jet_order(e) == 1 for row in rows for e in row)


@pytest.mark.parametrize("fixture", n1_fixtures(), ids=lambda f: f.name)
def test_first_order_n1_is_ratio_of_total_derivatives(fixture):
    js = fixture.js.with_order(1)
    dj = total_derivative(fixture.J, 0, js)
    for Ij, got in zip(fixture.I, first_order_n1(fixture.ui)):
        assert got == total_derivative(Ij, 0, js) * dj ** -1


@pytest.mark.parametrize("fixture", n1_fixtures(), ids=lambda f: f.name)
def test_first_order_n1_is_fractional_linear(fixture):
    slopes = [c for c in fixture.js.coordinates(1) if "[" in c]
    for e in first_order_n1(fixture.ui):
        num, den = split_fraction(e)
        for part in (num, den):
            for a in slopes:
                for b in slopes:
                    assert diff(diff(part, a), b) == ZERO
            assert polynomial_degree(part, slopes) in (0, 1)


def test_first_order_n1_needs_n1():
    with pytest.raises(WrongArity):
        first_order_n1(pushforward(0).ui)


def test_lie_chain_translation():
    chain = lie_chain(sym("u"), sym("u1[1]"), TRANSLATION.Q, 2)
    assert chain == [sym("u"), sym("u1[1]"), parse("u1[2]/u1[1]")]


def test_lie_chain_example1_invariant(rng):
    f = example1()
    sampler = f.sampler.merged({"u1[2]": (-1.0, 1.0)})
    chain = lie_chain(f.I[0], f.reduced, f.Q, 2, sampler, rng)
    assert [f.js.jet_order(e) for e in chain] == [0, 1, 2]
    assert is_invariant_numeric(prolong(f.Q, 2), chain[2], sampler, 200, 1e-8, rng)


def test_lie_chain_rejects_non_invariant():
    with pytest.raises(NotInvariant):
        lie_chain(sym("x"), example1().reduced, example1().Q, 2, example1().sampler)


@pytest.mark.parametrize("seed", PUSHFORWARD_SEEDS)
def test_pushforward_frames_stay_nondegenerate(seed, rng):
    f = pushforward(seed)
    _, _, vals = sample_points([frame_determinant(f.ui)], 2000, f.sampler, rng)
    assert np.min(np.abs(vals[0])) > 0.5


@pytest.mark.parametrize("seed", PUSHFORWARD_SEEDS)
def test_pushforward_level_sets_stay_graphs(seed, rng):
    # dv/du = 0 on a level set is where the first-order coordinates blow up
    f = pushforward(seed)
    dv = f.level_set.compose(diff(f.I[1], "u"))
    _, _, vals = sample_points([dv], 2000, f.level_sampler, rng)
    assert np.min(np.abs(vals[0])) > 0.25
