"""Differential invariants built from a universal invariant (I; J).

Given m+n-1 functionally independent invariants I^q of Q and a function J
with QJ = 1, the change of variables y_c = I^c (c < n), y_n = J, v^i =
I^{i+n-1} straightens Q to d/dy_n.  The total derivatives D_{y_a}, written in
the original coordinates as ratios of total Jacobians, map invariants to
invariants; iterating them on the v^i gives complete sets of differential
invariants of every order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Sequence

import numpy as np

from .errors import DegenerateFrame, NotInvariant, WrongArity
from .expr import (
    MINUS_ONE, Const, DomainSampler, Expr, add, as_expr, compare_numeric, diff, make_rng, mul,
    neg, numeric_rank, parse, power, sample_points,
)
from .jet import JetSpace, multi_indices, total_derivative, total_jacobian
from .prolong import InvarianceVerdict, VectorField, is_invariant_numeric, prolong

RANK_REL_TOL = 1e-8
RANK_POINT_FRACTION = 0.95


def rank_fraction(funcs: Sequence[Expr], coords: Sequence[str], n: int = 100,
                  sampler: DomainSampler | None = None, rng=None, expected: int | None = None):
    """Fraction of sample points where the Jacobian of ``funcs`` w.r.t. ``coords``
    has numeric rank ``expected`` (default: len(funcs))."""
    expected = len(funcs) if expected is None else expected
    grads = [diff(f, c) for f in funcs for c in coords]
    symbols = sorted(set(coords) | frozenset().union(*(g.free_symbols for g in grads)))
    _, _, vals = sample_points(grads, n, sampler, rng, symbols=symbols)
    shape = (len(funcs), len(coords))
    hits = 0
    for p in range(vals.shape[1]):
        if numeric_rank(vals[:, p].reshape(shape), RANK_REL_TOL) == expected:
            hits += 1
    return hits / vals.shape[1]


@dataclass
class UniversalInvariantReport:
    invariance: list
    qj: object
    rank_fraction: float

    @property
    def ok(self) -> bool:
        return (all(v.invariant for v in self.invariance) and self.qj.equivalent
                and self.rank_fraction >= RANK_POINT_FRACTION)


@dataclass(frozen=True)
class UniversalInvariant:
    """A universal invariant I = (I^1..I^{m+n-1}) of Q together with J, QJ = 1."""

    Q: VectorField
    I: tuple
    J: Expr
    level_set: object = field(default=None, compare=False)

    def __post_init__(self):
        js = self.Q.js
        object.__setattr__(self, "I", tuple(js.canonical(as_expr(e)) for e in self.I))
        object.__setattr__(self, "J", js.canonical(as_expr(self.J)))
        if len(self.I) != js.m + js.n - 1:
            raise ValueError(f"need {js.m + js.n - 1} invariants, got {len(self.I)}")

    @property
    def js(self) -> JetSpace:
        return self.Q.js

    @classmethod
    def from_strings(cls, Q: VectorField, I: Sequence[str], J: str, level_set=None):
        return cls(Q, tuple(parse(s) for s in I), parse(J), level_set)

    def validate(self, sampler: DomainSampler | None = None, n: int = 200, tol: float = 1e-8,
                 rng=None) -> UniversalInvariantReport:
        rng = make_rng(rng)
        Q0 = prolong(self.Q, 0)
        inv = [is_invariant_numeric(Q0, Iq, sampler, n, tol, rng) for Iq in self.I]
        qj = compare_numeric(Q0.apply(self.J), Const(1), sampler, n, tol, rng)
        frac = rank_fraction(list(self.I) + [self.J], self.js.base_names, 100, sampler, rng)
        return UniversalInvariantReport(inv, qj, frac)

    def check(self, sampler: DomainSampler | None = None, n: int = 200, tol: float = 1e-8, rng=None):
        report = self.validate(sampler, n, tol, rng)
        for q, v in enumerate(report.invariance):
            if not v.invariant:
                raise NotInvariant(f"I^{q + 1} = {self.I[q]} is not invariant under Q", v)
        if not report.qj.equivalent:
            raise NotInvariant(f"QJ != 1 (max scaled error {report.qj.max_scaled_error:.3g})")
        if report.rank_fraction < RANK_POINT_FRACTION:
            raise DegenerateFrame(f"(I, J) functionally dependent: full rank at "
                                  f"{report.rank_fraction:.0%} of points")
        return report


@dataclass(frozen=True)
class InvariantDerivation:
    """D_{y_a} = sum_b weights[b] * D_{x_b} (0-based ``index``)."""

    index: int
    weights: tuple
    js: JetSpace

    def apply(self, e: Expr) -> Expr:
        js = self.js.with_order(max(self.js.jet_order(e), max(self.js.jet_order(w) for w in self.weights)) + 1)
        terms = []
        for b, w in enumerate(self.weights):
            d = total_derivative(e, b, js)
            terms.append(mul(w, d))
        return add(*terms)


def frame_determinant(UI: UniversalInvariant) -> Expr:
    """Delta = D(I^1..I^{n-1}, J)/D(x_1..x_n)."""
    js = UI.js.with_order(1)
    n = js.n
    return total_jacobian(list(UI.I[:n - 1]) + [UI.J], list(range(n)), js)


def invariant_derivations(UI: UniversalInvariant, sampler: DomainSampler | None = None,
                          rng=None) -> list:
    js = UI.js.with_order(1)
    n = js.n
    delta = frame_determinant(UI)
    try:
        _, _, vals = sample_points([delta], 20, sampler, rng)
    except Exception as exc:
        raise DegenerateFrame(f"cannot evaluate Delta = {delta}: {exc}") from exc
    if np.all(np.abs(vals[0]) <= 1e-12):
        raise DegenerateFrame(f"Delta = {delta} vanishes on the sampled domain")
    inv_delta = power(delta, MINUS_ONE)
    head = list(UI.I[:n - 1])
    ops = []
    for c in range(n):
        funcs = [f for d, f in enumerate(head) if d != c] + ([UI.J] if c < n - 1 else [])
        weights = []
        for b in range(n):
            axes = [a for a in range(n) if a != b]
            minor = total_jacobian(funcs, axes, js)
            w = mul(minor, inv_delta)
            weights.append(neg(w) if (c + b) % 2 else w)
        ops.append(InvariantDerivation(c, tuple(weights), js))
    return ops


def invariant_count(js: JetSpace, r: int) -> int:
    return (js.n - 1) + js.m * comb(js.n + r, r)


def universal_differential_invariant(UI: UniversalInvariant, r: int, sampler=None, rng=None) -> list:
    """I^c (c < n) then D_y^alpha I^{i+n-1} for |alpha| <= r.

    The derived part is ordered like jet coordinates: by (|alpha|, i,
    lexicographic alpha).
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    js = UI.js
    n = js.n
    ops = invariant_derivations(UI, sampler, rng)
    memo: dict = {}

    def value(i, alpha):
        key = (i, alpha)
        if key in memo:
            return memo[key]
        if sum(alpha) == 0:
            out = UI.I[i + n - 1]
        else:
            a = next(ax for ax, v in enumerate(alpha) if v > 0)
            prev = tuple(v - 1 if ax == a else v for ax, v in enumerate(alpha))
            out = ops[a].apply(value(i, prev))
        memo[key] = out
        return out

    result = list(UI.I[:n - 1])
    for k in range(r + 1):
        for i in range(js.m):
            for alpha in multi_indices(n, k):
                result.append(value(i, alpha))
    return result


def first_order_invariants(UI: UniversalInvariant, sampler=None, rng=None) -> list:
    """m x n matrix [[D_{y_a} I^{i+n-1}]]."""
    ops = invariant_derivations(UI, sampler, rng)
    n = UI.js.n
    return [[ops[a].apply(UI.I[i + n - 1]) for a in range(n)] for i in range(UI.js.m)]


def first_order_n1(UI: UniversalInvariant) -> list:
    """I^j_(1) = D_x I^j / D_x J for one independent variable."""
    js = UI.js.with_order(1)
    if js.n != 1:
        raise WrongArity(f"first_order_n1 needs n = 1, got n = {js.n}")
    inv_dj = power(total_derivative(UI.J, 0, js), MINUS_ONE)
    return [mul(total_derivative(Ij, 0, js), inv_dj) for Ij in UI.I]


def lie_chain(I: Expr, I1: Expr, Q: VectorField, r: int, sampler: DomainSampler | None = None,
              rng=None, tol: float = 1e-8, check: bool = True) -> list:
    """[I, I1, ((1/D_x I) D_x)^s I1 for s = 1..r-1] for n = m = 1."""
    js = Q.js
    if js.n != 1 or js.m != 1:
        raise WrongArity("the Lie chain is defined for n = m = 1")
    rng = make_rng(rng)
    I, I1 = js.canonical(as_expr(I)), js.canonical(as_expr(I1))
    if js.jet_order(I) != 0 or js.jet_order(I1) != 1:
        raise ValueError("need I of order 0 and I1 of exactly order 1")
    if check:
        for label, e, order in (("I", I, 0), ("I1", I1, 1)):
            v = is_invariant_numeric(prolong(Q, order), e, sampler, 50, tol, rng)
            if not v.invariant:
                raise NotInvariant(f"{label} = {e} is not invariant", v)
    dxi = total_derivative(I, 0, js.with_order(1))
    _, _, vals = sample_points([dxi], 20, sampler, rng)
    if np.all(np.abs(vals[0]) <= 1e-12):
        raise DegenerateFrame("D_x I vanishes identically")
    w = power(dxi, MINUS_ONE)
    chain = [I, I1]
    cur = I1
    for s in range(1, r):
        cur = mul(w, total_derivative(cur, 0, js.with_order(s + 1)))
        chain.append(cur)
    return chain


def check_invariants(Q: VectorField, exprs: Sequence[Expr], r: int, sampler=None, n: int = 200,
                     tol: float = 1e-8, rng=None) -> list:
    """is_invariant_numeric under Q^(r) for each expression."""
    Qr = prolong(Q, r)
    rng = make_rng(rng)
    return [is_invariant_numeric(Qr, e, sampler, n, tol, rng) for e in exprs]


__all__ = [
    "InvarianceVerdict", "InvariantDerivation", "UniversalInvariant", "UniversalInvariantReport",
    "check_invariants", "first_order_invariants", "first_order_n1", "frame_determinant",
    "invariant_count", "invariant_derivations", "lie_chain", "rank_fraction",
    "universal_differential_invariant",
]
