"""Invariant differentials, the equivalence relation on universal invariants,
and recovery of a vector field from (I; J).

A differential dW is invariant under Q iff QW is constant.  QW == 0 makes W
itself an invariant (first type); QW == c != 0 makes W/c a companion J
(second type).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import SingularFrame, SingularTransform
from .expr import (
    MINUS_ONE, ZERO, DomainSampler, Expr, add, as_expr, diff, make_rng, mul, neg, numeric_rank, power,
    sample_points, substitute,
)
from .invariants import RANK_POINT_FRACTION, RANK_REL_TOL, UniversalInvariant
from .jet import JetSpace, determinant
from .prolong import VectorField, prolong

FIRST_TYPE = "first_type"
SECOND_TYPE = "second_type"
NOT_INVARIANT = "not_invariant"


@dataclass
class DifferentialClass:
    tag: str
    constant: float | None = None
    evidence: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    witness: tuple | None = None

    @property
    def invariant(self) -> bool:
        return self.tag != NOT_INVARIANT


def classify_differential(Q: VectorField, W: Expr, sampler: DomainSampler | None = None, n: int = 200,
                          tol: float = 1e-8, rng=None) -> DifferentialClass:
    js = Q.js
    W = js.canonical(as_expr(W))
    if js.jet_order(W) > 0:
        raise ValueError("W must depend on (x, u) only")
    e = prolong(Q, 0).apply(W)
    if e == ZERO:
        return DifferentialClass(FIRST_TYPE, 0.0)
    names = [s for s in js.base_names if s in W.free_symbols]
    grads = [diff(W, s) for s in names]
    coefs = [c for s, c in zip(js.base_names, Q.coefficients) if s in W.free_symbols]
    exprs = [e] + grads + coefs
    # sample whole base points so a witness names every coordinate
    over = sorted(set(js.base_names).union(*(g.free_symbols for g in exprs)))
    symbols, pts, vals = sample_points(exprs, max(n, 30), sampler, make_rng(rng), symbols=over)
    qw = vals[0]
    k = len(names)
    scale = 1.0 + np.sqrt(np.sum(vals[1:1 + k] ** 2, axis=0)) * np.sqrt(np.sum(vals[1 + k:] ** 2, axis=0))
    if np.all(np.abs(qw) <= tol * scale):
        return DifferentialClass(FIRST_TYPE, 0.0, qw)
    mean = float(np.mean(qw))
    if float(np.max(qw) - np.min(qw)) <= tol * (1.0 + abs(mean)):
        return DifferentialClass(SECOND_TYPE, mean, qw)
    lo, hi = int(np.argmin(qw)), int(np.argmax(qw))
    pair = tuple({s: float(pts[p, j]) for j, s in enumerate(symbols)} for p in (lo, hi))
    return DifferentialClass(NOT_INVARIANT, None, qw, pair)


def _full_rank_fraction(rows: Sequence[Sequence[Expr]], sampler, rng, n: int = 100) -> float:
    flat = [e for row in rows for e in row]
    _, _, vals = sample_points(flat, n, sampler, rng)
    shape = (len(rows), len(rows[0]))
    hits = sum(numeric_rank(vals[:, p].reshape(shape), RANK_REL_TOL) == shape[0] for p in range(vals.shape[1]))
    return hits / vals.shape[1]


def equivalence_transform(UI: UniversalInvariant, F: Sequence[Expr], H: Expr,
                          sampler: DomainSampler | None = None, n: int = 200, tol: float = 1e-8,
                          rng=None) -> UniversalInvariant:
    """(I; J) -> (F(I); J + H(I)) where F, H are written in symbols I1, I2, ..."""
    rng = make_rng(rng)
    N = len(UI.I)
    F = [as_expr(f) for f in F]
    if len(F) != N:
        raise ValueError(f"F must have {N} components")
    args = [f"I{q + 1}" for q in range(N)]
    back = dict(zip(args, UI.I))
    jac = [[substitute(diff(f, a), back) for a in args] for f in F]
    try:
        frac = _full_rank_fraction(jac, sampler, rng)
    except Exception as exc:
        raise SingularTransform(f"dF/dI cannot be evaluated: {exc}") from exc
    if frac < RANK_POINT_FRACTION:
        raise SingularTransform(f"dF/dI nonsingular at only {frac:.0%} of sampled points")
    new = UniversalInvariant(UI.Q, tuple(substitute(f, back) for f in F),
                             add(UI.J, substitute(as_expr(H), back)))
    new.check(sampler, n, tol, rng)
    return new


def reconstruct_field(Ilist: Sequence[Expr], J: Expr, js: JetSpace,
                      sampler: DomainSampler | None = None, rng=None) -> VectorField:
    """Solve Q I^q = 0, Q J = 1 for the coefficients of Q by Cramer's rule."""
    funcs = [js.canonical(as_expr(e)) for e in Ilist] + [js.canonical(as_expr(J))]
    names = js.base_names
    N = len(names)
    if len(funcs) != N:
        raise ValueError(f"need {N - 1} invariants for n = {js.n}, m = {js.m}")
    M = [[diff(f, s) for s in names] for f in funcs]
    try:
        frac = _full_rank_fraction(M, sampler, make_rng(rng))
    except Exception as exc:
        raise SingularFrame(f"gradient matrix cannot be evaluated: {exc}") from exc
    if frac < RANK_POINT_FRACTION:
        raise SingularFrame(f"gradient matrix of (I, J) singular at {1 - frac:.0%} of points")
    inv_det = power(determinant(M), MINUS_ONE)
    coefs = []
    last = N - 1
    for k in range(N):
        minor = [row[:k] + row[k + 1:] for row in M[:last]]
        c = mul(determinant(minor), inv_det)
        coefs.append(neg(c) if (last + k) % 2 else c)
    return VectorField(js, tuple(coefs[:js.n]), tuple(coefs[js.n:]))


__all__ = [
    "DifferentialClass", "FIRST_TYPE", "NOT_INVARIANT", "SECOND_TYPE", "classify_differential",
    "equivalence_transform", "reconstruct_field",
]
