"""Riccati-type systems for first-order jet coordinates along a level set.

With a universal invariant known, the characteristic equations for u^k_c
restricted to I(x,u) = C become an ODE system in one distinguished variable
z whose right-hand sides are quadratic in the unknowns.  Its general solution
is algebraic in (I, J): the graphs with I^u + C~' I^xbar + C~'' J = const.

Matrices in this module are lists of rows of expressions; they are at most
a few entries wide, so inverses are taken through the adjugate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.integrate import quad, solve_ivp

from .errors import (
    SamplingExhausted, SingularForSampledCtilde, SingularJacobiMatrix, WrongArity, ZeroCoefficient,
)
from .expr import (
    MINUS_ONE, ONE, ZERO, DomainSampler, Expr, Symbol, add, as_expr, compare_numeric,
    compile_expr, diff, equivalent_numeric, evaluate_many, expand, make_rng, mul, neg, parse,
    polynomial_degree, power, sample_points, substitute,
)
from .invariants import UniversalInvariant
from .jet import determinant
from .prolong import VectorField
from .quadrature import LevelSetParametrization

CTILDE_RADIUS = 1e-2
CTILDE_RETRIES = 10
SINGULAR_ABS = 1e-12


# --- small symbolic matrices -------------------------------------------------

def _matmul(A, B):
    return [[add(*(mul(A[i][k], B[k][j]) for k in range(len(B)))) for j in range(len(B[0]))]
            for i in range(len(A))]


def _matadd(A, B, sign=1):
    return [[add(a, b if sign > 0 else neg(b)) for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def _identity(k):
    return [[ONE if i == j else ZERO for j in range(k)] for i in range(k)]


def _jacobian(funcs, names):
    return [[diff(f, s) for s in names] for f in funcs]


def _inverse(A):
    """(adjugate / det, det) of a square symbolic matrix."""
    k = len(A)
    det = determinant(A)
    if k == 1:
        return [[power(det, MINUS_ONE)]], det
    inv_det = power(det, MINUS_ONE)
    out = [[None] * k for _ in range(k)]
    for i in range(k):
        for j in range(k):
            minor = [row[:j] + row[j + 1:] for r, row in enumerate(A) if r != i]
            c = mul(determinant(minor), inv_det)
            out[j][i] = neg(c) if (i + j) % 2 else c
    return out, det


def _column(v):
    return [[e] for e in v]


# --- systems -------------------------------------------------------------------

@dataclass(frozen=True)
class RiccatiSystem:
    """du^k_c/dz = rhs for every unknown u^k_c, on the level set I = C."""

    variable: str
    z: str
    unknowns: tuple
    rhs: tuple
    params: tuple
    Q: VectorField = field(compare=False)
    p: LevelSetParametrization = field(compare=False)
    variant: tuple = ("xi", 0)

    def degree(self) -> int | None:
        ds = [polynomial_degree(r, self.unknowns) for r in self.rhs]
        return None if None in ds else max(ds, default=0)

    def equation(self, k: int) -> str:
        return f"d{self.unknowns[k]}/d{self.z} = {self.rhs[k]}"


def _resolve_variant(Q: VectorField, p: LevelSetParametrization, variant):
    js = Q.js
    ax = js.axis_of(p.variable)
    if ax is not None:
        inferred = ("xi", ax)
    else:
        pc = js.parse_coord(p.variable)
        if pc is None or sum(pc[1]):
            raise ValueError(f"{p.variable!r} is not a base coordinate")
        inferred = ("eta", pc[0])
    if variant is not None and tuple(variant) != inferred:
        raise ValueError(f"variant {variant} does not match the parametrized variable {p.variable!r}")
    return inferred


def build_system(Q: VectorField, p: LevelSetParametrization, variant=None,
                 sampler: DomainSampler | None = None, rng=None) -> RiccatiSystem:
    """Characteristic equations for first-order coordinates, restricted to I = C.

    The numerator of every right-hand side is the first-prolongation
    coefficient eta^k_(c); the denominator is xi^a (variant ``("xi", a)``)
    or eta^i (variant ``("eta", i)``), whichever coordinate ``p`` solves for.
    """
    js = Q.js.with_order(1)
    kind, idx = _resolve_variant(Q, p, variant)
    denom = Q.xi[idx] if kind == "xi" else Q.eta[idx]
    if denom == ZERO:
        raise ZeroCoefficient(f"{kind}^{idx + 1} vanishes identically")
    try:
        _, _, vals = sample_points([denom], 20, sampler, rng)
    except SamplingExhausted as exc:
        raise ZeroCoefficient(f"{kind}^{idx + 1} = {denom} cannot be evaluated: {exc}") from exc
    if np.all(np.abs(vals[0]) <= SINGULAR_ABS):
        raise ZeroCoefficient(f"{kind}^{idx + 1} = {denom} vanishes on the sampled domain")
    inv = power(denom, MINUS_ONE)
    xs, us = js.x_names, js.u_names
    unknowns, rhs = [], []
    for k in range(js.m):
        for c in range(js.n):
            terms = [diff(Q.eta[k], xs[c])]
            for j in range(js.m):
                terms.append(mul(diff(Q.eta[k], us[j]), js.first_order(j, c)))
            for b in range(js.n):
                terms.append(neg(mul(diff(Q.xi[b], xs[c]), js.first_order(k, b))))
                for j in range(js.m):
                    terms.append(neg(mul(diff(Q.xi[b], us[j]), js.first_order(j, c), js.first_order(k, b))))
            local = expand(mul(add(*terms), inv))
            unknowns.append(js.coord_name(k, tuple(int(b == c) for b in range(js.n))))
            rhs.append(expand(p.compose(local)))
    system = RiccatiSystem(p.variable, p.z, tuple(unknowns), tuple(rhs), p.params, Q, p, (kind, idx))
    deg = system.degree()
    if deg is None or deg > 2:
        raise AssertionError(f"generated system is not of Riccati type (degree {deg})")
    return system


def classify_planar(Q: VectorField, sampler: DomainSampler | None = None, tol: float = 1e-9, rng=None) -> str:
    js = Q.js
    if js.n != 1 or js.m != 1:
        raise WrongArity("classify_planar needs n = m = 1")
    (xi,), (eta,) = Q.xi, Q.eta
    x, u = js.x_names[0], js.u_names[0]

    def same(a, b):
        return equivalent_numeric(a, b, sampler, 100, tol, rng)

    if same(diff(xi, u), ZERO):
        return "linear"
    if same(diff(eta, x), ZERO):
        return "bernoulli"
    if same(diff(xi, x), diff(eta, u)) and same(diff(xi, u), neg(diff(eta, x))):
        return "conformal_separable"
    return "general"


# --- solutions ----------------------------------------------------------------------

@dataclass
class RiccatiSolution:
    """A family of solutions of a RiccatiSystem.

    ``values`` maps each unknown to an expression in z, the level-set
    parameters and the free ``constants``.  Symbols listed in
    ``quadratures`` stand for integrals from ``quad_origin`` to z of the
    given integrands.  ``radius`` bounds |constants| where the family was
    checked to be nonsingular.
    """

    values: dict
    constants: tuple = ()
    radius: float | None = None
    quadratures: dict = field(default_factory=dict)
    quad_origin: float = 0.0
    alternative: dict | None = None
    agreement: float | None = None
    z: str = "z"

    @classmethod
    def from_strings(cls, values: Mapping[str, str], constants: Sequence[str] = (),
                     quadratures: Mapping[str, str] | None = None, **kw) -> "RiccatiSolution":
        return cls({k: parse(v) for k, v in values.items()}, tuple(constants),
                   quadratures={k: parse(v) for k, v in (quadratures or {}).items()}, **kw)

    def particular(self) -> "RiccatiSolution":
        """The member with every constant set to zero."""
        zero = {c: ZERO for c in self.constants}
        return RiccatiSolution({k: substitute(v, zero) for k, v in self.values.items()}, (), None,
                               dict(self.quadratures), self.quad_origin, z=self.z)

    def z_derivative(self, e: Expr) -> Expr:
        """d/dz, treating quadrature symbols through their integrands."""
        out = [diff(e, self.z)]
        for q, integrand in self.quadratures.items():
            if q in e.free_symbols:
                out.append(mul(diff(e, q), integrand))
        return add(*out)


def _check_nonsingular(dets, sampler: DomainSampler, constants, radius, rng, label, error=SingularForSampledCtilde):
    """Shrink the constants' radius until no det changes much from its value at C~ = 0.

    Requiring det(C~)/det(0) > 1/10 keeps the sampled family on the branch
    that contains the particular solution.  The radius is halved at most
    CTILDE_RETRIES times.
    """
    rng = make_rng(rng)
    for _ in range(CTILDE_RETRIES):
        s = sampler.merged({c: (-radius, radius) for c in constants})
        try:
            syms, pts, vals = sample_points(dets, 200, s, rng)
            zero = pts.copy()
            zero[:, [k for k, name in enumerate(syms) if name in constants]] = 0.0
            base, ok = evaluate_many(dets, syms, zero)
            if ok.all() and np.all(np.abs(base) > SINGULAR_ABS) and np.all(vals / base > 0.1):
                return radius
        except SamplingExhausted:
            pass
        if not constants:
            break
        radius /= 2
    raise error(label)


def _n1_second_form(p: LevelSetParametrization, us, Jz: Expr, JC: list, ct: list):
    """U_z - U_C (E + C~ (x) J_C)^{-1} C~ J_z."""
    Uz = [diff(p.solutions[u], p.z) for u in us]
    UC = _jacobian([p.solutions[u] for u in us], p.params)
    m = len(us)
    M = [[add(ONE if i == j else ZERO, mul(Symbol(ct[i]), JC[j])) for j in range(m)] for i in range(m)]
    Minv, detM = _inverse(M)
    corr = _matmul(UC, _matmul(Minv, _column([mul(Symbol(c), Jz) for c in ct])))
    return [add(Uz[i], neg(corr[i][0])) for i in range(m)], detM


def general_solution_n1(UI: UniversalInvariant, p: LevelSetParametrization, sampler: DomainSampler | None = None,
                        rng=None, radius: float = CTILDE_RADIUS, tol: float = 1e-8) -> RiccatiSolution:
    """General solution for n = 1 in both closed forms.

    First form: u_x = -(I_u + C~ (x) J_u)^{-1}(I_x + C~ J_x) on u = U(z, C);
    second form: U_z - U_C (E + C~ (x) J_C)^{-1} C~ J_z with J(z, C) = J(z, U(z, C)).
    """
    js = UI.js.with_order(1)
    if js.n != 1:
        raise WrongArity("general_solution_n1 needs n = 1")
    if js.axis_of(p.variable) is None:
        raise ValueError("the closed form needs the level set parametrized by x")
    rng = make_rng(rng)
    sampler = sampler or DomainSampler()
    us, x = js.u_names, js.x_names[0]
    m = js.m
    ct = [f"Ct{j + 1}" for j in range(m)]
    hat = [add(Iq, mul(Symbol(c), UI.J)) for Iq, c in zip(UI.I, ct)]
    Iu = _jacobian(hat, us)
    Ix = _column([diff(h, x) for h in hat])
    Iu_inv, detIu = _inverse(Iu)
    first = [p.compose(neg(e[0])) for e in _matmul(Iu_inv, Ix)]
    Jhat = p.compose(UI.J)
    second, detM = _n1_second_form(p, us, diff(Jhat, p.z), [diff(Jhat, c) for c in p.params], ct)
    radius = _check_nonsingular([p.compose(detIu), detM], sampler, ct, radius, rng,
                                "I_u + C~ (x) J_u is singular for every sampled C~")
    check = sampler.merged({c: (-radius, radius) for c in ct})
    agreement = max(compare_numeric(a, b, check, 100, tol, rng).max_scaled_error for a, b in zip(first, second))
    names = [js.coord_name(j, (1,)) for j in range(m)]
    return RiccatiSolution(dict(zip(names, second)), tuple(ct), radius,
                           alternative=dict(zip(names, first)), agreement=agreement, z=p.z)


def general_solution_systems(Q: VectorField, Ilist: Sequence[Expr], p: LevelSetParametrization,
                             J: Expr | None = None, sampler: DomainSampler | None = None, rng=None,
                             radius: float = CTILDE_RADIUS) -> RiccatiSolution:
    """n = 1, m >= 2.  Without a closed-form J the second form is built with
    quadrature symbols J_C<q> = integral of d/dC_q (1/xi o p) dz."""
    js = Q.js.with_order(1)
    if js.n != 1 or js.m < 2:
        raise WrongArity("general_solution_systems needs n = 1 and m >= 2")
    if J is not None:
        return general_solution_n1(UniversalInvariant(Q, tuple(Ilist), J), p, sampler, rng, radius)
    if js.axis_of(p.variable) is None:
        raise ValueError("the closed form needs the level set parametrized by x")
    rng = make_rng(rng)
    sampler = sampler or DomainSampler()
    Jz = power(p.compose(Q.xi[0]), MINUS_ONE)
    quads = {f"J_{c}": diff(Jz, c) for c in p.params}
    ct = [f"Ct{j + 1}" for j in range(js.m)]
    values, detM = _n1_second_form(p, js.u_names, Jz, [Symbol(q) for q in quads], ct)
    # J_C(z) is bounded by |z| * max |d/dC (1/xi)|, which bounds detM from below for small C~
    bound = sampler.merged({q: (-10.0, 10.0) for q in quads})
    radius = _check_nonsingular([detM], bound, ct, radius, rng, "E + C~ (x) J_C is singular for every sampled C~")
    names = [js.coord_name(j, (1,)) for j in range(js.m)]
    return RiccatiSolution(dict(zip(names, values)), tuple(ct), radius, quads, z=p.z)


def general_solution_general_n(UI: UniversalInvariant, p: LevelSetParametrization,
                               sampler: DomainSampler | None = None, rng=None,
                               radius: float = CTILDE_RADIUS, tol: float = 1e-8) -> RiccatiSolution:
    """General solution for n >= 2 in the implicit form -I^_u^{-1} I^_x and the block form with H."""
    js = UI.js.with_order(1)
    n, m = js.n, js.m
    if n < 2:
        raise WrongArity("general_solution_general_n needs n >= 2")
    a = js.axis_of(p.variable)
    if a is None:
        raise ValueError("the closed form needs the level set parametrized by an independent variable")
    rng = make_rng(rng)
    sampler = sampler or DomainSampler()
    xs, us = js.x_names, js.u_names
    xbar = [s for b, s in enumerate(xs) if b != a]
    Cx, Cu = list(p.params[:n - 1]), list(p.params[n - 1:])
    ct1 = [[f"Ct{j + 1}_{d + 1}" for d in range(n - 1)] for j in range(m)]
    ct2 = [f"Ct{j + 1}_{n}" for j in range(m)]
    constants = tuple(s for row in ct1 for s in row) + tuple(ct2)

    # implicit form
    hat = [add(UI.I[n - 1 + j], *(mul(Symbol(ct1[j][d]), UI.I[d]) for d in range(n - 1)),
               mul(Symbol(ct2[j]), UI.J)) for j in range(m)]
    Iu_inv, detIu = _inverse(_jacobian(hat, us))
    first = [[p.compose(neg(e)) for e in row] for row in _matmul(Iu_inv, _jacobian(hat, xs))]

    # block form
    Xbar = [p.solutions[s] for s in xbar]
    U = [p.solutions[s] for s in us]
    Jhat = p.compose(UI.J)
    XCx = _jacobian(Xbar, Cx)
    A, detX = _inverse(XCx)
    _check_nonsingular([detX], sampler, (), radius, rng, "X_Cx", SingularJacobiMatrix)
    Xz = _column([diff(e, p.z) for e in Xbar])
    Uz = _column([diff(e, p.z) for e in U])
    UCx, UCu, XCu = _jacobian(U, Cx), _jacobian(U, Cu), _jacobian(Xbar, Cu)
    JCx, JCu = [[diff(Jhat, c) for c in Cx]], [[diff(Jhat, c) for c in Cu]]
    Jz = diff(Jhat, p.z)
    C2 = _column([Symbol(c) for c in ct2])
    K = _matadd([[Symbol(c) for c in row] for row in ct1], _matmul(C2, JCx))
    KA = _matmul(K, A)
    M = _matadd(_matadd(_identity(m), _matmul(C2, JCu)), _matmul(KA, XCu), -1)
    Minv, detM = _inverse(M)
    UA = _matmul(UCx, A)
    H = _matmul(_matadd(UCu, _matmul(UA, XCu), -1), Minv)
    ua = _matadd(_matadd(Uz, _matmul(UA, Xz), -1),
                 _matmul(H, _matadd(_matmul(KA, Xz), [[mul(c[0], Jz)] for c in C2], -1)))
    ubar = _matadd(UA, _matmul(H, KA), -1)
    second = []
    for j in range(m):
        row, rest = [], iter(ubar[j])
        for b in range(n):
            row.append(ua[j][0] if b == a else next(rest))
        second.append(row)

    radius = _check_nonsingular([p.compose(detIu), detM], sampler, constants, radius, rng,
                                "E + C~'' J_Cu - (C~' + C~'' J_Cx) X_Cx^{-1} X_Cu")
    check = sampler.merged({c: (-radius, radius) for c in constants})
    agreement = max(compare_numeric(f, s, check, 100, tol, rng).max_scaled_error
                    for fr, sr in zip(first, second) for f, s in zip(fr, sr))
    names = [js.coord_name(j, tuple(int(b == c) for b in range(n))) for j in range(m) for c in range(n)]
    flat_second = [e for row in second for e in row]
    flat_first = [e for row in first for e in row]
    return RiccatiSolution(dict(zip(names, flat_second)), constants, radius,
                           alternative=dict(zip(names, flat_first)), agreement=agreement, z=p.z)


# --- verification ---------------------------------------------------------------------

@dataclass
class VerificationGrid:
    """z nodes on [lo, hi] and ``draws`` random values of the parameters."""

    z: tuple = (0.5, 1.5)
    points: int = 41
    draws: int = 5
    sampler: DomainSampler = field(default_factory=DomainSampler)

    def nodes(self) -> np.ndarray:
        return np.linspace(self.z[0], self.z[1], self.points)


@dataclass
class VerificationReport:
    max_residual: float
    max_deviation: float
    tol: float
    rows: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.max_residual <= self.tol and self.max_deviation <= self.tol)


def _quadrature_columns(sol: RiccatiSolution, names, params, zs) -> dict:
    out = {}
    for q, integrand in sol.quadratures.items():
        syms = (sol.z,) + tuple(names)
        prog = compile_expr(integrand, syms)
        base = np.asarray(params, dtype=float)

        def f(t, prog=prog, base=base):
            v, st = prog.run(np.concatenate(([t], base)).reshape(1, -1))
            return v[0] if st[0] == 0 else np.nan

        col, prev, acc = np.empty(len(zs)), sol.quad_origin, 0.0
        for i, t in enumerate(zs):
            acc += quad(f, prev, t, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
            col[i], prev = acc, t
        out[q] = col
    return out


def verify_solution(system: RiccatiSystem, sol: RiccatiSolution, grid: VerificationGrid | None = None,
                    tol: float = 1e-7, rng=None) -> VerificationReport:
    """Pointwise residual |d sol/dz - rhs(sol)| and deviation from a numeric
    integration of the system started at the left end of the grid."""
    grid = grid or VerificationGrid()
    rng = make_rng(rng)
    zs = grid.nodes()
    exprs = [sol.values[u] for u in system.unknowns]
    dexprs = [sol.z_derivative(e) for e in exprs]
    free = frozenset().union(*(e.free_symbols for e in exprs + dexprs + list(system.rhs)),
                             *(e.free_symbols for e in sol.quadratures.values()))
    params = sorted(free - {system.z, sol.z} - set(system.unknowns) - set(sol.quadratures))
    sampler = grid.sampler
    if sol.radius is not None:
        sampler = sampler.merged({c: (-sol.radius, sol.radius) for c in sol.constants
                                  if c not in grid.sampler.intervals})
    sol_syms = (sol.z,) + tuple(params) + tuple(sol.quadratures)
    rhs_syms = (system.z,) + tuple(params) + tuple(system.unknowns)
    rhs_progs = [compile_expr(r, rhs_syms) for r in system.rhs]
    rows, worst_res, worst_dev = [], 0.0, 0.0
    attempts = 0
    while len(rows) < grid.draws:
        attempts += 1
        if attempts > 20 * grid.draws:
            raise SamplingExhausted("no parameter draw gives a solution defined on the whole grid")
        pv = sampler.sample(params, 1, rng)[0]
        quads = _quadrature_columns(sol, params, pv, zs)
        cols = np.column_stack([zs] + [np.full_like(zs, v) for v in pv] + [quads[q] for q in sol.quadratures])
        vals, ok = evaluate_many(exprs + dexprs, sol_syms, cols)
        if not ok.all():
            continue
        s, ds = vals[:len(exprs)], vals[len(exprs):]
        rcols = np.column_stack([zs] + [np.full_like(zs, v) for v in pv] + list(s))
        rv, rok = evaluate_many(list(system.rhs), rhs_syms, rcols)
        if not rok.all():
            continue
        residual = float(np.max(np.abs(ds - rv)))

        def f(t, y, pv=pv):
            pt = np.concatenate(([t], pv, y)).reshape(1, -1)
            return np.array([prog.run(pt)[0][0] for prog in rhs_progs])

        ode = solve_ivp(f, (zs[0], zs[-1]), s[:, 0], method="DOP853", t_eval=zs, rtol=1e-12, atol=1e-13)
        deviation = float(np.max(np.abs(ode.y - s))) if ode.success else float("inf")
        rows.append({"params": dict(zip(params, map(float, pv))), "residual": residual, "deviation": deviation})
        worst_res, worst_dev = max(worst_res, residual), max(worst_dev, deviation)
    return VerificationReport(worst_res, worst_dev, tol, rows)


def invariant_spread(system: RiccatiSystem, sol: RiccatiSolution, exprs: Sequence[Expr],
                     grid: VerificationGrid | None = None, rng=None) -> float:
    """Largest z-variation of ``exprs`` (functions on J_(1)) along the lifted
    solution curves x = X(z, C), u = U(z, C), u_x = sol."""
    grid = grid or VerificationGrid()
    rng = make_rng(rng)
    lift = dict(system.p.mapping())
    lift.update(sol.values)
    lifted = [substitute(as_expr(e), lift) for e in exprs]
    free = frozenset().union(*(e.free_symbols for e in lifted))
    params = sorted(free - {sol.z})
    sampler = grid.sampler
    if sol.radius is not None:
        sampler = sampler.merged({c: (-sol.radius, sol.radius) for c in sol.constants
                                  if c not in grid.sampler.intervals})
    zs = grid.nodes()
    spread = 0.0
    for pv in sampler.sample(params, grid.draws, rng):
        cols = np.column_stack([zs] + [np.full_like(zs, v) for v in pv])
        vals, ok = evaluate_many(lifted, (sol.z,) + tuple(params), cols)
        if ok.any():
            v = vals[:, ok]
            spread = max(spread, float(np.max((v.max(axis=1) - v.min(axis=1)) / (1.0 + np.abs(v).max(axis=1)))))
    return spread


__all__ = [
    "RiccatiSolution", "RiccatiSystem", "VerificationGrid", "VerificationReport", "build_system",
    "classify_planar", "general_solution_general_n", "general_solution_n1", "general_solution_systems",
    "invariant_spread", "verify_solution",
]
