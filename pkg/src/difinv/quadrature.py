"""Obtaining J with QJ = 1 from a known universal invariant.

Symbolically: along a level set I(x,u) = C parametrized by one distinguished
variable z, J is a single antiderivative of 1/xi^a (or 1/eta^i), followed by
the back-substitution C = I(x,u).  The antiderivative is supplied by the
caller and verified, never computed.

Numerically: J(target) - J(base) is the time the flow of Q needs to carry
``base`` to ``target`` inside one level set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import AntiderivativeMismatch, FlowEscaped, NotOnLevelSet, ZeroCoefficient
from .expr import (
    MINUS_ONE, Const, DomainSampler, Expr, Symbol, as_expr, compare_numeric, compile_expr, diff,
    evaluate, make_rng, parse, power, substitute,
)
from .prolong import VectorField, prolong


@dataclass(frozen=True)
class LevelSetParametrization:
    """Explicit solution of I(x,u) = C for all base variables except one.

    ``variable`` is the distinguished coordinate (an x_a or a u^i), which is
    replaced by the parameter ``z``; ``solutions`` maps every other base
    coordinate to an expression in z and the constants ``params`` (one per
    invariant, in the same order).
    """

    variable: str
    solutions: Mapping[str, Expr]
    params: tuple
    z: str = "z"

    def __post_init__(self):
        object.__setattr__(self, "solutions", {k: as_expr(v) for k, v in self.solutions.items()})
        object.__setattr__(self, "params", tuple(self.params))

    @classmethod
    def from_strings(cls, variable: str, solutions: Mapping[str, str], params: Sequence[str], z: str = "z"):
        return cls(variable, {k: parse(v) for k, v in solutions.items()}, tuple(params), z)

    def mapping(self) -> dict:
        out = {self.variable: Symbol(self.z)}
        out.update(self.solutions)
        return out

    def compose(self, e: Expr) -> Expr:
        """e restricted to the level set, as a function of (z, C)."""
        return substitute(e, self.mapping())

    def back_substitution(self, Ilist: Sequence[Expr]) -> dict:
        out = {self.z: Symbol(self.variable)}
        out.update({c: Iq for c, Iq in zip(self.params, Ilist)})
        return out


@dataclass
class ParametrizationReport:
    passed: bool
    failing: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)


def validate_parametrization(Ilist: Sequence[Expr], p: LevelSetParametrization,
                             sampler: DomainSampler | None = None, n: int = 100, tol: float = 1e-9,
                             rng=None) -> ParametrizationReport:
    """Check I^q(parametrized point) == C_q over (z, C) samples; lists failing q (1-based)."""
    rng = make_rng(rng)
    if len(Ilist) != len(p.params):
        raise ValueError("one parameter per invariant is required")
    failing, errors = [], {}
    for q, (Iq, c) in enumerate(zip(Ilist, p.params), start=1):
        cmp = compare_numeric(p.compose(as_expr(Iq)), Symbol(c), sampler, n, tol, rng)
        errors[q] = cmp.max_scaled_error
        if not cmp.equivalent:
            failing.append(q)
    return ParametrizationReport(not failing, failing, errors)


def distinguished_coefficient(Q: VectorField, variable: str) -> Expr:
    js = Q.js
    ax = js.axis_of(variable)
    if ax is not None:
        return Q.xi[ax]
    pc = js.parse_coord(variable)
    if pc is None or sum(pc[1]) != 0:
        raise ValueError(f"{variable!r} is not a base coordinate")
    return Q.eta[pc[0]]


def J_symbolic(Q: VectorField, Ilist: Sequence[Expr], p: LevelSetParametrization, antiderivative: Expr,
               sampler: DomainSampler | None = None, n: int = 200, tol: float = 1e-8, rng=None) -> Expr:
    """J(x,u) from a caller-supplied antiderivative of 1/coefficient on the level set.

    Both d(antiderivative)/dz == 1/(coefficient o p) and QJ == 1 are verified
    numerically; a failure raises AntiderivativeMismatch carrying the residual.
    """
    rng = make_rng(rng)
    antiderivative = as_expr(antiderivative)
    coef = p.compose(distinguished_coefficient(Q, p.variable))
    if coef == Const(0):
        raise ZeroCoefficient(f"coefficient of {p.variable} vanishes")
    check = compare_numeric(diff(antiderivative, p.z), power(coef, MINUS_ONE), sampler, n, tol, rng)
    if not check.equivalent:
        raise AntiderivativeMismatch(
            f"d/d{p.z} of {antiderivative} differs from 1/({coef}); worst at {check.worst_point}",
            check.max_scaled_error)
    J = Q.js.canonical(substitute(antiderivative, p.back_substitution([as_expr(e) for e in Ilist])))
    qj = compare_numeric(prolong(Q, 0).apply(J), Const(1), sampler, n, tol, rng)
    if not qj.equivalent:
        raise AntiderivativeMismatch(f"QJ != 1 for J = {J}; worst at {qj.worst_point}", qj.max_scaled_error)
    return J


def _flow_rhs(Q: VectorField):
    names = Q.js.base_names
    progs = [compile_expr(c, names) for c in Q.coefficients]

    def rhs(t, y, sign):
        pts = np.asarray(y, dtype=float).reshape(1, -1)
        out = np.empty(len(progs))
        for k, prog in enumerate(progs):
            v, st = prog.run(pts)
            out[k] = v[0] if st[0] == 0 else np.nan
        return sign * out

    return rhs


def J_numeric(Q: VectorField, Ilist: Sequence[Expr], base: Mapping[str, float], target: Mapping[str, float],
              tol_ode: float = 1e-10, horizon: float = 50.0, level_tol: float = 1e-8,
              hit_tol: float = 1e-6) -> float:
    """Flow time t* with exp(t* Q)(base) = target, i.e. J(target) - J(base).

    The flow is integrated both forward and backward with an adaptive
    Dormand-Prince pair of order 8 and dense output; the exit functional is
    the signed distance to the hyperplane through ``target`` orthogonal to
    Q(target), whose zero crossings are located on the dense output.  The
    crossing closest in time that actually lands on ``target`` wins.
    """
    names = Q.js.base_names
    y0 = np.array([float(base[s]) for s in names])
    y1 = np.array([float(target[s]) for s in names])
    for q, Iq in enumerate(Ilist, start=1):
        a = evaluate(as_expr(Iq), dict(zip(names, y0)))
        b = evaluate(as_expr(Iq), dict(zip(names, y1)))
        if abs(a - b) > level_tol:
            raise NotOnLevelSet(f"I^{q} differs between base and target: {a!r} vs {b!r}")
    if np.allclose(y0, y1, rtol=0.0, atol=1e-15):
        return 0.0
    rhs = _flow_rhs(Q)
    normal = rhs(0.0, y1, 1.0)
    if not np.all(np.isfinite(normal)) or not np.any(normal):
        raise FlowEscaped("Q vanishes or is undefined at the target")

    def exit_functional(t, y, sign):
        return float(np.dot(y - y1, normal))

    scale = 1.0 + float(np.linalg.norm(y1))
    best = None
    for sign in (1.0, -1.0):
        sol = solve_ivp(rhs, (0.0, horizon), y0, method="DOP853", args=(sign,), rtol=tol_ode,
                        atol=tol_ode * 1e-2, events=exit_functional, dense_output=True)
        for te, ye in zip(sol.t_events[0], sol.y_events[0]):
            if np.linalg.norm(ye - y1) <= hit_tol * scale:
                t = sign * float(te)
                if best is None or abs(t) < abs(best):
                    best = t
                break
    if best is None:
        raise FlowEscaped(f"target not reached within |t| <= {horizon}")
    return best


__all__ = [
    "J_numeric", "J_symbolic", "LevelSetParametrization", "ParametrizationReport",
    "distinguished_coefficient", "validate_parametrization",
]
