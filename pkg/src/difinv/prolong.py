"""Vector fields, their prolongations and numeric invariance tests."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import OrderExceeded
from .expr import (
    ZERO, DomainSampler, Expr, add, as_expr, diff, make_rng, mul, neg, parse, sample_points,
)
from .jet import JetSpace, bump, multi_indices, total_derivative


@dataclass(frozen=True)
class VectorField:
    """Q = sum_a xi^a d/dx_a + sum_i eta^i d/du^i on the base space."""

    js: JetSpace
    xi: tuple
    eta: tuple

    def __post_init__(self):
        object.__setattr__(self, "xi", tuple(self.js.canonical(as_expr(e)) for e in self.xi))
        object.__setattr__(self, "eta", tuple(self.js.canonical(as_expr(e)) for e in self.eta))
        if len(self.xi) != self.js.n or len(self.eta) != self.js.m:
            raise ValueError(f"need {self.js.n} xi and {self.js.m} eta coefficients")
        for c in self.xi + self.eta:
            if self.js.jet_order(c) > 0:
                raise ValueError(f"coefficient {c} depends on derivative coordinates")

    @classmethod
    def from_strings(cls, js: JetSpace, xi: Sequence[str], eta: Sequence[str]) -> "VectorField":
        return cls(js, tuple(parse(s) for s in xi), tuple(parse(s) for s in eta))

    @property
    def coefficients(self) -> tuple:
        return self.xi + self.eta

    def is_nonzero(self, sampler: DomainSampler | None = None, rng=None, n: int = 10) -> bool:
        """Some coefficient is nonzero at one of ``n`` sample points."""
        _, _, vals = sample_points(list(self.coefficients), n, sampler, rng)
        return bool(np.any(np.abs(vals) > 0))

    def apply(self, e: Expr) -> Expr:
        return prolong(self, 0).apply(e)


class ProlongedField:
    """Q^(r): coefficients eta^i_alpha are built lazily and memoized.

    Uses eta^i_{alpha+e_a} = D_a eta^i_alpha - sum_b (D_a xi^b) u^i_{alpha+e_b},
    always stepping along the first nonzero axis of the target multi-index.
    """

    def __init__(self, base: VectorField, order: int):
        if order < 0:
            raise ValueError("order must be >= 0")
        self.base = base
        self.order = order
        self.js = base.js.with_order(max(order, 1))
        self._cache: dict = {}
        self._lock = threading.Lock()
        self._dxi: dict = {}

    def _dxi_a(self, a: int) -> list:
        got = self._dxi.get(a)
        if got is None:
            got = [total_derivative(xb, a, self.js) for xb in self.base.xi]
            self._dxi[a] = got
        return got

    def eta(self, i: int, alpha: Sequence[int]) -> Expr:
        """Coefficient of d/du^i_alpha (0-based i)."""
        alpha = tuple(alpha)
        k = sum(alpha)
        if k == 0:
            return self.base.eta[i]
        if k > self.order:
            raise OrderExceeded(f"|alpha|={k} exceeds prolongation order {self.order}")
        key = (i, alpha)
        got = self._cache.get(key)
        if got is not None:
            return got
        a = next(ax for ax, v in enumerate(alpha) if v > 0)
        prev = tuple(v - 1 if ax == a else v for ax, v in enumerate(alpha))
        prev_eta = self.eta(i, prev)
        js = self.js.with_order(k)
        terms = [total_derivative(prev_eta, a, js)]
        for b, dxb in enumerate(self._dxi_a(a)):
            if dxb != ZERO:
                terms.append(neg(mul(dxb, js.coord(i, bump(prev, b)))))
        value = add(*terms)
        with self._lock:
            value = self._cache.setdefault(key, value)
        return value

    def coefficient_map(self) -> dict:
        """{symbol name: coefficient} for every coordinate up to the order."""
        js = self.base.js
        out = {name: xi for name, xi in zip(js.x_names, self.base.xi)}
        for k in range(self.order + 1):
            for i in range(js.m):
                for alpha in multi_indices(js.n, k):
                    out[js.coord_name(i, alpha)] = self.eta(i, alpha)
        return out

    def apply(self, e: Expr) -> Expr:
        """Q^(r) e as a derivation."""
        js = self.base.js
        if js.jet_order(e) > self.order:
            raise OrderExceeded(f"expression has jet order {js.jet_order(e)} > {self.order}")
        terms = []
        for s in sorted(e.free_symbols):
            ax = js.axis_of(s)
            if ax is not None:
                coef = self.base.xi[ax]
            else:
                pc = js.parse_coord(s)
                if pc is None:
                    continue
                coef = self.eta(*pc)
            if coef != ZERO:
                terms.append(mul(coef, diff(e, s)))
        return add(*terms)


def prolong(Q: VectorField, r: int) -> ProlongedField:
    return ProlongedField(Q, r)


def first_prolongation_formula(Q: VectorField, i: int, c: int) -> Expr:
    """Closed form of the first-order coefficient of d/du^i_{x_c}.

    eta^i_{x_c} + eta^i_{u^j} u^j_c - xi^b_{x_c} u^i_b - xi^b_{u^j} u^j_c u^i_b
    """
    js = Q.js.with_order(1)
    xc = js.x_names[c]
    terms = [diff(Q.eta[i], xc)]
    for j, uj in enumerate(js.u_names):
        terms.append(mul(diff(Q.eta[i], uj), js.first_order(j, c)))
    for b, xib in enumerate(Q.xi):
        terms.append(neg(mul(diff(xib, xc), js.first_order(i, b))))
        for j, uj in enumerate(js.u_names):
            terms.append(neg(mul(diff(xib, uj), js.first_order(j, c), js.first_order(i, b))))
    return add(*terms)


@dataclass
class InvarianceVerdict:
    invariant: bool
    max_scaled_residual: float
    witness: dict | None = None
    value: float | None = None
    points: int = 0

    def __bool__(self):
        return self.invariant


def is_invariant_numeric(Qr: ProlongedField, e: Expr, sampler: DomainSampler | None = None,
                         n: int = 200, tol: float = 1e-8, rng=None) -> InvarianceVerdict:
    """Check Q^(r) e == 0 at ``n`` sample points with a scaled residual.

    At each point the residual |Q^(r) e| is compared against
    tol * (1 + |grad e| * |coefficients|), the natural magnitude of the sum.
    """
    rng = make_rng(rng)
    residual = Qr.apply(e)
    cmap = Qr.coefficient_map()
    names = [s for s in sorted(e.free_symbols) if s in cmap]
    grads = [diff(e, s) for s in names]
    coefs = [cmap[s] for s in names]
    exprs = [residual, e] + grads + coefs
    symbols, pts, vals = sample_points(exprs, n, sampler, rng)
    res = np.abs(vals[0])
    k = len(names)
    gnorm = np.sqrt(np.sum(vals[2:2 + k] ** 2, axis=0)) if k else np.zeros_like(res)
    cnorm = np.sqrt(np.sum(vals[2 + k:] ** 2, axis=0)) if k else np.zeros_like(res)
    scaled = res / (1.0 + gnorm * cnorm)
    worst = int(np.argmax(scaled)) if len(scaled) else 0
    bad = np.nonzero(scaled > tol)[0]
    if len(bad):
        p = int(bad[0])
        return InvarianceVerdict(False, float(scaled[worst]),
                                 {s: float(pts[p, j]) for j, s in enumerate(symbols)},
                                 float(vals[0][p]), len(scaled))
    return InvarianceVerdict(True, float(scaled[worst]) if len(scaled) else 0.0, None, None, len(scaled))
