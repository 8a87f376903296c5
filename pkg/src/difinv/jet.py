"""Jet-space bookkeeping: coordinates, total derivatives and their Jacobians.

Naming convention (part of the expression grammar):

* independent variables ``x1 .. xn`` (just ``x`` when n == 1);
* dependent variables ``u1 .. um`` (just ``u`` when m == 1);
* derivative coordinates ``u<i>[a1,...,an]`` for |alpha| > 0, always with the
  dependent index, e.g. ``u1[1]`` is u_x and ``u2[0,2]`` is u^2_{x2 x2}.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from math import comb
from typing import Sequence

from .errors import OrderExceeded
from .expr import ONE, ZERO, Expr, Symbol, add, diff, mul, neg

_COORD = re.compile(r"^u(\d+)\[(\d+(?:,\d+)*)\]$")

MAX_JACOBIAN = 6


def multi_indices(n: int, order: int):
    """All multi-indices of length ``n`` with |alpha| == order, lexicographic."""
    if n == 1:
        return [(order,)]
    out = []
    for first in range(order, -1, -1):
        for rest in multi_indices(n - 1, order - first):
            out.append((first,) + rest)
    return sorted(out)


def bump(alpha: Sequence[int], a: int) -> tuple:
    """alpha + e_a for a 0-based axis a."""
    return tuple(v + 1 if k == a else v for k, v in enumerate(alpha))


@dataclass(frozen=True)
class JetSpace:
    n: int
    m: int
    r: int = 1

    def __post_init__(self):
        if self.n < 1 or self.m < 1 or self.r < 0:
            raise ValueError("need n >= 1, m >= 1, r >= 0")

    def with_order(self, r: int) -> "JetSpace":
        return JetSpace(self.n, self.m, r)

    @property
    def x_names(self) -> tuple:
        return ("x",) if self.n == 1 else tuple(f"x{a}" for a in range(1, self.n + 1))

    @property
    def u_names(self) -> tuple:
        return ("u",) if self.m == 1 else tuple(f"u{i}" for i in range(1, self.m + 1))

    @property
    def base_names(self) -> tuple:
        return self.x_names + self.u_names

    def x(self, a: int) -> Symbol:
        """Independent variable for 0-based axis ``a``."""
        return Symbol(self.x_names[a])

    def u(self, i: int) -> Symbol:
        return Symbol(self.u_names[i])

    def coord_name(self, i: int, alpha: Sequence[int]) -> str:
        """Name of u^i_alpha (0-based dependent index ``i``)."""
        alpha = tuple(alpha)
        if len(alpha) != self.n:
            raise ValueError(f"multi-index {alpha} has wrong length for n={self.n}")
        if sum(alpha) == 0:
            return self.u_names[i]
        return f"u{i + 1}[{','.join(str(v) for v in alpha)}]"

    def coord(self, i: int, alpha: Sequence[int]) -> Symbol:
        return Symbol(self.coord_name(i, alpha))

    def first_order(self, i: int, c: int) -> Symbol:
        """The coordinate u^i_{x_c} (0-based indices)."""
        return self.coord(i, bump((0,) * self.n, c))

    def parse_coord(self, name: str):
        """(i, alpha) for a dependent or derivative coordinate name, else None."""
        if name in self.u_names:
            return self.u_names.index(name), (0,) * self.n
        if self.m == 1 and name == "u1":
            return 0, (0,) * self.n
        mt = _COORD.match(name)
        if not mt:
            return None
        i = int(mt.group(1)) - 1
        alpha = tuple(int(v) for v in mt.group(2).split(","))
        if not (0 <= i < self.m) or len(alpha) != self.n:
            return None
        return i, alpha

    def axis_of(self, name: str):
        if name in self.x_names:
            return self.x_names.index(name)
        if self.n == 1 and name == "x1":
            return 0
        return None

    def jet_order(self, e: Expr) -> int:
        """Largest derivative order of any jet coordinate in ``e`` (0 if none)."""
        best = 0
        for s in e.free_symbols:
            pc = self.parse_coord(s)
            if pc is not None:
                best = max(best, sum(pc[1]))
        return best

    def coordinates(self, up_to: int | None = None) -> list:
        """x's, then u^i_alpha ordered by (|alpha|, i, lexicographic alpha)."""
        up_to = self.r if up_to is None else up_to
        if up_to > self.r:
            raise OrderExceeded(f"order {up_to} exceeds jet order {self.r}")
        names = list(self.x_names)
        for k in range(up_to + 1):
            for i in range(self.m):
                for alpha in multi_indices(self.n, k):
                    names.append(self.coord_name(i, alpha))
        return names

    def coordinate_count(self, up_to: int | None = None) -> int:
        up_to = self.r if up_to is None else up_to
        return self.n + self.m * comb(self.n + up_to, up_to)

    def canonical(self, e: Expr) -> Expr:
        """Rewrite the aliases ``x1`` (n=1) and ``u1`` (m=1) to ``x``/``u``."""
        from .expr import substitute
        table = {}
        if self.n == 1 and "x1" in e.free_symbols:
            table["x1"] = Symbol("x")
        if self.m == 1 and "u1" in e.free_symbols:
            table["u1"] = Symbol("u")
        return substitute(e, table) if table else e


def total_derivative(e: Expr, a: int, js: JetSpace) -> Expr:
    """D_{x_a} e for 0-based axis ``a``.

    Only the symbols actually present in ``e`` contribute; other symbols
    (parameters) are treated as constants.
    """
    terms = []
    xa = js.x_names[a]
    for s in sorted(e.free_symbols):
        if s == xa:
            terms.append(diff(e, s))
            continue
        pc = js.parse_coord(s)
        if pc is None:
            continue
        i, alpha = pc
        if sum(alpha) >= js.r:
            raise OrderExceeded(
                f"{s} has order {sum(alpha)}; total derivative needs jet order > {js.r}")
        terms.append(mul(diff(e, s), js.coord(i, bump(alpha, a))))
    return add(*terms)


def determinant(rows: Sequence[Sequence[Expr]]) -> Expr:
    """Cofactor expansion along the first row (O(p!) terms; p <= 6)."""
    p = len(rows)
    if p == 0:
        return ONE
    if p > MAX_JACOBIAN:
        raise ValueError(f"cofactor determinant capped at {MAX_JACOBIAN}x{MAX_JACOBIAN}")
    if p == 1:
        return rows[0][0]
    if p == 2:
        return add(mul(rows[0][0], rows[1][1]), neg(mul(rows[0][1], rows[1][0])))
    terms = []
    for j in range(p):
        entry = rows[0][j]
        if entry == ZERO:
            continue
        minor = [list(r[:j]) + list(r[j + 1:]) for r in rows[1:]]
        t = mul(entry, determinant(minor))
        terms.append(t if j % 2 == 0 else neg(t))
    return add(*terms)


def total_jacobian(funcs: Sequence[Expr], axes: Sequence[int], js: JetSpace) -> Expr:
    """det[D_{x_{axes[j]}} funcs[i]], the Jacobian of total derivatives."""
    if len(funcs) != len(axes):
        raise ValueError("need as many axes as functions")
    if len(set(axes)) != len(axes):
        raise ValueError("axes must be distinct")
    rows = [[total_derivative(f, a, js) for a in axes] for f in funcs]
    return determinant(rows)

