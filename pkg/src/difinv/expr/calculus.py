"""Structural calculus on expression trees: derivatives, substitution,
expansion and polynomial-degree analysis."""

from __future__ import annotations

from functools import lru_cache
from itertools import product as cartesian
from typing import Iterable, Mapping

from .core import (
    HALF, MINUS_ONE, ONE, ZERO, Const, Expr, Func, Neg, Power, Product, Sum, Symbol,
    add, as_expr, func, mul, neg, power, rebuild,
)


@lru_cache(maxsize=200_000)
def _diff(e: Expr, s: str) -> Expr:
    if s not in e.free_symbols:
        return ZERO
    if isinstance(e, Symbol):
        return ONE
    if isinstance(e, Sum):
        return add(*(_diff(t, s) for t in e.terms))
    if isinstance(e, Neg):
        return neg(_diff(e.operand, s))
    if isinstance(e, Product):
        parts = []
        fs = e.factors
        for i, f in enumerate(fs):
            if s in f.free_symbols:
                parts.append(mul(*fs[:i], _diff(f, s), *fs[i + 1:]))
        return add(*parts)
    if isinstance(e, Power):
        b, x = e.base, e.exponent
        db = _diff(b, s)
        if s not in x.free_symbols:
            return mul(x, power(b, add(x, MINUS_ONE)), db)
        dx = _diff(x, s)
        return mul(e, add(mul(dx, func("ln", b)), mul(x, db, power(b, MINUS_ONE))))
    if isinstance(e, Func):
        a = e.arg
        da = _diff(a, s)
        k = e.kind
        if k == "exp":
            outer = e
        elif k == "ln":
            outer = power(a, MINUS_ONE)
        elif k == "sin":
            outer = func("cos", a)
        elif k == "cos":
            outer = neg(func("sin", a))
        elif k == "tan":
            outer = add(ONE, power(e, Const(2)))
        elif k == "arcsin":
            outer = power(func("sqrt", add(ONE, neg(power(a, Const(2))))), MINUS_ONE)
        elif k == "arctan":
            outer = power(add(ONE, power(a, Const(2))), MINUS_ONE)
        elif k == "sqrt":
            outer = mul(HALF, power(e, MINUS_ONE))
        else:  # pragma: no cover - guarded by Func()
            raise ValueError(k)
        return mul(outer, da)
    raise TypeError(type(e))


def diff(e: Expr, s) -> Expr:
    """Exact partial derivative of ``e`` with respect to symbol ``s``."""
    return _diff(e, s.name if isinstance(s, Symbol) else s)


def gradient(e: Expr, symbols: Iterable[str]) -> list:
    return [diff(e, s) for s in symbols]


def substitute(e: Expr, mapping: Mapping) -> Expr:
    """Simultaneous substitution of symbols (by name) with expressions."""
    if not mapping:
        return e
    table = {(k.name if isinstance(k, Symbol) else k): as_expr(v) for k, v in mapping.items()}
    names = frozenset(table)
    cache: dict = {}

    def go(node: Expr) -> Expr:
        if not (node.free_symbols & names):
            return node
        hit = cache.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Symbol):
            out = table[node.name]
        else:
            out = rebuild(node, [go(c) for c in node.children])
        cache[node] = out
        return out

    return go(e)


_MAX_EXPAND_POWER = 8


@lru_cache(maxsize=50_000)
def expand(e: Expr) -> Expr:
    """Distribute products over sums and small positive integer powers of sums."""
    if isinstance(e, (Const, Symbol)):
        return e
    kids = [expand(c) for c in e.children]
    if isinstance(e, Product):
        return _distribute(kids)
    if isinstance(e, Power):
        b, x = kids
        if isinstance(b, Sum) and isinstance(x, Const) and x.is_integer and 1 < x.value <= _MAX_EXPAND_POWER:
            return _distribute([b] * int(x.value))
        p = power(b, x)
        return expand(p) if isinstance(p, Product) and p != e else p
    return rebuild(e, kids)


def _distribute(factors) -> Expr:
    options = []
    for f in factors:
        if isinstance(f, Sum):
            options.append(f.terms)
        elif isinstance(f, Neg) and isinstance(f.operand, Sum):
            options.append(tuple(neg(t) for t in f.operand.terms))
        else:
            options.append((f,))
    terms = [mul(*combo) for combo in cartesian(*options)]
    result = add(*terms)
    # products of powers may have produced new sums, e.g. sqrt(a+b)^2
    if any(isinstance(t, Product) and any(isinstance(f, Sum) for f in t.factors) for t in _terms(result)):
        again = add(*(expand(t) if isinstance(t, Product) else t for t in _terms(result)))
        if again != result:
            return again
    return result


def _terms(e: Expr):
    return e.terms if isinstance(e, Sum) else (e,)


def polynomial_degree(e: Expr, symbols: Iterable[str]):
    """Total degree of ``e`` as a polynomial in ``symbols``.

    Returns ``None`` if ``e`` is not polynomial in them (a symbol under a
    function, in an exponent, or raised to a negative/fractional power).
    """
    syms = frozenset(symbols)
    return _degree(e, syms)


def _degree(e: Expr, syms: frozenset):
    if not (e.free_symbols & syms):
        return 0
    if isinstance(e, Symbol):
        return 1
    if isinstance(e, Neg):
        return _degree(e.operand, syms)
    if isinstance(e, Sum):
        ds = [_degree(t, syms) for t in e.terms]
        return None if None in ds else max(ds)
    if isinstance(e, Product):
        ds = [_degree(f, syms) for f in e.factors]
        return None if None in ds else sum(ds)
    if isinstance(e, Power):
        x = e.exponent
        if x.free_symbols & syms or not (isinstance(x, Const) and x.is_integer and x.value >= 0):
            return None
        d = _degree(e.base, syms)
        return None if d is None else d * int(x.value)
    return None


def split_fraction(e: Expr):
    """Split ``e`` into (numerator, denominator) along negative integer powers."""
    if isinstance(e, Neg):
        n, d = split_fraction(e.operand)
        return neg(n), d
    factors = e.factors if isinstance(e, Product) else (e,)
    nums, dens = [], []
    for f in factors:
        if isinstance(f, Power) and isinstance(f.exponent, Const) and f.exponent.is_integer and f.exponent.value < 0:
            dens.append(power(f.base, Const(-f.exponent.value)))
        else:
            nums.append(f)
    return mul(*nums) if nums else ONE, mul(*dens) if dens else ONE


def is_fractional_linear(e: Expr, symbols: Iterable[str]) -> bool:
    """True if numerator and denominator both have total degree <= 1 in ``symbols``."""
    syms = frozenset(symbols)
    n, d = split_fraction(e)
    dn, dd = _degree(n, syms), _degree(d, syms)
    return dn is not None and dd is not None and dn <= 1 and dd <= 1
