"""Immutable expression trees, the normalizer and the renderer.

Canonical form
--------------
Every public constructor (:func:`add`, :func:`mul`, :func:`power`,
:func:`neg`, :func:`func`) returns a normalized tree, assuming its arguments
are normalized.  The normal form is:

* sums and products are flattened; numeric subterms are folded (exact
  ``Fraction`` arithmetic for rationals, ``float`` once a float is involved);
* like terms of a sum are collected (``2*x + 3*x -> 5*x``) and identical
  bases of a product are collected by adding exponents (``x*x -> x^2``);
* a product carries at most one numeric coefficient, always positive and
  stored first; the sign lives in a single enclosing :class:`Neg`;
* ``Neg`` never wraps a number, another ``Neg`` or a ``Sum``;
* integer powers are distributed over products and merged into powers;
  ``sqrt(a)^(2k)`` becomes ``a^k``.

Operand order is the total order given by :func:`sort_key`: node kind first
(Const < Symbol < Neg < Power < Product < Sum < Func), then symbol name or
numeric value, then children lexicographically.  Sum terms are ordered by the
key of their sign-stripped, coefficient-stripped monomial so that ``x - y``
and ``-y + x`` agree.  This order is part of the stable output format.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import reduce
from typing import Iterable, Union

from ..errors import DomainError

Number = Union[Fraction, float]

FUNC_KINDS = ("exp", "ln", "sin", "cos", "tan", "arcsin", "arctan", "sqrt")

_KIND_RANK = {"Const": 0, "Symbol": 1, "Neg": 2, "Power": 3, "Product": 4, "Sum": 5, "Func": 6}


class Expr:
    """Base class of all expression nodes.  Instances are immutable."""

    __slots__ = ("_key", "_hash", "_free")

    def _init_key(self, key):
        object.__setattr__(self, "_key", key)
        object.__setattr__(self, "_hash", hash(key))
        object.__setattr__(self, "_free", None)

    def __setattr__(self, name, value):
        raise AttributeError("Expr nodes are immutable")

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return isinstance(other, Expr) and self._hash == other._hash and self._key == other._key

    def __ne__(self, other):
        return not self.__eq__(other)

    @property
    def key(self):
        return self._key

    @property
    def children(self) -> tuple:
        return ()

    @property
    def free_symbols(self) -> frozenset:
        free = self._free
        if free is None:
            free = frozenset().union(*(c.free_symbols for c in self.children))
            object.__setattr__(self, "_free", free)
        return free

    def __repr__(self):
        return f"{type(self).__name__}({render(self)})"

    def __str__(self):
        return render(self)

    # operator sugar, convenient in tests and fixtures
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return mul(self, power(as_expr(other), Const(-1)))

    def __rtruediv__(self, other):
        return mul(as_expr(other), power(self, Const(-1)))

    def __pow__(self, other):
        return power(self, as_expr(other))

    def __neg__(self):
        return neg(self)


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        if isinstance(value, bool):
            raise TypeError("booleans are not numbers here")
        if isinstance(value, int):
            value = Fraction(value)
        elif isinstance(value, float):
            if not math.isfinite(value):
                raise ValueError("constants must be finite")
        elif not isinstance(value, Fraction):
            raise TypeError(f"unsupported constant {value!r}")
        object.__setattr__(self, "value", value)
        if isinstance(value, Fraction):
            self._init_key((0, float(value), "q", value.numerator, value.denominator))
        else:
            self._init_key((0, value, "f", 0, 0))

    @property
    def free_symbols(self):
        return frozenset()

    @property
    def is_integer(self) -> bool:
        return isinstance(self.value, Fraction) and self.value.denominator == 1


class Symbol(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        object.__setattr__(self, "name", name)
        self._init_key((1, name))
        object.__setattr__(self, "_free", frozenset((name,)))


class Neg(Expr):
    __slots__ = ("operand",)

    def __init__(self, operand: Expr):
        object.__setattr__(self, "operand", operand)
        self._init_key((2, operand.key))

    @property
    def children(self):
        return (self.operand,)


class Power(Expr):
    __slots__ = ("base", "exponent")

    def __init__(self, base: Expr, exponent: Expr):
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exponent", exponent)
        self._init_key((3, base.key, exponent.key))

    @property
    def children(self):
        return (self.base, self.exponent)


class Product(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: Iterable[Expr]):
        factors = tuple(factors)
        object.__setattr__(self, "factors", factors)
        self._init_key((4, tuple(f.key for f in factors)))

    @property
    def children(self):
        return self.factors


class Sum(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[Expr]):
        terms = tuple(terms)
        object.__setattr__(self, "terms", terms)
        self._init_key((5, tuple(t.key for t in terms)))

    @property
    def children(self):
        return self.terms


class Func(Expr):
    __slots__ = ("kind", "arg")

    def __init__(self, kind: str, arg: Expr):
        if kind not in FUNC_KINDS:
            raise ValueError(f"unknown function kind {kind!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "arg", arg)
        self._init_key((6, kind, arg.key))

    @property
    def children(self):
        return (self.arg,)


def sort_key(e: Expr):
    return e.key


ZERO = Const(0)
ONE = Const(1)
MINUS_ONE = Const(-1)
HALF = Const(Fraction(1, 2))


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, str):
        return Symbol(value)
    return Const(value)


def sym(name: str) -> Symbol:
    return Symbol(name)


def num(value) -> Const:
    return Const(value)


def _is_num(e: Expr) -> bool:
    return isinstance(e, Const)


def _fold_add(a: Number, b: Number) -> Number:
    if isinstance(a, float) or isinstance(b, float):
        return float(a) + float(b)
    return a + b


def _fold_mul(a: Number, b: Number) -> Number:
    if isinstance(a, float) or isinstance(b, float):
        return float(a) * float(b)
    return a * b


def _is_zero(v: Number) -> bool:
    return v == 0


def _is_one(v: Number) -> bool:
    return v == 1 and isinstance(v, Fraction)


# --------------------------------------------------------------------------
# builders
# --------------------------------------------------------------------------

def neg(e: Expr) -> Expr:
    if isinstance(e, Const):
        return Const(-e.value)
    if isinstance(e, Neg):
        return e.operand
    if isinstance(e, Sum):
        return add(*(neg(t) for t in e.terms))
    return Neg(e)


def _split_term(t: Expr):
    """Return (coefficient, monomial) with monomial None for a pure number."""
    sign = 1
    while isinstance(t, Neg):
        sign = -sign
        t = t.operand
    if isinstance(t, Const):
        return (t.value if sign > 0 else -t.value), None
    if isinstance(t, Product) and isinstance(t.factors[0], Const):
        c = t.factors[0].value
        rest = t.factors[1:]
        mono = rest[0] if len(rest) == 1 else Product(rest)
        return (c if sign > 0 else -c), mono
    return Fraction(sign), t


def add(*terms: Expr) -> Expr:
    flat = []
    stack = list(reversed(terms))
    while stack:
        t = stack.pop()
        if isinstance(t, Sum):
            stack.extend(reversed(t.terms))
        else:
            flat.append(t)
    constant: Number = Fraction(0)
    groups: dict = {}
    order = []
    for t in flat:
        c, mono = _split_term(t)
        if mono is None:
            constant = _fold_add(constant, c)
            continue
        if mono in groups:
            groups[mono] = _fold_add(groups[mono], c)
        else:
            groups[mono] = c
            order.append(mono)
    out = []
    for mono in order:
        c = groups[mono]
        if _is_zero(c):
            continue
        if _is_one(c):
            term = mono
        elif c == -1 and isinstance(c, Fraction):
            term = Neg(mono)
        elif c > 0:
            term = _coef_times(c, mono)
        else:
            term = Neg(_coef_times(-c, mono))
        out.append((mono.key, c < 0, term))
    out.sort(key=lambda item: (item[0], item[1]))
    result = [item[2] for item in out]
    if not _is_zero(constant) or (isinstance(constant, float) and not result):
        result.insert(0, Const(constant))
    if not result:
        return ZERO
    if len(result) == 1:
        return result[0]
    return Sum(result)


def _coef_times(c: Number, mono: Expr) -> Expr:
    # c > 0, mono a normalized non-numeric monomial without a coefficient
    if isinstance(mono, Product):
        return Product((Const(c),) + mono.factors)
    return Product((Const(c), mono))


def _base_exp(f: Expr):
    if isinstance(f, Power):
        return f.base, f.exponent
    return f, ONE


def _is_exp(e: Expr) -> bool:
    return isinstance(e, Func) and e.kind == "exp"


def mul(*factors: Expr) -> Expr:
    coeff: Number = Fraction(1)
    sign = 1
    groups: dict = {}
    order = []
    exp_args = []
    stack = list(reversed(factors))
    while stack:
        f = stack.pop()
        if isinstance(f, Product):
            stack.extend(reversed(f.factors))
            continue
        if isinstance(f, Neg):
            sign = -sign
            stack.append(f.operand)
            continue
        if isinstance(f, Const):
            coeff = _fold_mul(coeff, f.value)
            continue
        b, ex = _base_exp(f)
        if _is_exp(b):
            # exp(a)^k exp(b) -> exp(k a + b): one exponential per product
            exp_args.append(b.arg if ex == ONE else mul(b.arg, ex))
            continue
        if b in groups:
            groups[b].append(ex)
        else:
            groups[b] = [ex]
            order.append(b)
    if _is_zero(coeff):
        return Const(coeff) if isinstance(coeff, float) else ZERO
    rebuilt = []
    again = False
    if exp_args:
        merged = func("exp", add(*exp_args))
        if isinstance(merged, Const):
            coeff = _fold_mul(coeff, merged.value)
        else:
            rebuilt.append(merged)
    for b in order:
        exps = groups[b]
        ex = exps[0] if len(exps) == 1 else add(*exps)
        p = power(b, ex) if len(exps) > 1 else (b if ex == ONE else Power(b, ex))
        if isinstance(p, Const):
            coeff = _fold_mul(coeff, p.value)
            continue
        if isinstance(p, (Product, Neg)):
            again = True
        rebuilt.append(p)
    if again:
        inner = mul(*rebuilt)
        res = mul(Const(coeff), inner) if not _is_one(coeff) else inner
        return neg(res) if sign < 0 else res
    if coeff < 0:
        coeff = -coeff
        sign = -sign
    rebuilt.sort(key=sort_key)
    if not rebuilt:
        res = Const(coeff)
        return Const(-coeff) if sign < 0 else res
    if _is_one(coeff):
        res = rebuilt[0] if len(rebuilt) == 1 else Product(rebuilt)
    else:
        res = Product([Const(coeff)] + rebuilt)
    # a lone surviving Sum must absorb the sign term by term
    return neg(res) if sign < 0 else res


def _int_value(e: Expr):
    if isinstance(e, Const) and e.is_integer:
        return int(e.value)
    return None


def power(base: Expr, exponent: Expr) -> Expr:
    n = _int_value(exponent)
    if n == 0:
        return ONE
    if n == 1:
        return base
    if isinstance(base, Const):
        b = base.value
        if b == 1 and isinstance(b, Fraction):
            return ONE
        if n is not None:
            if b == 0 and n < 0:
                raise DomainError("division by zero")
            if isinstance(b, Fraction):
                return Const(b ** n)
            return Const(float(b) ** n)
        if isinstance(exponent, Const) and (isinstance(b, float) or isinstance(exponent.value, float)) and b > 0:
            return Const(float(b) ** float(exponent.value))
        return Power(base, exponent)
    if _is_exp(base):
        return func("exp", mul(base.arg, exponent))
    if n is not None:
        if isinstance(base, Power):
            return power(base.base, mul(base.exponent, exponent))
        if isinstance(base, Product):
            return mul(*(power(f, exponent) for f in base.factors))
        if isinstance(base, Neg):
            inner = power(base.operand, exponent)
            return neg(inner) if n % 2 else inner
        if isinstance(base, Func) and base.kind == "sqrt" and n % 2 == 0:
            return power(base.arg, Const(n // 2))
    return Power(base, exponent)


_FOLD_FLOAT = {
    "exp": math.exp, "ln": math.log, "sin": math.sin, "cos": math.cos, "tan": math.tan,
    "arcsin": math.asin, "arctan": math.atan, "sqrt": math.sqrt,
}


def func(kind: str, arg: Expr) -> Expr:
    if kind not in FUNC_KINDS:
        raise ValueError(f"unknown function kind {kind!r}")
    if isinstance(arg, Const):
        v = arg.value
        if isinstance(v, float):
            try:
                r = _FOLD_FLOAT[kind](v)
            except (ValueError, OverflowError):
                return Func(kind, arg)
            if math.isfinite(r):
                return Const(r)
            return Func(kind, arg)
        if v == 0 and kind in ("sin", "tan", "arcsin", "arctan", "sqrt"):
            return ZERO
        if v == 0 and kind in ("exp", "cos"):
            return ONE
        if v == 1 and kind == "ln":
            return ZERO
        if v == 1 and kind == "sqrt":
            return ONE
    if kind == "ln" and isinstance(arg, Func) and arg.kind == "exp":
        return arg.arg
    return Func(kind, arg)


def exp(e) -> Expr:
    return func("exp", as_expr(e))


def ln(e) -> Expr:
    return func("ln", as_expr(e))


def sin(e) -> Expr:
    return func("sin", as_expr(e))


def cos(e) -> Expr:
    return func("cos", as_expr(e))


def tan(e) -> Expr:
    return func("tan", as_expr(e))


def arcsin(e) -> Expr:
    return func("arcsin", as_expr(e))


def arctan(e) -> Expr:
    return func("arctan", as_expr(e))


def sqrt(e) -> Expr:
    return func("sqrt", as_expr(e))


def div(a: Expr, b: Expr) -> Expr:
    return mul(a, power(b, MINUS_ONE))


def sub(a: Expr, b: Expr) -> Expr:
    return add(a, neg(b))


def rebuild(e: Expr, children) -> Expr:
    """Re-create a node of the same kind from new children, normalizing."""
    if isinstance(e, (Const, Symbol)):
        return e
    if isinstance(e, Neg):
        return neg(children[0])
    if isinstance(e, Power):
        return power(children[0], children[1])
    if isinstance(e, Product):
        return mul(*children)
    if isinstance(e, Sum):
        return add(*children)
    if isinstance(e, Func):
        return func(e.kind, children[0])
    raise TypeError(type(e))


def normalize(e: Expr) -> Expr:
    """Bottom-up rebuild through the normalizing builders (idempotent)."""
    if isinstance(e, (Const, Symbol)):
        return e
    return rebuild(e, [normalize(c) for c in e.children])


def node_count(e: Expr) -> int:
    return 1 + sum(node_count(c) for c in e.children)


def total(exprs: Iterable[Expr]) -> Expr:
    return reduce(lambda a, b: add(a, b), exprs, ZERO)


# --------------------------------------------------------------------------
# rendering
# --------------------------------------------------------------------------

_P_SUM, _P_PROD, _P_NEG, _P_POW, _P_ATOM = 1, 2, 3, 4, 5


def _render_const(v: Number):
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator), (_P_ATOM if v >= 0 else _P_NEG)
        return f"{v.numerator}/{v.denominator}", _P_PROD
    text = repr(v)
    return text, (_P_ATOM if v >= 0 else _P_NEG)


def _wrap(text_prec, min_prec):
    text, prec = text_prec
    return f"({text})" if prec < min_prec else text


def _render(e: Expr):
    if isinstance(e, Const):
        return _render_const(e.value)
    if isinstance(e, Symbol):
        return e.name, _P_ATOM
    if isinstance(e, Func):
        return f"{e.kind}({_render(e.arg)[0]})", _P_ATOM
    if isinstance(e, Neg):
        if isinstance(e.operand, Product):
            # "-a*b" reads back as (-a)*b, which normalizes to the same tree,
            # unless a is a parenthesized sum the minus would distribute into
            text = _render(e.operand)[0]
            if not text.startswith("("):
                return "-" + text, _P_PROD
        return "-" + _wrap(_render(e.operand), _P_POW), _P_NEG
    if isinstance(e, Power):
        n = _int_value(e.exponent)
        if n is not None and n < 0:
            return _render(Product((e,)))
        return _wrap(_render(e.base), _P_ATOM) + "^" + _wrap(_render(e.exponent), _P_POW), _P_POW
    if isinstance(e, Product):
        num_parts, den_parts = [], []
        for i, f in enumerate(e.factors):
            n = _int_value(f.exponent) if isinstance(f, Power) else None
            if n is not None and n < 0:
                den_parts.append(power(f.base, Const(-n)))
            else:
                num_parts.append(f)
        texts = []
        for i, f in enumerate(num_parts):
            texts.append(_wrap(_render(f), _P_PROD if i == 0 else _P_NEG))
        head = "*".join(texts) if texts else "1"
        if not den_parts:
            return head, _P_PROD
        if len(den_parts) == 1:
            den = _wrap(_render(den_parts[0]), _P_NEG)
        else:
            den = "(" + "*".join(_wrap(_render(f), _P_NEG) for f in den_parts) + ")"
        return f"{head}/{den}", _P_PROD
    if isinstance(e, Sum):
        out = []
        for i, t in enumerate(e.terms):
            if i > 0 and isinstance(t, Neg):
                out.append(" - " + _wrap(_render(t.operand), _P_PROD))
            elif i > 0 and isinstance(t, Const) and t.value < 0:
                out.append(" - " + _render_const(-t.value)[0])
            elif i > 0:
                out.append(" + " + _wrap(_render(t), _P_PROD))
            else:
                out.append(_wrap(_render(t), _P_PROD))
        return "".join(out), _P_SUM
    raise TypeError(type(e))


def render(e: Expr) -> str:
    """Deterministic, re-parseable text form of ``e``."""
    return _render(e)[0]
