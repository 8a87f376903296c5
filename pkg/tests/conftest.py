from fractions import Fraction

import numpy as np
import pytest
from hypothesis import reject, strategies as st

from difinv.errors import DomainError
from difinv.expr import Const, Func, Neg, Power, Product, Sum, Symbol, normalize

# Symbols of a two-variable, one-function jet space up to first order, plus a
# free parameter.  Every tree drawn below evaluates finitely on [0.5, 1.5].
TREE_SYMBOLS = ("x1", "x2", "u", "u1[1,0]", "u1[0,1]", "a")

_leaf = st.one_of(
    st.sampled_from(TREE_SYMBOLS).map(Symbol),
    st.integers(-3, 3).map(Const),
    st.sampled_from([Fraction(1, 2), Fraction(-2, 3), Fraction(5, 4)]).map(Const),
)


def _extend(children):
    pair = st.lists(children, min_size=2, max_size=3)
    return st.one_of(
        pair.map(Sum),
        pair.map(Product),
        children.map(Neg),
        st.tuples(children, st.sampled_from([Const(2), Const(-1), Const(3)])).map(lambda t: Power(*t)),
        st.tuples(st.sampled_from(["sin", "cos", "arctan"]), children).map(lambda t: Func(*t)),
        children.map(lambda c: Func("exp", Func("sin", c))),
        children.map(lambda c: Func("sqrt", Sum((Const(1), Power(c, Const(2)))))),
    )


def tree_depth(e) -> int:
    return 1 + max((tree_depth(c) for c in e.children), default=0)


# raw (unnormalized) trees of depth <= 8
raw_trees = st.recursive(_leaf, _extend, max_leaves=10).filter(lambda t: tree_depth(t) <= 8)


def normalized(tree):
    """normalize(tree), discarding draws that divide by a constant zero."""
    try:
        return normalize(tree)
    except DomainError:
        reject()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_equivalence(N: int, rng):
    """A random (F, H) in symbols I1..IN with dF/dI unit triangular up to scale.

    F_q = k_q I_q + g_q(I_1..I_{q-1}) always has a nonsingular Jacobian, so
    every draw is a valid equivalence transform.
    """
    from difinv.expr import parse

    def c():
        return f"({rng.integers(1, 5) * rng.choice([-1, 1])}/{rng.integers(1, 5)})"

    F = []
    for q in range(1, N + 1):
        lower = " + ".join(f"{c()}*sin(I{p})" for p in range(1, q)) or "0"
        F.append(parse(f"{c()}*I{q} + {lower}"))
    H = parse(" + ".join(f"{c()}*I{q}^2" for q in range(1, N + 1)))
    return F, H
