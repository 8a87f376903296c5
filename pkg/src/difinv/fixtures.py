"""Built-in problems: the worked examples, a few trivial fields and the
synthetic n = 2 pushforward family.

The pushforward family starts from the straightened field d/dy2 on
(y1, y2, v) and moves it through an explicit invertible polynomial change of
variables

    s1 = y1 + a1 v^2,         s2 = v + a2 s1^2,
    x1 = y2 + a3 s1 s2 + a4 s2,
    x2 = s1 + b1 x1^2 + b3 x1 s2,
    u  = s2 + b2 x1 x2,

whose inverse is again explicit.  Hence I = (y1, v) and J = y2, written in
(x1, x2, u), are exact invariants and companion of the pushed-forward field
Q = d/dx1 + xi2 d/dx2 + b2 (x2 + x1 xi2) d/du, xi2 = 2 b1 x1 + b3 s2, by
construction.  The b3 term makes xi depend on u, so the Riccati systems of
these fixtures are genuinely quadratic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .expr import DomainSampler, Expr, parse, substitute
from .invariants import UniversalInvariant
from .jet import JetSpace
from .prolong import VectorField
from .quadrature import LevelSetParametrization
from .riccati import RiccatiSolution


@dataclass
class Fixture:
    name: str
    Q: VectorField
    I: tuple
    J: Optional[Expr]
    level_set: Optional[LevelSetParametrization] = None
    antiderivative: Optional[Expr] = None
    sampler: DomainSampler = field(default_factory=DomainSampler)
    level_sampler: DomainSampler = field(default_factory=DomainSampler)
    integrand: Optional[Expr] = None
    displayed: Optional[RiccatiSolution] = None
    displayed_domain: dict = field(default_factory=dict)
    # a simpler first-order invariant and the order-0 invariant factor with
    # reduced * factor == D_x I / D_x J
    reduced: Optional[Expr] = None
    reduction_factor: Optional[Expr] = None
    # base point and targets for flow-time quadrature
    flow: Optional[dict] = None

    @property
    def js(self) -> JetSpace:
        return self.Q.js

    @property
    def ui(self) -> UniversalInvariant:
        if self.J is None:
            raise ValueError(f"fixture {self.name} has no closed-form J")
        return UniversalInvariant(self.Q, self.I, self.J, self.level_set)


def _field(n, m, xi, eta):
    return VectorField.from_strings(JetSpace(n, m, 1), xi, eta)


def translation() -> Fixture:
    return Fixture(
        "translation",
        _field(1, 1, ["1"], ["0"]),
        (parse("u"),), parse("x"),
        LevelSetParametrization.from_strings("x", {"u": "C"}, ["C"]),
        parse("z"),
    )


def linear_field() -> Fixture:
    """Q = d/dx + x u d/du (xi_u = 0: the Riccati equation is linear)."""
    return Fixture(
        "linear",
        _field(1, 1, ["1"], ["x*u"]),
        (parse("u*exp(-x^2/2)"),), parse("x"),
        LevelSetParametrization.from_strings("x", {"u": "C*exp(z^2/2)"}, ["C"]),
        parse("z"),
    )


def example1() -> Fixture:
    """Rotations Q = u d/dx - x d/du."""
    return Fixture(
        "example1",
        _field(1, 1, ["u"], ["-x"]),
        (parse("sqrt(x^2+u^2)"),), parse("arcsin(x/sqrt(x^2+u^2))"),
        LevelSetParametrization.from_strings("x", {"u": "sqrt(C^2-z^2)"}, ["C"]),
        parse("arcsin(z/C)"),
        DomainSampler({"x": (0.5, 1.5), "u": (0.5, 1.5), "u1[1]": (-1.0, 1.0)}),
        DomainSampler({"z": (0.5, 1.5), "C": (0.8, 2.0)}),
        reduced=parse("(x+u*u1[1])/(-u+x*u1[1])"),
        reduction_factor=parse("-sqrt(x^2+u^2)"),
    )


def example2() -> Fixture:
    """Q = exp(-x-u) (d/dx + u d/du)."""
    return Fixture(
        "example2",
        _field(1, 1, ["exp(-x-u)"], ["u*exp(-x-u)"]),
        (parse("u*exp(-x)"),), parse("exp(x+u)/u"),
        LevelSetParametrization.from_strings("x", {"u": "C*exp(z)"}, ["C"]),
        parse("exp(C*exp(z))/C"),
        DomainSampler({"x": (0.0, 1.0), "u": (0.5, 1.5)}),
        DomainSampler({"z": (0.0, 1.0), "C": (0.5, 1.5)}),
        displayed=RiccatiSolution.from_strings(
            {"u1[1]": "C*exp(z) - C^2*exp(2*z)/(C*exp(z) - 1 + Ch*exp(-C*exp(z)))"}, ["Ch"]),
        # the denominator stays >= ln(Ch) > 0 for Ch > 1
        displayed_domain={"Ch": (1.5, 3.0)},
        reduced=parse("(u1[1]-u)/(u+u*u1[1]-u1[1])*exp(-u)"),
        reduction_factor=parse("u^2*exp(-2*x)"),
    )


def example3(k=2) -> Fixture:
    """Q = x u (x d/dx + k u d/du) with a fixed numeric k."""
    k = Fraction(k)
    ks = f"({k})"
    if k == -1:
        J, anti = "ln(x)/(x*u)", "ln(z)/C"
        shown = "-(C/z^2)*(1 + 1/(Ch - ln(z)))"
    else:
        J = f"-1/(({k}+1)*x*u)"
        anti = f"-z^(-({k}+1))/(({k}+1)*C)"
        shown = f"C*z^({ks}-1)*({ks} - ({ks}+1)/(1 + Ch*z^({ks}+1)))"
    return Fixture(
        f"example3[k={k}]",
        _field(1, 1, ["x^2*u"], [f"{ks}*x*u^2"]),
        (parse(f"u*x^(-{ks})"),), parse(J),
        LevelSetParametrization.from_strings("x", {"u": f"C*z^{ks}"}, ["C"]),
        parse(anti),
        DomainSampler({"x": (0.5, 1.5), "u": (0.5, 1.5)}),
        DomainSampler({"z": (0.5, 1.5), "C": (0.5, 1.5)}),
        displayed=RiccatiSolution.from_strings({"u1[1]": shown}, ["Ch"]),
        displayed_domain={"Ch": (1.0, 2.0) if k == -1 else (0.5, 1.5)},
    )


def particular_example3(k) -> RiccatiSolution:
    """u_x = k C x^(k-1)."""
    ks = f"({Fraction(k)})"
    return RiccatiSolution.from_strings({"u1[1]": f"{ks}*C*z^({ks}-1)"})


def example4() -> Fixture:
    """n = 1, m = 2: Q = exp(-x-u1-u2)(d/dx + u1 d/du1 + u2 d/du2)."""
    return Fixture(
        "example4",
        _field(1, 2, ["exp(-x-u1-u2)"], ["u1*exp(-x-u1-u2)", "u2*exp(-x-u1-u2)"]),
        (parse("u1*exp(-x)"), parse("u2*exp(-x)")), parse("exp(x+u1+u2)/(u1+u2)"),
        LevelSetParametrization.from_strings("x", {"u1": "C1*exp(z)", "u2": "C2*exp(z)"}, ["C1", "C2"]),
        parse("exp((C1+C2)*exp(z))/(C1+C2)"),
        DomainSampler({"x": (0.0, 1.0), "u1": (0.25, 0.75), "u2": (0.25, 0.75)}),
        DomainSampler({"z": (0.0, 1.0), "C1": (0.25, 0.75), "C2": (0.25, 0.75)}),
        displayed=RiccatiSolution.from_strings({
            "u1[1]": f"exp(z)*C1 + {_EX4_FACTOR}*Ct1",
            "u2[1]": f"exp(z)*C2 + {_EX4_FACTOR}*Ct2",
        }, ["Ct1", "Ct2"]),
        displayed_domain={"Ct1": (-2e-3, 2e-3), "Ct2": (-2e-3, 2e-3)},
    )


_EX4_J = "(exp((C1+C2)*exp(z))/(C1+C2))"
_EX4_FACTOR = (f"(C1+C2)*exp(2*z)*{_EX4_J}"
               f"/(1 - (Ct1+Ct2)*(exp(z) - (C1+C2)^(-1))*{_EX4_J})")


def example5() -> Fixture:
    """n = 1, m = 2: Q = exp(u1+u2)(d/dx + u2 d/du1 - u1 d/du2).

    J has no elementary form; ``integrand`` is 1/xi on the level set and J
    is its integral from z = 0.
    """
    return Fixture(
        "example5",
        _field(1, 2, ["exp(u1+u2)"], ["u2*exp(u1+u2)", "-u1*exp(u1+u2)"]),
        (parse("u1*cos(x) - u2*sin(x)"), parse("u1*sin(x) + u2*cos(x)")), None,
        LevelSetParametrization.from_strings(
            "x", {"u1": "C1*cos(z) + C2*sin(z)", "u2": "-C1*sin(z) + C2*cos(z)"}, ["C1", "C2"]),
        None,
        DomainSampler({"x": (0.0, 1.0), "u1": (0.25, 0.75), "u2": (0.25, 0.75)}),
        DomainSampler({"z": (0.0, 1.0), "C1": (0.25, 0.75), "C2": (0.25, 0.75)}),
        integrand=parse(_EX5_G),
        displayed=RiccatiSolution.from_strings({
            "u1[1]": f"-C1*sin(z) + C2*cos(z) + {_EX5_G}/(1 - Ct1*J_C1 - Ct2*J_C2)*(Ct1*cos(z) + Ct2*sin(z))",
            "u2[1]": f"-C1*cos(z) - C2*sin(z) + {_EX5_G}/(1 - Ct1*J_C1 - Ct2*J_C2)*(-Ct1*sin(z) + Ct2*cos(z))",
        }, ["Ct1", "Ct2"], {"J_C1": f"-cos(z)*{_EX5_G} + sin(z)*{_EX5_G}",
                            "J_C2": f"-cos(z)*{_EX5_G} - sin(z)*{_EX5_G}"}),
        displayed_domain={"Ct1": (-1e-2, 1e-2), "Ct2": (-1e-2, 1e-2)},
    )


_EX5_G = "exp(-(C1+C2)*cos(z) - (C2-C1)*sin(z))"


def _rand_coef(rng, denom=4, span=2):
    v = 0
    while v == 0:
        v = int(rng.integers(-span, span + 1))
    return Fraction(v, denom)


def pushforward(seed: int = 1, zero: bool = False) -> Fixture:
    """Synthetic n = 2, m = 1 fixture; ``zero`` gives the rectified d/dx1 itself."""
    rng = np.random.default_rng(seed)
    names = ("a1", "a2", "a3", "a4", "b1", "b2", "b3")
    coef = {k: (Fraction(0) if zero else _rand_coef(rng)) for k in names}
    c = {k: f"({v})" for k, v in coef.items()}
    # inverse map: (x1, x2, u) -> (y1, y2, v)
    s2 = parse(f"u - {c['b2']}*x1*x2")
    s1 = substitute(parse(f"x2 - {c['b1']}*x1^2 - {c['b3']}*x1*s2"), {"s2": s2})
    S = {"s1": s1, "s2": s2}
    v = substitute(parse(f"s2 - {c['a2']}*s1^2"), S)
    y1 = substitute(parse(f"s1 - {c['a1']}*vv^2"), dict(S, vv=v))
    y2 = substitute(parse(f"x1 - {c['a3']}*s1*s2 - {c['a4']}*s2"), S)
    xi2 = substitute(parse(f"2*{c['b1']}*x1 + {c['b3']}*s2"), S)
    Q = VectorField(JetSpace(2, 1, 1), (parse("1"), xi2),
                    (substitute(parse(f"{c['b2']}*(x2 + x1*xi2)"), {"xi2": xi2}),))
    # level set I = (C1, C2) parametrized by z = x1
    P1 = parse(f"C1 + {c['a1']}*C2^2")
    P2 = substitute(parse(f"C2 + {c['a2']}*p1^2"), {"p1": P1})
    x2 = substitute(parse(f"p1 + {c['b1']}*z^2 + {c['b3']}*z*p2"), {"p1": P1, "p2": P2})
    u = substitute(parse(f"p2 + {c['b2']}*z*xx2"), {"p2": P2, "xx2": x2})
    ls = LevelSetParametrization("x1", {"x2": x2, "u": u}, ("C1", "C2"))
    # J = y2 on the level set is z - a3 s1 s2 - a4 s2 with s1, s2 constant there
    anti = substitute(parse(f"z - {c['a3']}*p1*p2 - {c['a4']}*p2"), {"p1": P1, "p2": P2})
    return Fixture(
        f"pushforward[{seed}]" if not zero else "rectified2",
        Q, (y1, v), y2, ls, anti,
        DomainSampler({}),
        DomainSampler({"z": (0.5, 1.5), "C1": (0.5, 1.5), "C2": (0.5, 1.5)}),
    )


# Seeds whose frame determinant D(y1, y2)/D(x1, x2) stays away from zero on
# the default jet box and whose dv/du stays away from zero on the level-set
# box.  Most seeds cross one of these loci, and then either the invariant
# derivations or the first-order coordinates along the level sets blow up.
PUSHFORWARD_SEEDS = (1, 11, 30)


def builtin_examples() -> dict:
    return {
        "1": [example1()],
        "2": [example2()],
        "3": [example3(2), example3(-1)],
        "4": [example4()],
        "5": [example5()],
    }


def ui_fixtures() -> list:
    """Every fixture with a closed-form universal invariant and J."""
    return [translation(), linear_field(), example1(), example2(), example3(2), example3(-1),
            example4()] + [pushforward(s) for s in PUSHFORWARD_SEEDS]


def n1_fixtures() -> list:
    return [f for f in ui_fixtures() if f.js.n == 1]


def by_name(name: str) -> Fixture:
    for group in builtin_examples().values():
        for f in group:
            if f.name == name:
                return f
    for f in ui_fixtures() + [pushforward(zero=True)]:
        if f.name == name:
            return f
    raise KeyError(name)

