"""Symbolic expression engine: parsing, normalization, calculus, evaluation."""

from .calculus import (
    diff, expand, gradient, is_fractional_linear, polynomial_degree, split_fraction, substitute,
)
from .core import (
    FUNC_KINDS, MINUS_ONE, ONE, ZERO, Const, Expr, Func, Neg, Power, Product, Sum, Symbol,
    add, arcsin, arctan, as_expr, cos, div, exp, func, ln, mul, neg, node_count, normalize,
    num, power, render, sin, sqrt, sub, sym, tan,
)
from .numeric import (
    BACKEND, DomainSampler, Program, compare_numeric, compile_expr, equivalent_numeric, evaluate,
    evaluate_many, make_rng, numeric_rank, sample_points,
)
from .parser import parse, tokenize

__all__ = [
    "BACKEND", "FUNC_KINDS", "MINUS_ONE", "ONE", "ZERO", "Const", "DomainSampler", "Expr", "Func",
    "Neg", "Power", "Product", "Program", "Sum", "Symbol", "add", "arcsin", "arctan", "as_expr",
    "compare_numeric", "compile_expr", "cos", "diff", "div", "equivalent_numeric", "evaluate",
    "evaluate_many", "exp", "expand", "func", "gradient", "is_fractional_linear", "ln", "make_rng",
    "mul", "neg", "node_count", "normalize", "num", "numeric_rank", "parse", "polynomial_degree",
    "power", "render", "sample_points", "sin", "split_fraction", "sqrt", "sub", "substitute", "sym",
    "tan", "tokenize",
]
