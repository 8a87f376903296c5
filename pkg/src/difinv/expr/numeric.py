"""Guarded floating-point evaluation, domain sampling and numeric identity tests.

Expressions are compiled once into a postfix program (opcodes in
``_opcodes``) and run over a batch of points by ``eval_program``.  The
compiled Cython kernel is used when importable; otherwise, or when the
environment variable ``DIFINV_PURE_PYTHON`` is set, the pure-Python twin with
the identical contract is used.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from ..errors import DomainError, SamplingExhausted, UnboundSymbol
from . import _opcodes as opc
from .core import Const, Expr, Func, Neg, Power, Product, Sum, Symbol

if os.environ.get("DIFINV_PURE_PYTHON"):
    from ._evalkernel_py import eval_program as _eval_program
    BACKEND = "python"
else:
    try:
        from ._evalkernel import eval_program as _eval_program
        BACKEND = "cython"
    except ImportError:  # extension not built
        from ._evalkernel_py import eval_program as _eval_program
        BACKEND = "python"

from ._evalkernel_py import eval_program as _eval_program_py  # noqa: E402

DEFAULT_INTERVAL = (0.5, 1.5)
_POWI_LIMIT = 64


class Program:
    """A compiled expression bound to an ordered tuple of symbol names."""

    __slots__ = ("symbols", "ops", "args", "consts", "depth", "nregs")

    def __init__(self, symbols, ops, args, consts, depth, nregs=0):
        self.symbols = tuple(symbols)
        self.ops = np.asarray(ops, dtype=np.intc)
        self.args = np.asarray(args, dtype=np.int_)
        self.consts = np.asarray(consts, dtype=np.float64)
        self.depth = depth
        self.nregs = nregs

    def __len__(self):
        return len(self.ops)

    def run(self, points: np.ndarray, backend=None):
        """Evaluate at each row of ``points``; returns (values, status codes)."""
        pts = np.ascontiguousarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(1, -1)
        if pts.shape[1] != len(self.symbols):
            raise ValueError(f"expected {len(self.symbols)} columns, got {pts.shape[1]}")
        out = np.empty(pts.shape[0], dtype=np.float64)
        status = np.empty(pts.shape[0], dtype=np.intc)
        fn = _eval_program_py if backend == "python" else _eval_program
        fn(self.ops, self.args, self.consts, pts, out, status, self.depth, self.nregs)
        return out, status


def _shared_nodes(e: Expr) -> set:
    """Interior nodes reachable along more than one path of the DAG."""
    seen, shared = set(), set()
    stack = [e]
    while stack:
        node = stack.pop()
        if node in seen:
            if node.children:
                shared.add(node)
            continue
        seen.add(node)
        stack.extend(node.children)
    return shared


def _compile(e: Expr, slots: Mapping[str, int]) -> Program:
    ops, args, consts = [], [], []
    const_index: dict = {}
    shared = _shared_nodes(e)
    registers: dict = {}
    depth = 0
    cur = 0

    def push(op, arg, delta):
        nonlocal depth, cur
        ops.append(op)
        args.append(arg)
        cur += delta
        depth = max(depth, cur)

    def const(v):
        fv = float(v)
        idx = const_index.get(fv)
        if idx is None:
            idx = const_index[fv] = len(consts)
            consts.append(fv)
        push(opc.CONST, idx, 1)

    def go(node):
        reg = registers.get(node)
        if reg is not None:
            push(opc.LOAD, reg, 1)
            return
        if isinstance(node, Const):
            const(node.value)
        elif isinstance(node, Symbol):
            push(opc.SYM, slots[node.name], 1)
        elif isinstance(node, Sum):
            for t in node.terms:
                go(t)
            push(opc.ADD, len(node.terms), 1 - len(node.terms))
        elif isinstance(node, Product):
            for f in node.factors:
                go(f)
            push(opc.MUL, len(node.factors), 1 - len(node.factors))
        elif isinstance(node, Neg):
            go(node.operand)
            push(opc.NEG, 0, 0)
        elif isinstance(node, Power):
            x = node.exponent
            go(node.base)
            if isinstance(x, Const) and x.is_integer and abs(x.value) <= _POWI_LIMIT:
                push(opc.POWI, int(x.value), 0)
            else:
                go(x)
                push(opc.POW, 0, -1)
        elif isinstance(node, Func):
            go(node.arg)
            push(opc.FUNC_OPS[node.kind], 0, 0)
        else:
            raise TypeError(type(node))
        if node in shared:
            registers[node] = len(registers)
            push(opc.STORE, registers[node], 0)

    go(e)
    return Program(tuple(slots), ops, args, consts, depth, len(registers))


@lru_cache(maxsize=20_000)
def compile_expr(e: Expr, symbols: tuple) -> Program:
    """Compile ``e`` against the ordered symbol tuple ``symbols``."""
    missing = e.free_symbols - set(symbols)
    if missing:
        raise UnboundSymbol(sorted(missing)[0])
    return _compile(e, {s: i for i, s in enumerate(symbols)})


def _raise_status(code: int, point=None):
    raise DomainError(opc.STATUS_KIND.get(int(code), "unknown"), point)


def evaluate(e: Expr, bindings: Mapping[str, float]) -> float:
    """Value of ``e`` with every free symbol bound; raises on domain errors."""
    for name, v in bindings.items():
        if not np.isfinite(v):
            raise ValueError(f"binding {name}={v!r} is not finite")
    missing = e.free_symbols - set(bindings)
    if missing:
        raise UnboundSymbol(sorted(missing)[0])
    names = tuple(sorted(e.free_symbols))
    prog = compile_expr(e, names)
    vals, status = prog.run(np.array([[float(bindings[s]) for s in names]]))
    if status[0]:
        _raise_status(status[0], dict(bindings))
    return float(vals[0])


def evaluate_many(exprs: Sequence[Expr], symbols: Sequence[str], points: np.ndarray):
    """Evaluate several expressions on the same points.

    Returns ``(values, ok)`` with ``values`` of shape (len(exprs), npoints) and
    ``ok`` a boolean mask of points where every expression was defined.
    """
    symbols = tuple(symbols)
    pts = np.ascontiguousarray(points, dtype=np.float64)
    values = np.empty((len(exprs), pts.shape[0]))
    ok = np.ones(pts.shape[0], dtype=bool)
    for i, e in enumerate(exprs):
        v, st = compile_expr(e, symbols).run(pts)
        values[i] = v
        ok &= st == 0
    return values, ok


def make_rng(rng=None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(0 if rng is None else rng)


@dataclass
class DomainSampler:
    """Uniform sampling over a per-symbol box; unspecified symbols use ``default``."""

    intervals: dict = field(default_factory=dict)
    default: tuple = DEFAULT_INTERVAL

    def interval(self, name: str):
        return self.intervals.get(name, self.default)

    def with_intervals(self, **extra) -> "DomainSampler":
        merged = dict(self.intervals)
        merged.update(extra)
        return DomainSampler(merged, self.default)

    def merged(self, other: Mapping) -> "DomainSampler":
        merged = dict(self.intervals)
        merged.update(other)
        return DomainSampler(merged, self.default)

    def sample(self, symbols: Sequence[str], count: int, rng) -> np.ndarray:
        rng = make_rng(rng)
        lo = np.array([self.interval(s)[0] for s in symbols], dtype=float)
        hi = np.array([self.interval(s)[1] for s in symbols], dtype=float)
        return lo + (hi - lo) * rng.random((count, len(symbols)))


def sample_points(exprs: Sequence[Expr], n: int, sampler: DomainSampler | None = None, rng=None,
                  symbols: Sequence[str] | None = None, max_attempts: int | None = None):
    """Draw ``n`` points where every expression in ``exprs`` is defined.

    Points where any expression raises a domain error are discarded and
    redrawn; at most ``100*n`` draws are made in total.
    Returns ``(symbols, points, values)``.
    """
    sampler = sampler or DomainSampler()
    rng = make_rng(rng)
    if symbols is None:
        symbols = sorted(frozenset().union(*(e.free_symbols for e in exprs)))
    symbols = tuple(symbols)
    budget = max_attempts if max_attempts is not None else 100 * n
    got_pts, got_vals = [], []
    have = drawn = 0
    while have < n:
        if drawn >= budget:
            raise SamplingExhausted(f"only {have} of {n} admissible points after {drawn} draws")
        batch = min(max(2 * (n - have), 16), budget - drawn)
        pts = sampler.sample(symbols, batch, rng)
        drawn += batch
        vals, ok = evaluate_many(exprs, symbols, pts)
        if ok.any():
            got_pts.append(pts[ok])
            got_vals.append(vals[:, ok])
            have += int(ok.sum())
    points = np.concatenate(got_pts)[:n]
    values = np.concatenate(got_vals, axis=1)[:, :n]
    return symbols, points, values


@dataclass
class Comparison:
    equivalent: bool
    max_scaled_error: float
    worst_point: dict | None
    points: int


def compare_numeric(e1: Expr, e2: Expr, sampler: DomainSampler | None = None, n: int = 200,
                    tol: float = 1e-9, rng=None) -> Comparison:
    _, pts, vals = sample_points([e1, e2], n, sampler, rng, symbols=sorted(e1.free_symbols | e2.free_symbols))
    a, b = vals
    scaled = np.abs(a - b) / (1.0 + np.maximum(np.abs(a), np.abs(b)))
    i = int(np.argmax(scaled)) if len(scaled) else 0
    names = sorted(e1.free_symbols | e2.free_symbols)
    worst = {s: float(pts[i, k]) for k, s in enumerate(names)} if len(scaled) else None
    err = float(scaled[i]) if len(scaled) else 0.0
    return Comparison(err <= tol, err, worst, len(scaled))


def equivalent_numeric(e1: Expr, e2: Expr, sampler: DomainSampler | None = None, n: int = 200,
                       tol: float = 1e-9, rng=None) -> bool:
    """True iff |e1-e2| <= tol*(1+max(|e1|,|e2|)) at ``n`` admissible sample points."""
    return compare_numeric(e1, e2, sampler, n, tol, rng).equivalent


def numeric_rank(matrix: np.ndarray, rel: float = 1e-8) -> int:
    """Rank counting singular values above ``rel`` times the largest one."""
    m = np.asarray(matrix, dtype=float)
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > rel * s[0]))
