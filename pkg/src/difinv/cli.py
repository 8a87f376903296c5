"""Command-line front end.

    difinv check SPEC.json
    difinv prolong SPEC.json --order 2
    difinv invariants SPEC.json --order 2
    difinv first-order SPEC.json
    difinv quadrature SPEC.json
    difinv riccati {build,solve,verify} SPEC.json
    difinv reconstruct SPEC.json
    difinv examples run [1..5|all]

Exit codes: 0 success, 1 invalid problem file, 2 mathematical failure,
64 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import fixtures as fx
from .errors import DifinvError, ExprSyntaxError, InvalidProblem, UnknownFunction
from .expr import DomainSampler, compare_numeric, mul, parse, render, substitute
from .invariants import (
    RANK_POINT_FRACTION, UniversalInvariant, check_invariants, first_order_invariants, first_order_n1,
    invariant_count, rank_fraction, universal_differential_invariant,
)
from .invdiff import reconstruct_field
from .jet import JetSpace
from .prolong import VectorField, is_invariant_numeric, prolong
from .quadrature import J_numeric, J_symbolic, LevelSetParametrization, validate_parametrization
from .riccati import (
    VerificationGrid, build_system, classify_planar, general_solution_general_n, general_solution_n1,
    general_solution_systems, verify_solution,
)

EXIT_OK, EXIT_INVALID, EXIT_MATH, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- problem files -----------------------------------------------------------

def load_problem(path: str, cli_domains: dict | None = None) -> fx.Fixture:
    """Read a JSON problem file into a Fixture; raises InvalidProblem."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidProblem(f"cannot read {path}: {exc}") from exc
    return problem_from_dict(raw, cli_domains)


def problem_from_dict(raw: dict, cli_domains: dict | None = None) -> fx.Fixture:
    if not isinstance(raw, dict):
        raise InvalidProblem("problem file must hold a JSON object")
    try:
        n, m = int(raw["n"]), int(raw["m"])
        xi, eta = list(raw["xi"]), list(raw["eta"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidProblem(f"n, m, xi and eta are required: {exc}") from exc
    if len(xi) != n or len(eta) != m:
        raise InvalidProblem(f"expected {n} xi and {m} eta expressions")
    bound, intervals = {}, {}
    for name, spec in dict(raw.get("domains", {}), **(cli_domains or {})).items():
        if isinstance(spec, (int, float, str)) and not isinstance(spec, bool):
            bound[name] = parse(str(spec))
        elif isinstance(spec, (list, tuple)) and len(spec) == 2:
            intervals[name] = (float(spec[0]), float(spec[1]))
        else:
            raise InvalidProblem(f"domain for {name!r} must be a number or [lo, hi]")

    def ex(text):
        try:
            e = parse(str(text))
        except (ExprSyntaxError, UnknownFunction) as exc:
            raise InvalidProblem(f"cannot parse {text!r}: {exc}") from exc
        return substitute(e, bound) if bound else e

    js = JetSpace(n, m, 1)
    try:
        Q = VectorField(js, tuple(ex(s) for s in xi), tuple(ex(s) for s in eta))
    except ValueError as exc:
        raise InvalidProblem(str(exc)) from exc
    I = tuple(ex(s) for s in raw.get("invariants", ()))
    if I and len(I) != n + m - 1:
        raise InvalidProblem(f"expected {n + m - 1} invariants, got {len(I)}")
    J = ex(raw["J"]) if raw.get("J") else None
    level = None
    if raw.get("level_set"):
        ls = raw["level_set"]
        sol = dict(ls.get("X", {}))
        sol.update(ls.get("U", {}))
        params = ls.get("params") or (["C"] if len(I) == 1 else [f"C{q + 1}" for q in range(len(I))])
        try:
            level = LevelSetParametrization(ls["variable"], {k: ex(v) for k, v in sol.items()}, tuple(params),
                                            ls.get("z", "z"))
        except KeyError as exc:
            raise InvalidProblem("level_set needs a 'variable'") from exc
    anti = ex(raw["antiderivative"]) if raw.get("antiderivative") else None
    sampler = DomainSampler(intervals)
    return fx.Fixture(raw.get("name", "problem"), Q, I, J, level, anti, sampler, sampler, flow=raw.get("flow"))


# --- reports -------------------------------------------------------------------

def _num(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    return float(x)


def _dumps(obj, indent=0) -> str:
    """JSON with floats at 17 significant digits; non-finite numbers become strings."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(inner + _dumps(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, ".17g") if math.isfinite(x) else json.dumps(str(x))
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def _text(obj, indent=0, out=None) -> list:
    out = [] if out is None else out
    pad = "  " * indent
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and v:
                out.append(f"{pad}{k}:")
                _text(v, indent + 1, out)
            else:
                out.append(f"{pad}{k}: {_scalar(v)}")
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, (dict, list)):
                out.append(f"{pad}-")
                _text(v, indent + 1, out)
            else:
                out.append(f"{pad}- {_scalar(v)}")
    else:
        out.append(pad + _scalar(obj))
    return out


def _scalar(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".6g")
    if isinstance(v, (bool, np.bool_)):
        return "yes" if v else "no"
    return "" if v is None or v == [] or v == {} else str(v)


def emit(report: dict, fmt: str, stream=None):
    stream = stream or sys.stdout
    if fmt == "json":
        stream.write(_dumps(report) + "\n")
    else:
        stream.write("\n".join(_text(report)) + "\n")


def _verdict(v) -> dict:
    out = {"invariant": bool(v.invariant), "max_scaled_residual": _num(v.max_scaled_residual)}
    if v.witness:
        out["witness"] = {k: _num(x) for k, x in sorted(v.witness.items())}
    return out


def _report_dict(r) -> dict:
    return {"passed": r.passed, "max_residual": _num(r.max_residual), "max_deviation": _num(r.max_deviation),
            "tol": _num(r.tol), "draws": [{"params": {k: _num(x) for k, x in row["params"].items()},
                                           "residual": _num(row["residual"]),
                                           "deviation": _num(row["deviation"])} for row in r.rows]}


# --- commands ---------------------------------------------------------------------

def _need(f: fx.Fixture, *what):
    missing = [w for w in what if getattr(f, w) in (None, ())]
    if missing:
        raise InvalidProblem(f"problem file lacks: {', '.join(missing)}")


def cmd_check(f, a, rng):
    rep = {"command": "check", "n": f.js.n, "m": f.js.m, "ok": True}
    if f.js.n == 1 and f.js.m == 1:
        rep["planar_class"] = classify_planar(f.Q, f.sampler, rng=rng)
    if f.I:
        Q0 = prolong(f.Q, 0)
        rows = []
        for e in f.I:
            v = is_invariant_numeric(Q0, e, f.sampler, a.samples, a.tol, rng)
            rows.append(dict(expr=render(e), **_verdict(v)))
            rep["ok"] &= v.invariant
        rep["invariants"] = rows
        if f.J is not None:
            qj = compare_numeric(Q0.apply(f.J), parse("1"), f.sampler, a.samples, a.tol, rng)
            rep["QJ"] = {"equals_one": qj.equivalent, "max_scaled_error": _num(qj.max_scaled_error)}
            frac = rank_fraction(list(f.I) + [f.J], f.js.base_names, 100, f.sampler, rng)
            rep["rank_fraction"] = _num(frac)
            rep["ok"] &= qj.equivalent and frac >= RANK_POINT_FRACTION
    return rep, (EXIT_OK if rep["ok"] else EXIT_MATH)


def cmd_prolong(f, a, rng):
    Qr = prolong(f.Q, a.order)
    return {"command": "prolong", "order": a.order,
            "coefficients": {k: render(v) for k, v in Qr.coefficient_map().items()}}, EXIT_OK


def _ui(f) -> UniversalInvariant:
    _need(f, "I", "J")
    return UniversalInvariant(f.Q, f.I, f.J, f.level_set)


def cmd_invariants(f, a, rng):
    ui = _ui(f)
    outs = universal_differential_invariant(ui, a.order, f.sampler, rng)
    verdicts = check_invariants(f.Q, outs, a.order, f.sampler, a.samples, a.tol, rng)
    coords = f.js.with_order(a.order).coordinates(a.order)
    frac = rank_fraction(outs, coords, 100, f.sampler, rng)
    ok = all(v.invariant for v in verdicts) and frac >= RANK_POINT_FRACTION
    return {"command": "invariants", "order": a.order, "count": len(outs),
            "expected_count": invariant_count(f.js, a.order), "rank_fraction": _num(frac), "ok": ok,
            "invariants": [dict(expr=render(e), **_verdict(v)) for e, v in zip(outs, verdicts)]}, \
        (EXIT_OK if ok else EXIT_MATH)


def cmd_first_order(f, a, rng):
    ui = _ui(f)
    matrix = first_order_invariants(ui, f.sampler, rng)
    flat = [e for row in matrix for e in row]
    verdicts = check_invariants(f.Q, flat, 1, f.sampler, a.samples, a.tol, rng)
    rep = {"command": "first-order", "matrix": [[render(e) for e in row] for row in matrix],
           "invariance": [_verdict(v) for v in verdicts], "ok": all(v.invariant for v in verdicts)}
    if f.js.n == 1:
        rep["ratios"] = [render(e) for e in first_order_n1(ui)]
    return rep, (EXIT_OK if rep["ok"] else EXIT_MATH)


def cmd_quadrature(f, a, rng):
    _need(f, "I")
    if f.antiderivative is not None:
        _need(f, "level_set")
        J = J_symbolic(f.Q, f.I, f.level_set, f.antiderivative, f.sampler, a.samples, a.tol, rng)
        return {"command": "quadrature", "J": render(J), "verified": True}, EXIT_OK
    flow = f.flow
    if not flow or "base" not in flow or "targets" not in flow:
        raise InvalidProblem("quadrature needs an antiderivative or a flow {base, targets} section")
    rows = []
    for target in flow["targets"]:
        t = J_numeric(f.Q, f.I, flow["base"], target)
        rows.append({"target": {k: _num(v) for k, v in target.items()}, "J_minus_J_base": _num(t)})
    return {"command": "quadrature", "base": flow["base"], "table": rows}, EXIT_OK


def _solution(f, rng):
    if f.js.n >= 2:
        return general_solution_general_n(_ui(f), f.level_set, f.level_sampler, rng)
    if f.J is not None:
        return general_solution_n1(_ui(f), f.level_set, f.level_sampler, rng)
    return general_solution_systems(f.Q, f.I, f.level_set, None, f.level_sampler, rng)


def _grid(f, samples_z=41, draws=5):
    z = f.level_set.z if f.level_set else "z"
    return VerificationGrid(f.level_sampler.interval(z), samples_z, draws, f.level_sampler)


def cmd_riccati(f, a, rng):
    _need(f, "level_set")
    system = build_system(f.Q, f.level_set, sampler=f.sampler, rng=rng)
    rep = {"command": f"riccati {a.action}", "variable": system.variable, "unknowns": list(system.unknowns),
           "degree": system.degree(),
           "equations": {u: render(r) for u, r in zip(system.unknowns, system.rhs)}}
    if f.js.n == 1 and f.js.m == 1:
        rep["planar_class"] = classify_planar(f.Q, f.sampler, rng=rng)
    if a.action == "build":
        return rep, EXIT_OK
    sol = _solution(f, rng)
    rep["constants"] = list(sol.constants)
    rep["radius"] = _num(sol.radius)
    rep["solution"] = {u: render(v) for u, v in sol.values.items()}
    rep["particular"] = {u: render(v) for u, v in sol.particular().values.items()}
    if sol.agreement is not None:
        rep["forms_agreement"] = _num(sol.agreement)
    if sol.quadratures:
        rep["quadratures"] = {q: render(v) for q, v in sol.quadratures.items()}
    if a.action == "solve":
        return rep, EXIT_OK
    grid = _grid(f)
    general = verify_solution(system, sol, grid, a.tol_riccati, rng)
    particular = verify_solution(system, sol.particular(), grid, a.tol_riccati, rng)
    rep["verify"] = {"general": _report_dict(general), "particular": _report_dict(particular)}
    ok = general.passed and particular.passed
    return rep, (EXIT_OK if ok else EXIT_MATH)


def cmd_reconstruct(f, a, rng):
    _need(f, "I", "J")
    R = reconstruct_field(f.I, f.J, f.js, f.sampler, rng)
    rep = {"command": "reconstruct", "xi": [render(e) for e in R.xi], "eta": [render(e) for e in R.eta]}
    errs = [compare_numeric(x, y, f.sampler, a.samples, a.tol, rng) for x, y in zip(R.coefficients, f.Q.coefficients)]
    rep["matches_given_field"] = all(c.equivalent for c in errs)
    rep["max_scaled_error"] = _num(max(c.max_scaled_error for c in errs))
    return rep, (EXIT_OK if rep["matches_given_field"] else EXIT_MATH)


# --- built-in examples ---------------------------------------------------------------

def _check(name, passed, value=None) -> dict:
    out = {"check": name, "passed": bool(passed)}
    if value is not None:
        out["value"] = value if isinstance(value, str) else _num(value)
    return out


def run_fixture(f: fx.Fixture, samples: int = 200, tol: float = 1e-8, rng=None) -> dict:
    """End-to-end pipeline on one built-in example."""
    rng = np.random.default_rng(0) if rng is None else rng
    checks = []
    jet_sampler = f.sampler.merged({k: v for k, v in {"u1[1]": (-1.0, 1.0)}.items()
                                    if k not in f.sampler.intervals})
    if f.level_set is not None and f.I:
        rep = validate_parametrization(f.I, f.level_set, f.level_sampler, 100, 1e-9, rng)
        checks.append(_check("level set solves I = C", rep.passed, max(rep.errors.values())))
    if f.J is not None:
        report = f.ui.validate(f.sampler, samples, tol, rng)
        checks.append(_check("universal invariant (QI = 0, QJ = 1, rank)", report.ok, report.rank_fraction))
        if f.antiderivative is not None:
            J = J_symbolic(f.Q, f.I, f.level_set, f.antiderivative, f.sampler, samples, tol, rng)
            same = compare_numeric(J, f.J, f.sampler, samples, 1e-9, rng)
            checks.append(_check("J from one quadrature", same.equivalent, render(J)))
        outs = universal_differential_invariant(f.ui, 1, f.sampler, rng)
        verdicts = check_invariants(f.Q, outs, 1, jet_sampler, samples, tol, rng)
        checks.append(_check("first-order universal differential invariant",
                             all(v.invariant for v in verdicts), max(v.max_scaled_residual for v in verdicts)))
        if f.js.n == 1:
            ratios = first_order_n1(f.ui)
            for j, e in enumerate(ratios, start=1):
                checks.append(_check(f"I{j}_(1) = D_x I{j} / D_x J", True, render(e)))
            if f.reduced is not None:
                same = compare_numeric(ratios[0], mul(f.reduced, f.reduction_factor), jet_sampler, samples, 1e-9, rng)
                inv = is_invariant_numeric(prolong(f.Q, 1), f.reduced, jet_sampler, samples, tol, rng)
                checks.append(_check(f"reduced invariant {render(f.reduced)}", same.equivalent and inv.invariant,
                                     render(f.reduced)))
        R = reconstruct_field(f.I, f.J, f.js, f.sampler, rng)
        err = max(compare_numeric(x, y, f.sampler, samples, tol, rng).max_scaled_error
                  for x, y in zip(R.coefficients, f.Q.coefficients))
        checks.append(_check("field reconstructed from (I; J)", err <= tol, err))
    if f.level_set is not None and f.js.axis_of(f.level_set.variable) is not None:
        system = build_system(f.Q, f.level_set, sampler=f.sampler, rng=rng)
        checks.append(_check("Riccati system", system.degree() is not None and system.degree() <= 2,
                             "; ".join(system.equation(k) for k in range(len(system.unknowns)))))
        grid = _grid(f)
        sol = _solution(f, rng)
        for label, s in (("general solution", sol), ("particular solution", sol.particular())):
            r = verify_solution(system, s, grid, 1e-7, rng)
            checks.append(_check(label, r.passed, max(r.max_residual, r.max_deviation)))
        if f.displayed is not None:
            g = VerificationGrid(grid.z, grid.points, grid.draws, f.level_sampler.merged(f.displayed_domain))
            r = verify_solution(system, f.displayed, g, 1e-6 if f.js.m > 1 else 1e-7, rng)
            checks.append(_check("displayed solution family", r.passed, max(r.max_residual, r.max_deviation)))
    return {"example": f.name, "passed": all(c["passed"] for c in checks), "checks": checks}


def cmd_examples(a, rng):
    table = fx.builtin_examples()
    keys = sorted(table) if a.which == "all" else [a.which]
    if any(k not in table for k in keys):
        raise UsageError(f"unknown example {a.which!r}; choose 1-5 or all")
    results = [run_fixture(f, a.samples, a.tol, rng) for k in keys for f in table[k]]
    ok = all(r["passed"] for r in results)
    return {"command": "examples run", "passed": ok, "examples": results}, (EXIT_OK if ok else EXIT_MATH)


# --- entry point ----------------------------------------------------------------------

def _domain(text: str):
    try:
        name, rng = text.split("=", 1)
        lo, hi = rng.split(":", 1)
        return name.strip(), (float(lo), float(hi))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected SYM=LO:HI, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--samples", type=int, default=200, help="sample points per numeric check (default 200)")
    common.add_argument("--tol", type=float, default=1e-8, help="scaled tolerance (default 1e-8)")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--domain", type=_domain, action="append", default=[], metavar="SYM=LO:HI",
                        help="sampling interval for one symbol (repeatable)")

    parser = _Parser(prog="difinv", description="Differential invariants of one-parameter groups.")
    parser.add_argument("--version", action="version", version=f"difinv {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, helptext in (("check", "validate a problem and its universal invariant"),
                           ("first-order", "first-order differential invariants"),
                           ("quadrature", "J from an antiderivative or by flow time"),
                           ("reconstruct", "recover the field from (I; J)")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("spec")
    for name in ("prolong", "invariants"):
        p = sub.add_parser(name, parents=[common], help=f"{name} up to a given order")
        p.add_argument("spec")
        p.add_argument("--order", type=int, default=1)
    p = sub.add_parser("riccati", parents=[common], help="Riccati-type systems along level sets")
    p.add_argument("action", choices=("build", "solve", "verify"))
    p.add_argument("spec")
    p.add_argument("--tol-riccati", type=float, default=1e-7, help="verification tolerance (default 1e-7)")
    p = sub.add_parser("examples", parents=[common], help="run the built-in examples")
    p.add_argument("action", choices=("run",))
    p.add_argument("which", nargs="?", default="all")
    return parser


COMMANDS = {
    "check": cmd_check, "prolong": cmd_prolong, "invariants": cmd_invariants,
    "first-order": cmd_first_order, "quadrature": cmd_quadrature, "riccati": cmd_riccati,
    "reconstruct": cmd_reconstruct,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(a, "order", 0) < 0:
        sys.stderr.write("difinv: error: --order must be >= 0\n")
        return EXIT_USAGE
    rng = np.random.default_rng(a.seed)
    try:
        if a.command == "examples":
            report, code = cmd_examples(a, rng)
        else:
            f = load_problem(a.spec, dict(a.domain))
            report, code = COMMANDS[a.command](f, a, rng)
    except UsageError as exc:
        sys.stderr.write(f"difinv: error: {exc}\n")
        return EXIT_USAGE
    except InvalidProblem as exc:
        emit({"error": "invalid problem", "detail": str(exc)}, a.format, sys.stderr)
        return EXIT_INVALID
    except (DifinvError, ArithmeticError) as exc:
        detail = {"error": type(exc).__name__, "detail": str(exc)}
        verdict = getattr(exc, "verdict", None)
        if verdict is not None:
            detail.update(_verdict(verdict))
        emit(detail, a.format)
        return EXIT_MATH
    emit(report, a.format)
    return code


__all__ = ["build_parser", "load_problem", "main", "problem_from_dict", "run_fixture"]

