"""Command-line front end.

Every command writes deterministic text, CSV or JSON (``schema: 1``) with
numbers rounded to 12 significant digits.  Exit codes: 0 success, 1 failed
verification, 2 usage or domain error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .diagnostics import nestedness_thresholds, pvalue_curve
from .distributions import DomainError, Family, binomial, negbinomial, poisson
from .intervals import bounds_curve, interval
from .oracle import enumeration_check, exact_coverage, interior_grid, minimality_probe
from .pvalues import TestKind, acceptance_cut, pvalue, pvalue_limits

SCHEMA = 1
DIGITS = 12
GRID_EDGE_PULL = 1e-9


# ------------------------------------------------------------------ helpers
def num(v):
    """Round to ``DIGITS`` significant digits; non-finite values become strings."""
    if v is None:
        return None
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return float(f"{v:.{DIGITS}g}")


def cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.{DIGITS}g}"


def threads() -> int:
    raw = os.environ.get("EXACTINF_THREADS", "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        raise DomainError(f"EXACTINF_THREADS must be an integer, got {raw!r}") from None


def ordered_map(fn, items):
    """``map`` that may run on ``EXACTINF_THREADS`` workers; results keep input order."""
    n = threads()
    if n == 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def parse_range(spec: str) -> tuple[int, int]:
    try:
        a, b = (int(v) for v in spec.split(":"))
    except ValueError:
        raise DomainError(f"range must look like lo:hi, got {spec!r}") from None
    if a > b:
        raise DomainError(f"empty range {spec!r}")
    return a, b


def parse_grid(spec: str, bounds: tuple[float, float] | None = None) -> np.ndarray:
    """``lo:hi:count`` with inclusive ends; ends on an open boundary are pulled inside."""
    try:
        lo_s, hi_s, n_s = spec.split(":")
        lo, hi, n = float(lo_s), float(hi_s), int(n_s)
    except ValueError:
        raise DomainError(f"grid must look like lo:hi:count, got {spec!r}") from None
    if n < 2 or not lo < hi:
        raise DomainError(f"grid {spec!r} needs count >= 2 and lo < hi")
    if bounds is not None:
        b_lo, b_hi = bounds
        if lo <= b_lo:
            lo = b_lo + GRID_EDGE_PULL
        if hi >= b_hi:
            hi = b_hi - GRID_EDGE_PULL
        if not lo < hi:
            raise DomainError(f"grid {spec!r} is empty inside {bounds}")
    return np.linspace(lo, hi, n)


def make_family(args) -> Family:
    if args.family == "binomial":
        if args.n is None:
            raise DomainError("--n is required for the binomial family")
        return binomial(args.n)
    if args.family == "negbinomial":
        if args.k is None:
            raise DomainError("--k is required for the negative binomial family")
        return negbinomial(args.k)
    return poisson()


def family_dict(f: Family) -> dict:
    return {"name": f.name, "size": f.size}


def emit(args, text: str):
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def to_json(payload: dict) -> str:
    return json.dumps({"schema": SCHEMA, **payload}, indent=2, sort_keys=False) + "\n"


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([cell(v) for v in r])
    return buf.getvalue()


def _outcome(v: float):
    return int(v) if math.isfinite(v) else v


# ----------------------------------------------------------------- commands
def cmd_pvalue(args) -> int:
    fam = make_family(args)
    kind = TestKind.parse(args.test)
    p = pvalue(kind, fam, args.theta0, args.x)
    out = {"command": "pvalue", "family": family_dict(fam), "test": kind.value, "x": args.x, "theta0": num(args.theta0), "pvalue": num(p)}
    lines = [f"p-value: {cell(p)}"]
    if kind.strict:
        cut = acceptance_cut(kind, fam, args.theta0, args.x)
        left, right, cut_l, cut_r = pvalue_limits(kind, fam, args.theta0, args.x)
        out["cut"] = {"k1": num(_outcome(cut.k1)), "k2": num(_outcome(cut.k2)), "x_theta": cut.x_theta}
        lines.append(f"acceptance cut: k1={cell(_outcome(cut.k1))} k2={cell(_outcome(cut.k2))} x_theta={cut.x_theta}")
        if cut_l != cut or cut_r != cut:
            out["left_limit"], out["right_limit"] = num(left), num(right)
            lines.append(f"near a breakpoint: left limit {cell(left)}, right limit {cell(right)}")
    emit(args, to_json(out) if args.format == "json" else "\n".join(lines) + "\n")
    return 0


def cmd_curve(args) -> int:
    fam = make_family(args)
    kind = TestKind.parse(args.test)
    grid = parse_grid(args.theta, fam.theta_space)
    curve = pvalue_curve(kind, fam, args.x, grid)
    rows = [(t, v, False, None, None) for t, v in zip(curve.grid, curve.values)]
    for t, left, right in curve.jumps:
        rows.append((t, left, True, left, right))
        rows.append((t, right, True, left, right))
    rows.sort(key=lambda r: (r[0], not r[2]))
    header = ["theta", "pvalue", "is_jump", "left_limit", "right_limit"]
    if args.format == "json":
        payload = {
            "command": "curve",
            "family": family_dict(fam),
            "test": kind.value,
            "x": args.x,
            "plateau": [num(v) for v in curve.plateau],
            "jumps": [{"theta": num(t), "left_limit": num(a), "right_limit": num(b)} for t, a, b in curve.jumps],
            "rows": [dict(zip(header, (num(v) for v in r))) for r in rows],
        }
        emit(args, to_json(payload))
    else:
        emit(args, to_csv(header, rows))
    return 0


def cmd_interval(args) -> int:
    fam = make_family(args)
    kind = TestKind.parse(args.test)
    iv = interval(kind, fam, args.x, args.alpha)
    if args.format == "json":
        emit(
            args,
            to_json(
                {
                    "command": "interval",
                    "family": family_dict(fam),
                    "test": kind.value,
                    "x": args.x,
                    "alpha": num(args.alpha),
                    "lower": num(iv.lower),
                    "upper": num(iv.upper),
                    "width": num(iv.width),
                }
            ),
        )
    else:
        emit(args, f"({cell(iv.lower)}, {cell(iv.upper)})  width {cell(iv.width)}\n")
    return 0


def cmd_bounds(args) -> int:
    fam = make_family(args)
    kind = TestKind.parse(args.test)
    alphas = parse_grid(args.alpha_grid, (0.0, 1.0))
    bc = bounds_curve(kind, fam, args.x, alphas)
    header = ["alpha", "lower", "upper", "lower_flat", "upper_flat", "flat"]
    rows = [(a, lo, hi, fl, fu, fl and fu) for a, lo, hi, fl, fu in bc.rows()]
    if args.format == "json":
        payload = {
            "command": "bounds",
            "family": family_dict(fam),
            "test": kind.value,
            "x": args.x,
            "rows": [dict(zip(header, (num(v) for v in r))) for r in rows],
        }
        emit(args, to_json(payload))
    else:
        emit(args, to_csv(header, rows))
    return 0


def _report_dict(rep) -> dict:
    return {
        "family": family_dict(rep.family),
        "test": rep.kind.value,
        "alpha_L": num(rep.alpha_L),
        "alpha_U": num(rep.alpha_U),
        "alpha_nest": num(rep.alpha_nest),
        "records": [
            {"x": r.x, "alpha_L": num(r.alpha_L), "alpha_U": num(r.alpha_U), "alpha_nest": num(r.alpha_nest)} for r in rep.records
        ],
        "failures": {str(k): v for k, v in rep.failures.items()},
    }


def cmd_nestedness(args) -> int:
    kind = TestKind.parse(args.test)
    if args.n_range:
        if args.family != "binomial":
            raise DomainError("--n-range applies to the binomial family")
        a, b = parse_range(args.n_range)
        sizes = list(range(a, b + 1))
        reports = ordered_map(lambda n: nestedness_thresholds(kind, binomial(n)), sizes)
        payload = {"command": "nestedness", "reports": [_report_dict(r) for r in reports]}
        if args.format == "csv":
            rows = [(r.family.size, r.alpha_L, r.alpha_U, r.alpha_nest) for r in reports]
            emit(args, to_csv(["n", "alpha_L", "alpha_U", "alpha_nest"], rows))
        else:
            emit(args, to_json(payload))
        return 0
    fam = make_family(args)
    xs = None
    if args.x_range:
        a, b = parse_range(args.x_range)
        xs = range(a, b + 1)
    rep = nestedness_thresholds(kind, fam, xs)
    if args.format == "csv":
        rows = [(r.x, r.alpha_L, r.alpha_U, r.alpha_nest) for r in rep.records]
        emit(args, to_csv(["x", "alpha_L", "alpha_U", "alpha_nest"], rows))
    else:
        emit(args, to_json({"command": "nestedness", **_report_dict(rep)}))
    return 0


def cmd_coverage(args) -> int:
    fam = make_family(args)
    kind = TestKind.parse(args.test)
    if args.theta:
        grid = parse_grid(args.theta, fam.theta_space)
    elif fam.name == "poisson":
        grid = interior_grid(0.0, 30.0, 2001)
    else:
        grid = interior_grid(0.0, 1.0, 2001)
    alphas = [float(a) for a in args.alpha.split(",")]
    profiles = exact_coverage(kind, fam, alphas, grid)
    if args.format == "json":
        payload = {
            "command": "coverage",
            "family": family_dict(fam),
            "test": kind.value,
            "profiles": [
                {
                    "alpha": num(p.alpha),
                    "min_coverage": num(p.min_coverage),
                    "argmin": num(p.argmin),
                    "exact": p.exact,
                    "theta": [num(v) for v in p.theta_grid],
                    "coverage": [num(v) for v in p.coverage],
                }
                for p in profiles
            ],
        }
        emit(args, to_json(payload))
    else:
        header = ["theta"] + [f"coverage_{cell(p.alpha)}" for p in profiles]
        rows = [(t, *(p.coverage[i] for p in profiles)) for i, t in enumerate(grid)]
        emit(args, to_csv(header, rows))
    return 0


def cmd_verify(args) -> int:
    fam = make_family(args)
    lines = []
    ok = True
    if args.suite == "minimality":
        results, monotone = minimality_probe(fam, args.alpha, delta=args.delta)
        for r in results:
            lines.append(f"x={r.x} {r.side}: inward violates={r.inward_violates} outward preserves={r.outward_preserves}")
        lines.append(f"bounds monotone in x: {monotone}")
        ok = monotone and all(r.passed for r in results)
    elif args.suite == "enumeration":
        worst, where = enumeration_check(fam)
        if where is not None:
            kind, theta, x = where
            lines.append(f"largest difference {cell(worst)} ({kind.value}, theta={cell(theta)}, x={x})")
        ok = worst <= args.tol
    elif args.suite == "coverage":
        grid = interior_grid(0.0, 1.0 if fam.theta_space[1] == 1.0 else 30.0, 2001)
        for kind in TestKind:
            for p in exact_coverage(kind, fam, [0.01, 0.05, 0.1], grid):
                lines.append(f"{kind.value} alpha={p.alpha}: min coverage {cell(p.min_coverage)}")
                ok = ok and p.exact
    lines.append("PASS" if ok else "FAIL")
    emit(args, "\n".join(lines) + "\n")
    return 0 if ok else 1


# ------------------------------------------------------------------- parser
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--family", choices=["binomial", "poisson", "negbinomial"], default="binomial")
    common.add_argument("--n", type=int, help="binomial number of trials")
    common.add_argument("--k", type=int, help="negative binomial number of successes")
    common.add_argument("--test", default="blaker", help="fiducial, sterne, blaker, lr or score")
    common.add_argument("--format", choices=["text", "csv", "json"], default=None)
    common.add_argument("--output", help="write to this file instead of stdout")

    p = argparse.ArgumentParser(prog="exactinf", description="Exact tests and confidence intervals for discrete families.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("pvalue", parents=[common], help="p-value at one parameter value")
    s.add_argument("--x", type=int, required=True)
    s.add_argument("--theta0", type=float, required=True)
    s.set_defaults(func=cmd_pvalue, default_format="text")

    s = sub.add_parser("curve", parents=[common], help="p-value function on a grid (CSV/JSON)")
    s.add_argument("--x", type=int, required=True)
    s.add_argument("--theta", required=True, help="lo:hi:count")
    s.set_defaults(func=cmd_curve, default_format="csv")

    s = sub.add_parser("interval", parents=[common], help="confidence interval")
    s.add_argument("--x", type=int, required=True)
    s.add_argument("--alpha", type=float, required=True)
    s.set_defaults(func=cmd_interval, default_format="text")

    s = sub.add_parser("bounds", parents=[common], help="interval bounds over an alpha grid")
    s.add_argument("--x", type=int, required=True)
    s.add_argument("--alpha-grid", required=True, help="lo:hi:count")
    s.set_defaults(func=cmd_bounds, default_format="csv")

    s = sub.add_parser("nestedness", parents=[common], help="nestedness thresholds")
    s.add_argument("--n-range", help="lo:hi range of binomial sizes")
    s.add_argument("--x-range", help="lo:hi outcomes (required for infinite supports)")
    s.set_defaults(func=cmd_nestedness, default_format="json")

    s = sub.add_parser("coverage", parents=[common], help="exact coverage profile")
    s.add_argument("--alpha", default="0.05", help="one level or a comma-separated list")
    s.add_argument("--theta", help="lo:hi:count (default: 2001 interior points)")
    s.set_defaults(func=cmd_coverage, default_format="csv")

    s = sub.add_parser("verify", parents=[common], help="run an oracle suite")
    s.add_argument("--suite", choices=["minimality", "enumeration", "coverage"], required=True)
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--delta", type=float, default=1e-3)
    s.add_argument("--tol", type=float, default=1e-12)
    s.set_defaults(func=cmd_verify, default_format="text")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = args.default_format
    try:
        return args.func(args)
    except ValueError as exc:
        # DomainError and malformed option values alike
        print(f"exactinf: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
