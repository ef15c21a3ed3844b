"""Command-line front end.

Exit codes: 0 pass, 1 invariant failure, 2 usage/parse error,
3 generation failure, 4 precondition failure (frame not Parseval).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import DEFAULT_TOL
from .frames import (
    FrameFormatError,
    basis_pasf,
    certify,
    extremal_pasf,
    load_frame,
    parseval_residual,
    random_pasf,
    save_frame,
)
from .identities import run_suites
from .search import SearchConfig, minimize_ratio
from .sip import P_MAX, P_MIN, SipSpace

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_GEN, EXIT_PRECONDITION = 0, 1, 2, 3, 4


def _exponent(s: str) -> float:
    try:
        p = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}")
    if not math.isfinite(p) or p < P_MIN or p > P_MAX:
        raise argparse.ArgumentTypeError(f"p must lie in [{P_MIN}, {P_MAX:g}], got {s}")
    return p


def _positive_int(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {s}")
    return v


def _subset_policy(s: str):
    if s == "exhaustive":
        return s
    try:
        k = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError("--subsets takes 'exhaustive' or a sample size")
    if k < 1:
        raise argparse.ArgumentTypeError("subset sample size must be >= 1")
    return k


def _positive_float(s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}")
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be positive and finite, got {s}")
    return v


def _jsonable(obj):
    """Convert numpy values and non-finite floats for strict JSON."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return [[_jsonable(z.real), _jsonable(z.imag)] for z in obj.ravel()]
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def dumps(report: dict) -> str:
    return json.dumps(_jsonable(report), indent=2, allow_nan=False) + "\n"


def _human(report: dict) -> str:
    lines = []
    m = report.get("manifest", {})
    lines.append(f"pasflab {m.get('command', '')}  seed={m.get('seed')}  input={m.get('input')}")
    rows = report.get("results")
    if rows:
        header = f"{'suite':<20}{'cases':>8}{'max_residual':>15}{'min_ratio':>12}{'fail':>6}"
        lines += [header, "-" * len(header)]
        for r in rows:
            mr = r.get("min_ratio")
            mr = f"{mr:.6f}" if isinstance(mr, float) else "-"
            res = r["max_residual"]
            res = f"{res:.3e}" if isinstance(res, float) else str(res)
            lines.append(f"{r['suite']:<20}{r['cases_run']:>8}{res:>15}{mr:>12}{len(r['failures']):>6}")
            if r.get("skipped"):
                lines.append(f"  skipped: {r['skipped']}")
    for key in ("frame_report", "search"):
        if key in report:
            width = max(len(k) for k in report[key])
            for k, v in report[key].items():
                if isinstance(v, list) and len(v) > 8:
                    v = f"[{len(v)} entries]"
                lines.append(f"{k:<{width}}  {v}")
    if "error" in report:
        lines.append(f"error: {report['error']}")
    return "\n".join(lines) + "\n"


def _emit(report: dict, args) -> None:
    text = dumps(report)
    if args.out and args.command != "gen":
        Path(args.out).write_text(text)
    if args.human:
        sys.stdout.write(_human(_jsonable(report)))
    elif not args.out or args.command == "gen":
        sys.stdout.write(text)


def _tolerances(args):
    tol = DEFAULT_TOL
    if getattr(args, "tol_rel", None) is not None:
        tol = replace(tol, rel_identity=args.tol_rel, rel_parseval=args.tol_rel)
    return tol


def manifest(args) -> dict:
    """Everything needed to replay a run; worker count is deliberately excluded."""
    m = {
        "command": args.command,
        "input": getattr(args, "input", None),
        "output": args.out,
        "seed": args.seed,
        "tolerances": _tolerances(args).as_dict(),
        "versions": {"pasflab": __version__, "numpy": np.__version__},
    }
    for key in ("kind", "p", "dim", "N", "field", "parseval", "subsets", "samples", "restarts", "iters", "restricted"):
        if hasattr(args, key):
            m[key] = getattr(args, key)
    return m


def _frame_report_dict(rep) -> dict:
    d = {
        "c_estimate": rep.c_estimate,
        "d_estimate": rep.d_estimate,
        "condition_S": rep.condition_S,
        "parseval_residual": rep.parseval_residual,
        "certified": rep.certified,
    }
    if rep.a_estimate is not None:
        d["a_estimate"] = rep.a_estimate
        d["b_estimate"] = rep.b_estimate
    d["c_witness"] = rep.c_witness
    d["d_witness"] = rep.d_witness
    d["converged"] = rep.converged
    return d


def cmd_gen(args) -> int:
    try:
        if args.kind == "extremal":
            F = extremal_pasf(args.p, args.field)
        elif args.kind == "basis":
            F = basis_pasf(SipSpace(args.dim, args.p, args.field))
        else:
            F = random_pasf(SipSpace(args.dim, args.p, args.field), args.N, seed=args.seed, parseval=args.parseval)
    except (RuntimeError, ValueError) as exc:
        print(f"generation failed: {exc}", file=sys.stderr)
        return EXIT_GEN
    save_frame(F, args.out)
    rep = certify(F, restarts=args.restarts, seed=args.seed)
    _emit({"manifest": manifest(args), "frame_report": _frame_report_dict(rep)}, args)
    return EXIT_OK


def _load(args):
    try:
        return load_frame(args.input)
    except FrameFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None


def cmd_verify(args) -> int:
    F = _load(args)
    if F is None:
        return EXIT_USAGE
    policy = args.subsets
    if policy is None:
        policy = "exhaustive" if F.N <= 8 else 100
    args.subsets = policy
    suites = run_suites(F, policy, samples=args.samples, seed=args.seed, tol=_tolerances(args))
    report = {"manifest": manifest(args), "results": [s.to_dict() for s in suites]}
    _emit(report, args)
    return EXIT_OK if all(s.passed for s in suites) else EXIT_FAIL


def cmd_analyze(args) -> int:
    F = _load(args)
    if F is None:
        return EXIT_USAGE
    rep = certify(F, restarts=args.restarts, seed=args.seed)
    _emit({"manifest": manifest(args), "frame_report": _frame_report_dict(rep)}, args)
    return EXIT_OK


def cmd_search(args) -> int:
    F = _load(args)
    if F is None:
        return EXIT_USAGE
    res = parseval_residual(F)
    if res > DEFAULT_TOL.parseval:
        report = {"manifest": manifest(args), "error": "not Parseval", "parseval_residual": res}
        _emit(report, args)
        print(f"error: frame is not Parseval (max |S - I| = {res!r})", file=sys.stderr)
        return EXIT_PRECONDITION
    cfg = SearchConfig(
        restarts=args.restarts,
        max_iters=args.iters,
        seed=args.seed,
        restricted=args.restricted,
        subsets=args.subsets,
    )
    out = minimize_ratio(F, cfg)
    trace = [r for _, r in out.trace]
    report = {
        "manifest": manifest(args),
        "search": {
            "label": out.label,
            "best_ratio": out.best_ratio,
            "best_x": out.best_x,
            "best_M": out.best_M.bits,
            "hypothesis_value": out.hypothesis_value_at_best,
            "restricted": out.restricted,
            "subsets_searched": out.subsets_searched,
            "trace_length": len(trace),
            "trace_first": trace[0],
            "trace_last": trace[-1],
        },
    }
    _emit(report, args)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pasflab", description="p-approximate Schauder frames on l^p: generate, verify, analyze, search.")
    parser.add_argument("--version", action="version", version=f"pasflab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="write the JSON report (the frame file, for gen) here")
        p.add_argument("--human", action="store_true", help="print an aligned table instead of JSON")

    g = sub.add_parser("gen", help="generate a frame file")
    common(g)
    g.add_argument("--kind", choices=("random", "basis", "extremal"), default="random")
    g.add_argument("--p", type=_exponent, default=2.0)
    g.add_argument("--dim", type=_positive_int, default=2)
    g.add_argument("--N", type=_positive_int, default=4)
    g.add_argument("--field", choices=("real", "complex"), default="real")
    g.add_argument("--parseval", action="store_true")
    g.add_argument("--restarts", type=_positive_int, default=8)
    g.set_defaults(func=cmd_gen)

    v = sub.add_parser("verify", help="run the identity suites on a frame file")
    v.add_argument("input")
    common(v)
    v.add_argument("--subsets", type=_subset_policy, default=None, help="'exhaustive' or a sample size (default: exhaustive for N <= 8, else 100)")
    v.add_argument("--samples", type=_positive_int, default=20, help="random x per subset")
    v.add_argument("--tol-rel", type=_positive_float, default=None)
    v.set_defaults(func=cmd_verify)

    a = sub.add_parser("analyze", help="estimate frame constants")
    a.add_argument("input")
    common(a)
    a.add_argument("--restarts", type=_positive_int, default=8)
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("search", help="search for small bound ratios")
    s.add_argument("input")
    common(s)
    s.add_argument("--subsets", type=_subset_policy, default=None)
    s.add_argument("--restarts", type=_positive_int, default=16)
    s.add_argument("--iters", type=_positive_int, default=300)
    s.add_argument("--restricted", action="store_true", help="only accept points where the hypothesis holds")
    s.set_defaults(func=cmd_search)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "gen" and not args.out:
        parser.error("gen requires --out")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
