"""Command-line entry point: ``nestlab <command> ...``.

Exit codes: 0 success, 1 verification failure, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Optional, Sequence

from . import analytics
from .circuit import build_round_schedule
from .lattice import Boundary, InvalidParameter, build_layout
from .montecarlo import TrialConfig, estimate_rates
from .nest import (
    NestParseError,
    build_nest,
    count_min_nontrivial_cycles,
    degree_violations,
    diff_nests,
    export_nest,
    import_nest,
    max_degree,
    verify_no_zigzag,
)

CSV_FIELDS = ["d", "boundary", "p", "class", "failures", "trials", "rounds", "rate", "ci_low", "ci_high", "seed"]

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.replace(",", " ").split()]


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{name} must be an integer, got {raw!r}") from None


def _write(text: str, path: Optional[str]) -> None:
    if path and path != "-":
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_nest_gen(args) -> int:
    if args.d < 2:
        raise UsageError("--d must be >= 2")
    if not 0 <= args.p < 0.5:
        raise UsageError("--p must lie in [0, 0.5)")
    if args.rounds < 1:
        raise UsageError("--rounds must be >= 1")
    schedule = build_round_schedule(build_layout(args.d, Boundary(args.boundary)), idle_noise=not args.no_idle)
    nest = build_nest(
        schedule, args.rounds, args.p, args.sector.upper(), closed=args.closed, aggregate=args.aggregate,
        strict=False,
    )
    _write(export_nest(nest), args.out)
    return EXIT_OK


def cmd_nest_verify(args) -> int:
    try:
        with open(args.file) as fh:
            nest = import_nest(fh.read())
    except (OSError, NestParseError, ValueError) as exc:
        raise UsageError(f"cannot read {args.file}: {exc}") from None
    ok = True
    lines = [
        f"nest: d={nest.layout.distance} {nest.layout.boundary.value} sector={nest.sector} "
        f"rounds={nest.rounds} sticks={len(nest)}"
    ]
    zz = verify_no_zigzag(nest)
    lines.append(f"zigzag: {'pass' if not zz else 'FAIL ' + str([v['class'] for v in zz])}")
    ok &= not zz
    deg = degree_violations(nest)
    lines.append(f"max sticks per node: {max_degree(nest)} ({'pass' if not deg else 'FAIL'})")
    ok &= not deg
    if nest.layout.cyclic and nest.rounds >= 3:
        lr = count_min_nontrivial_cycles(nest, "left-right")
        tb = count_min_nontrivial_cycles(nest, "top-bottom")
        d = nest.layout.distance
        good = lr == d and tb == d
        lines.append(f"minimum nontrivial cycles: left-right: {lr}, top-bottom: {tb} ({'pass' if good else 'FAIL'})")
        ok &= good
    if args.golden:
        try:
            with open(args.golden) as fh:
                ref = import_nest(fh.read())
        except (OSError, NestParseError, ValueError) as exc:
            raise UsageError(f"cannot read {args.golden}: {exc}") from None
        rep = diff_nests(nest, ref, args.tol)
        lines.append(
            f"golden: missing={len(rep['missing'])} extra={len(rep['extra'])} "
            f"max_abs_diff={rep['max_abs_diff']:.3e} tol={args.tol:g} ({'pass' if rep['ok'] else 'FAIL'})"
        )
        ok &= rep["ok"]
    lines.append("result: " + ("pass" if ok else "FAIL"))
    print("\n".join(lines))
    return EXIT_OK if ok else EXIT_FAIL


def simulate_records(args) -> list[dict]:
    ds = _ints(args.d)
    ps = _floats(args.p)
    if not ds or not ps:
        raise UsageError("--d and --p need at least one value")
    if any(d < 2 for d in ds):
        raise UsageError("every d must be >= 2")
    if any(not 0 < p < 0.5 for p in ps):
        raise UsageError("every p must lie in (0, 0.5)")
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    seed = args.seed if args.seed is not None else _env_int("NESTLAB_SEED", 0)
    threads = args.threads if args.threads is not None else _env_int("NESTLAB_THREADS", 1)
    sectors = {"x": "X", "z": "Z", "both": "both"}[args.sector]
    records = []
    for d in ds:
        for p in ps:
            cfg = TrialConfig(
                d, args.boundary, p, args.trials, seed=seed, rounds=args.rounds, sectors=sectors,
                chunk=args.chunk, target_failures=args.target_failures,
            )
            est = estimate_rates(cfg, threads=threads)
            for label, r in est.classes.items():
                records.append({
                    "d": d, "boundary": args.boundary, "p": p, "class": label, "failures": r.failures,
                    "trials": r.trials, "rounds": r.rounds, "rate": r.per_round_rate, "ci_low": r.ci_low,
                    "ci_high": r.ci_high, "seed": seed,
                })
    return records


def format_csv(records: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def cmd_simulate(args) -> int:
    records = simulate_records(args)
    if args.format == "json":
        text = json.dumps(records, indent=1) + "\n"
    else:
        text = format_csv(records)
    _write(text, args.out)
    return EXIT_OK


def cmd_asymptote(args) -> int:
    if args.check_table1:
        rows = analytics.check_table1(tol=args.tol)
        print("d,class,computed,table,rel_dev,ok")
        for r in rows:
            print(f"{r['d']},{r['class']},{r['computed']:.4g},{r['table']:.3g},{r['rel_dev']:.2e},{'yes' if r['ok'] else 'NO'}")
        return EXIT_OK if all(r["ok"] for r in rows) else EXIT_FAIL
    if args.d is None:
        raise UsageError("--d is required unless --check-table1 is given")
    ds = _ints(args.d)
    if args.mode == "eq1" and any(d % 2 or d < 2 for d in ds):
        raise UsageError(f"eq1 mode needs even d >= 2, got {args.d}")
    if args.p is None:
        raise UsageError("--p is required unless --check-table1 is given")
    ps = _floats(args.p)
    print("d,p,value")
    for d in ds:
        for p in ps:
            if args.mode == "eq1":
                val = analytics.eq1_cyclic_asymptote(d, args.eps_coeff * p)
            else:
                if args.A is None:
                    raise UsageError("table mode needs --A")
                val = analytics.power_law_curve(args.A, d, p)
            print(f"{d},{p:g},{val:.6g}")
    return EXIT_OK


def cmd_bound(args) -> int:
    try:
        total = analytics.total_upper_bound(args.d, args.eps)
    except analytics.DivergenceError as exc:
        raise UsageError(str(exc)) from None
    except analytics.UnsupportedDistance as exc:
        raise UsageError(str(exc)) from None
    print(f"B={analytics.bound_prefactor(args.d, args.eps):.6g}")
    print(f"bound={total:.6g}")
    return EXIT_OK


def describe_ratio(r: float) -> str:
    if r >= 10 ** 1.5:
        return ">1 order of magnitude"
    if r >= 10:
        return "over a factor of 10"
    if r > 1:
        return "below a factor of 10"
    return "no discrepancy"


def _load_results(path: str) -> list[dict]:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(str(exc)) from None
    if not text.strip():
        raise UsageError(f"{path} is empty")
    if text.lstrip().startswith("["):
        rows = json.loads(text)
    else:
        rows = list(csv.DictReader(io.StringIO(text)))
    if not rows:
        raise UsageError(f"{path} has no records")
    missing = [c for c in CSV_FIELDS if c not in rows[0]]
    if missing:
        raise UsageError(f"{path} lacks columns {missing}")
    out = []
    for r in rows:
        out.append({
            "d": int(r["d"]), "boundary": str(r["boundary"]), "p": float(r["p"]), "class": str(r["class"]),
            "rate": float(r["rate"]), "ci_low": float(r["ci_low"]), "ci_high": float(r["ci_high"]),
            "failures": int(r["failures"]),
        })
    return out


def asymptote_for(d: int, label: str, p: float) -> Optional[float]:
    """Leading-order prediction: the table for planar classes, cycle counting for cyclic."""
    if label in analytics.EPS_COEFF:
        if d % 2:
            return None
        return analytics.eq1_cyclic_asymptote(d, analytics.EPS_COEFF[label] * p)
    if d in analytics.TABLE1:
        return analytics.power_law_curve(analytics.TABLE1[d][label], d, p)
    return None


# planar class, cyclic class with the same leading structure
MC_PAIRS = (("X", "X1"), ("Z", "Z1"))
ANALYTIC_PAIRS = (("X", "Z2"), ("Z", "X2"))


def cmd_compare(args) -> int:
    lines = []
    if args.results:
        rows = _load_results(args.results)
        lines.append("d,boundary,p,class,rate,asymptote,ratio")
        for r in rows:
            a = asymptote_for(r["d"], r["class"], r["p"])
            ratio = r["rate"] / a if a else math.nan
            a_txt = f"{a:.4g}" if a else "n/a"
            lines.append(f"{r['d']},{r['boundary']},{r['p']:g},{r['class']},{r['rate']:.4g},{a_txt},{ratio:.3g}")
        by = {(r["d"], r["p"], r["class"]): r for r in rows}
        lines.append("")
        lines.append("measured planar/cyclic: d,p,planar,cyclic,ratio,ci_separated")
        for (d, p, label), r in sorted(by.items()):
            for planar, cyc in MC_PAIRS:
                if label == planar and (d, p, cyc) in by:
                    c = by[(d, p, cyc)]
                    ratio = r["rate"] / c["rate"] if c["rate"] > 0 else math.inf
                    sep = c["ci_high"] < r["ci_low"]
                    lines.append(f"{d},{p:g},{planar},{cyc},{ratio:.3g},{'yes' if sep else 'no'}")
    ds = _ints(args.d) if args.d else sorted(analytics.TABLE1)
    if lines:
        lines.append("")
    lines.append("analytic prefactor ratio: d,planar,cyclic,ratio,verdict")
    growth = {}
    for planar, cyc in ANALYTIC_PAIRS:
        seq = []
        for d in ds:
            if d not in analytics.TABLE1:
                continue
            r = analytics.discrepancy_ratio(d, planar, cyc)
            seq.append(r)
            lines.append(f"{d},{planar},{cyc},{r:.3g},{describe_ratio(r)}")
        growth[f"{planar}/{cyc}"] = len(seq) > 1 and all(b > a for a, b in zip(seq, seq[1:]))
    for k, v in growth.items():
        lines.append(f"discrepancy {k} grows with d: {'yes' if v else 'no'}")
    print("\n".join(lines))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nestlab", description="Surface-code nests, matching decoding and logical error rates.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("nest-gen", help="generate a nest and print it in the text format")
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--boundary", choices=[b.value for b in Boundary], required=True)
    g.add_argument("--rounds", type=int, default=7)
    g.add_argument("--p", type=float, required=True)
    g.add_argument("--sector", choices=["x", "z", "X", "Z"], default="x")
    g.add_argument("--aggregate", choices=["sum", "xor"], default="sum")
    g.add_argument("--closed", action="store_true", help="append a noiseless readout round")
    g.add_argument("--no-idle", action="store_true", help="disable idle-step noise")
    g.add_argument("--out", default=None)
    g.set_defaults(func=cmd_nest_gen)

    v = sub.add_parser("nest-verify", help="zigzag, degree and cycle checks; optional golden diff")
    v.add_argument("file")
    v.add_argument("--golden", default=None)
    v.add_argument("--tol", type=float, default=5e-4)
    v.set_defaults(func=cmd_nest_verify)

    s = sub.add_parser("simulate", help="Monte Carlo logical error rates")
    s.add_argument("--d", required=True, help="distance list, e.g. '3,4'")
    s.add_argument("--boundary", choices=[b.value for b in Boundary], required=True)
    s.add_argument("--p", required=True, help="physical error rate list")
    s.add_argument("--trials", type=int, default=10_000)
    s.add_argument("--rounds", type=int, default=None, help="rounds per block (default 2d)")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--sector", choices=["x", "z", "both"], default="both")
    s.add_argument("--threads", type=int, default=None)
    s.add_argument("--chunk", type=int, default=10_000)
    s.add_argument("--target-failures", type=int, default=None)
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("asymptote", help="low-p asymptotic curves")
    a.add_argument("--mode", choices=["eq1", "table"], default="eq1")
    a.add_argument("--d", default=None)
    a.add_argument("--p", default=None)
    a.add_argument("--eps-coeff", type=float, default=4.8)
    a.add_argument("--A", type=float, default=None)
    a.add_argument("--check-table1", action="store_true")
    a.add_argument("--tol", type=float, default=5e-3)
    a.set_defaults(func=cmd_asymptote)

    b = sub.add_parser("bound", help="stick-path upper bound")
    b.add_argument("--d", type=int, required=True)
    b.add_argument("--eps", type=float, required=True)
    b.set_defaults(func=cmd_bound)

    c = sub.add_parser("compare", help="measured versus asymptotic rates and planar/cyclic ratios")
    c.add_argument("--results", default=None)
    c.add_argument("--d", default=None)
    c.set_defaults(func=cmd_compare)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, InvalidParameter, ValueError) as exc:
        print(f"nestlab {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
