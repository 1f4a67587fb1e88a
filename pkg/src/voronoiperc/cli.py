"""Batch experiment runner.

One experiment per invocation; flags can also come from a flat key=value
config file (--config), with explicit flags taking precedence.  Numeric
output is a pure function of (parameters, seed) and of nothing else.

Exit codes: 0 ok, 1 invalid input, 2 unresolved computation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import kernels
from .config import Configuration, Rect, sample_configuration
from .crossing import has_blue_horizontal_crossing, has_red_vertical_crossing
from .exact import (algorithm_query_stats, check_influence_upper_bound,
                    check_margulis_russo, check_osss, check_schramm_steif,
                    exact_function_table, sample_positions_instance)
from .explore import estimate_revealment
from .io import ResultRecord, ResultSet
from .mc import (MCEstimate, WindowUnresolvedError, conditional_variance,
                 crossing_probability, large_cell_probability,
                 max_revealment_samples, noise_correlation, one_arm_probability,
                 replica_rng, revealment_tail, srs_disagreement,
                 threshold_window)
from .perturb import two_stage_sample
from .raster import UnresolvedAtCapError, raster_crossing_oracle

__all__ = ["main"]

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_UNRESOLVED = 2


class CliError(Exception):
    def __init__(self, kind: str, message: str, code: int):
        super().__init__(message)
        self.kind = kind
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("invalid-config", message, EXIT_INVALID)


def _parse_grid(text: str) -> np.ndarray:
    """'lo:hi:step' or comma-separated values."""
    if ":" in text:
        lo, hi, step = (float(t) for t in text.split(":"))
        count = int(round((hi - lo) / step)) + 1
        return np.round(lo + step * np.arange(count), 12)
    return np.asarray([float(t) for t in text.split(",")])


def _threads(args) -> int:
    env = os.environ.get("VORONOIPERC_THREADS")
    if env:
        return max(1, int(env))
    return max(1, args.threads)


def _common(sub, reps_default=1000):
    sub.add_argument("--n", type=float, default=1000.0, help="Poisson intensity")
    sub.add_argument("--p", type=float, default=0.5, help="blue probability")
    sub.add_argument("--eps", type=float, default=0.1, help="noise level")
    sub.add_argument("--k", type=float, default=4.0, help="two-stage density factor")
    sub.add_argument("--reps", type=int, default=reps_default)
    sub.add_argument("--seed", type=int, default=0, help="64-bit master seed")
    sub.add_argument("--threads", type=int, default=1)
    sub.add_argument("--out", type=str, default=None, help="output path (default stdout)")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--rect", type=str, default="0,1,0,1", help="a,b,c,d")


def build_parser() -> _Parser:
    ap = _Parser(prog="voronoiperc",
                 description="Voronoi percolation experiments on the unit square")
    ap.add_argument("--config", type=str, default=None,
                    help="flat key=value file mirroring the flags")
    subs = ap.add_subparsers(dest="command", required=True)

    sp = subs.add_parser("sample", help="write one sampled configuration")
    _common(sp)
    sp.add_argument("--as", dest="as_", choices=("csv", "frame"), default="csv")

    for name, extra in [
        ("crossing-prob", []),
        ("noise-corr", ["kind"]),
        ("cond-var", ["outer", "inner"]),
        ("threshold", ["eps-level", "p-grid", "reps-per-point"]),
        ("one-arm", ["center"]),
        ("large-cell", []),
        ("revealment", ["dense-reps", "inner", "threshold", "emit-trace"]),
        ("srs", []),
        ("exact-suite", ["instances", "coins"]),
        ("validate", []),
    ]:
        sp = subs.add_parser(name)
        _common(sp)
        if "kind" in extra:
            sp.add_argument("--kind", choices=("eps_noise", "color", "position",
                                               "thin_couple"), default="eps_noise")
        if "outer" in extra:
            sp.add_argument("--outer-reps", type=int, default=512)
        if "inner" in extra:
            sp.add_argument("--inner-reps", type=int, default=32)
        if "eps-level" in extra:
            sp.add_argument("--eps-level", type=float, default=0.25)
        if "p-grid" in extra:
            sp.add_argument("--p-grid", type=str, default="0.40:0.60:0.01")
        if "reps-per-point" in extra:
            sp.add_argument("--reps-per-point", type=int, default=2000)
        if "center" in extra:
            sp.add_argument("--center", type=str, default="0.5,0.5")
        if "dense-reps" in extra:
            sp.add_argument("--dense-reps", type=int, default=50)
        if "threshold" in extra:
            sp.add_argument("--threshold", type=float, default=None)
        if "emit-trace" in extra:
            sp.add_argument("--emit-trace", type=str, default=None,
                            help="write the first exploration trace as JSON")
        if "instances" in extra:
            sp.add_argument("--instances", type=int, default=20)
        if "coins" in extra:
            sp.add_argument("--coins", type=int, default=8)

    sp = subs.add_parser("plot", help="render results or traces as SVG")
    sp.add_argument("--input", type=str, required=True)
    sp.add_argument("--kind", choices=("curve", "trace"), default="curve")
    sp.add_argument("--out", type=str, required=True)
    return ap


def _apply_config_file(argv: list[str]) -> list[str]:
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    path = argv[i + 1]
    injected = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key == "command":
                continue
            injected += [f"--{key}", value]
    head = argv[:i] + argv[i + 2:]
    # config-file values first so explicit flags override them
    return head[:1] + injected + head[1:] if head else injected


def _emit(rs: ResultSet, args) -> None:
    text = rs.to_csv() if args.format == "csv" else rs.to_json()
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _run_validate(args, rect: Rect, threads: int) -> ResultSet:
    """Duality and oracle sweep over independent configurations."""
    xor_ok = 0
    oracle_ok = 0
    unresolved = 0
    reps = args.reps
    for r in range(reps):
        rng = replica_rng(args.seed, r)
        cfg = sample_configuration(args.n, args.p, rng)
        bh = has_blue_horizontal_crossing(cfg, rect)
        rv = has_red_vertical_crossing(cfg, rect)
        xor_ok += (bh != rv)
        try:
            res = raster_crossing_oracle(cfg, rect)
            oracle_ok += (res.blue_horizontal == bh)
        except UnresolvedAtCapError:
            unresolved += 1
    rs = ResultSet(seed=args.seed)
    rs.add(ResultRecord(op="validate_xor", params={"n": args.n, "p": args.p},
                        mean=xor_ok / reps, std_error=0.0, reps=reps))
    rs.add(ResultRecord(op="validate_oracle",
                        params={"n": args.n, "p": args.p, "unresolved": unresolved},
                        mean=oracle_ok / max(1, reps - unresolved),
                        std_error=0.0, reps=reps))
    if unresolved:
        raise CliError("unresolved-oracle",
                       f"{unresolved} of {reps} oracle runs hit the resolution cap",
                       EXIT_UNRESOLVED)
    return rs


def _run_exact_suite(args, rect: Rect) -> ResultSet:
    rs = ResultSet(seed=args.seed)
    rng = replica_rng(args.seed, 0)
    for i in range(args.instances):
        count = int(rng.integers(4, 13))
        inst = sample_positions_instance(count, rng)
        table = exact_function_table(inst, rect)
        stats = algorithm_query_stats(inst, rect, p=args.p, coins=args.coins,
                                      seed=args.seed + i + 1)
        mr = check_margulis_russo(table, args.p)
        osss = check_osss(table, stats, args.p)
        ounds = check_influence_upper_bound(table, stats.delta_max, args.p,
                                            stats.delta_max_se)
        ss_worst = None
        for m in range(1, 11):
            for eps in (0.1, 0.3):
                rep = check_schramm_steif(table, stats.delta_max, eps, m,
                                          args.p, stats.delta_max_se)
                if ss_worst is None or rep.slack < ss_worst.slack:
                    ss_worst = rep
        for name, rep in (("margulis_russo", mr), ("osss", osss),
                          ("influence_bound", ounds), ("schramm_steif", ss_worst)):
            rs.add(ResultRecord(op=f"exact_{name}",
                                params={"instance": i, "bits": count,
                                        "holds": bool(rep.holds)},
                                mean=rep.slack, std_error=0.0, reps=1))
    return rs


def run(argv: list[str]) -> int:
    argv = _apply_config_file(argv)
    args = build_parser().parse_args(argv)
    threads = _threads(args) if hasattr(args, "threads") else 1
    rect = Rect.parse(args.rect) if hasattr(args, "rect") else Rect.unit()

    if args.command == "plot":
        from .plotting import results_curve_svg, trace_svg
        with open(args.input) as f:
            text = f.read()
        if not text.strip():
            raise CliError("invalid-config", "empty input", EXIT_INVALID)
        if args.kind == "trace":
            svg = trace_svg(text)
        else:
            if text.lstrip().startswith("{"):
                rs = ResultSet.parse_json(text)
            else:
                rs = ResultSet.parse_csv(text)
            if not rs.records:
                raise CliError("invalid-config", "no records to plot", EXIT_INVALID)
            svg = results_curve_svg(rs)
        with open(args.out, "w") as f:
            f.write(svg)
        return EXIT_OK

    if args.command == "sample":
        cfg = sample_configuration(args.n, args.p, replica_rng(args.seed, 0))
        if args.as_ == "frame":
            payload = cfg.to_frame()
            if args.out:
                with open(args.out, "wb") as f:
                    f.write(payload)
            else:
                sys.stdout.buffer.write(payload)
        else:
            if args.out:
                cfg.to_csv(args.out)
            else:
                cfg.to_csv(sys.stdout)
        return EXIT_OK

    rs = ResultSet(seed=args.seed)
    if args.command == "crossing-prob":
        rs.add_estimate(crossing_probability(args.n, args.p, rect, args.reps,
                                             args.seed, threads))
    elif args.command == "noise-corr":
        rs.add_estimate(noise_correlation(args.n, args.p, args.eps, rect,
                                          args.reps, args.kind, args.seed, threads))
    elif args.command == "cond-var":
        rs.add_estimate(conditional_variance(args.n, args.k, args.p, rect,
                                             args.outer_reps, args.inner_reps,
                                             args.seed, threads))
    elif args.command == "threshold":
        try:
            win = threshold_window(args.n, args.eps_level, rect,
                                   _parse_grid(args.p_grid), args.reps_per_point,
                                   args.seed, threads)
        except WindowUnresolvedError as e:
            raise CliError("unresolved-window", str(e), EXIT_UNRESOLVED)
        rs.add_window(win, args.n)
    elif args.command == "one-arm":
        center = tuple(float(t) for t in args.center.split(","))
        rs.add_estimate(one_arm_probability(args.n, center, args.reps,
                                            args.seed, args.p, threads))
    elif args.command == "large-cell":
        rs.add_estimate(large_cell_probability(args.n, args.reps, args.seed,
                                               threads))
    elif args.command == "revealment":
        if args.emit_trace:
            from .explore import run_algorithm
            rng = replica_rng(args.seed, 0)
            ts = two_stage_sample(args.n, args.k, args.p, rng)
            tr = run_algorithm(ts, rect, rng)
            with open(args.emit_trace, "w") as f:
                f.write(tr.to_json(xy=ts.dense.xy))
        if args.threshold is not None:
            rs.add_estimate(revealment_tail(args.n, args.k, rect, args.dense_reps,
                                            args.inner_reps, args.threshold,
                                            args.seed, threads))
        else:
            samples = max_revealment_samples(args.n, args.k, rect, args.dense_reps,
                                             args.inner_reps, args.seed, threads)
            rs.add(ResultRecord(op="max_revealment",
                                params={"n": args.n, "k": args.k,
                                        "median": float(np.median(samples)),
                                        "dense_reps": args.dense_reps,
                                        "inner_reps": args.inner_reps},
                                mean=float(samples.mean()),
                                std_error=float(samples.std(ddof=1)
                                                / max(1.0, len(samples) ** 0.5)),
                                reps=len(samples)))
    elif args.command == "srs":
        rs.add_estimate(srs_disagreement(args.n, args.eps, rect, args.reps,
                                         args.seed, threads))
    elif args.command == "exact-suite":
        rs = _run_exact_suite(args, rect)
    elif args.command == "validate":
        rs = _run_validate(args, rect, threads)
    else:
        raise CliError("invalid-config", f"unknown command {args.command}",
                       EXIT_INVALID)
    _emit(rs, args)
    return EXIT_OK


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        return run(argv)
    except CliError as e:
        sys.stderr.write(json.dumps({"error": e.kind, "message": str(e)}) + "\n")
        return e.code
    except (ValueError, OSError) as e:
        sys.stderr.write(json.dumps({"error": "invalid-config",
                                     "message": str(e)}) + "\n")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
