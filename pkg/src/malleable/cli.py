"""Command-line entry point.

Every report echoes the resolved configuration. Numbers are written with 12
significant digits, so identical inputs, flags and seed give identical bytes.
Exit codes: 0 success, 2 invalid input, 3 resource limit exceeded.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import ib as ibmod
from .codec import CodecConfig, simulate, simulate_uniform_binning
from .common import gacs_korner, gk_report
from .dist import (
    conditional_entropy_x_given_y, conditional_entropy_y_given_x, entropy_x, entropy_y,
    joint_entropy, marginal_x, marginal_y, mutual_information,
)
from .errors import MalleableError, ResourceLimitError, ValidationError
from .io import dumps_csv, dumps_json, fmt, load_distribution
from .partitions import EXACT_SEARCH_LIMIT, Partition
from .solver import (
    bound_violations, check_slope_bounds, exact_curve, heuristic_curve, is_minimal,
    minimal_sufficient_statistic, simple_bounds,
)
from .typicality import (
    TypicalSpec, check_conditional_sizes, check_joint_typical_set, check_typical_size,
    verify_markov_lemma,
)

EXIT_OK, EXIT_INVALID, EXIT_LIMIT, EXIT_FAILURE = 0, 2, 3, 1


class Report:
    """A result mapping plus an optional primary table for CSV output."""

    def __init__(self, result: dict, table=None):
        self.result = result
        self.table = table  # (header, rows) or None


def _labels(d, support):
    return [d.alphabet_x.symbols[x] for x in support]


def _partition_arg(d, text):
    support = d.support_x()
    if text is None:
        return minimal_sufficient_statistic(d).partition
    if text == "identity":
        return Partition.identity(support)
    if text == "trivial":
        return Partition.trivial(support)
    return Partition.from_canonical(support, text)


def _cells(d, part: Partition):
    return [[d.alphabet_x.symbols[x] for x in cell] for cell in part.cells]


def _point_dict(d, pt):
    out = {"j": pt.j, "l": pt.l, "m": pt.m}
    out["partition"] = pt.partition.canonical_form if pt.partition else "time-shared"
    return out


def _curve(d, args):
    if args.heuristic:
        return heuristic_curve(d, restarts=args.restarts, seed=args.seed)
    return exact_curve(d, max_cells=args.max_cells, limit=args.limit, workers=args.threads)


def cmd_stats(d, args) -> Report:
    result = {
        "h_x": entropy_x(d), "h_y": entropy_y(d), "h_xy": joint_entropy(d),
        "h_y_given_x": conditional_entropy_y_given_x(d),
        "h_x_given_y": conditional_entropy_x_given_y(d),
        "mutual_information": mutual_information(d),
        "support_x": _labels(d, d.support_x()),
        "support_y": [d.alphabet_y.symbols[y] for y in d.support_y()],
        "marginal_x": marginal_x(d).tolist(), "marginal_y": marginal_y(d).tolist(),
    }
    return Report(result)


def cmd_curve(d, args) -> Report:
    curve = _curve(d, args)
    slopes = check_slope_bounds(curve)
    envelope = [_point_dict(d, v) for v in curve.vertices]
    result = {
        "exact": curve.exact, "envelope_kind": "single_letter_partitions",
        "support": _labels(d, curve.support),
        "num_raw_points": int(len(curve.raw_j)), "envelope": envelope,
        "h_w": curve.h_w, "h_yw": curve.h_yw, "h_y_given_w": curve.sufficient.h_y_given_w,
        "h_x": curve.h_x, "h_y": curve.h_y, "h_xy": curve.h_xy, "slopes": list(slopes.slopes),
        "slopes_within_unit_interval": slopes.ok,
        "bound_violations": bound_violations(d, curve),
    }
    rows = []
    if not args.envelope_only:
        raw = [_point_dict(d, p) for p in curve.raw_points]
        for p, on in zip(raw, curve.on_envelope()):
            p["on_envelope"] = bool(on)
        result["raw_points"] = raw
        rows += [("raw", p["j"], p["l"], p["m"], p["partition"], p["on_envelope"]) for p in raw]
    rows += [("vertex", p["j"], p["l"], p["m"], p["partition"], True) for p in envelope]
    return Report(result, (["kind", "j", "l", "m", "partition", "on_envelope"], rows))


def cmd_suffstat(d, args) -> Report:
    stat = minimal_sufficient_statistic(d, row_tol=args.row_tol)
    result = {
        "partition": stat.partition.canonical_form, "cells": _cells(d, stat.partition),
        "h_w": stat.entropy, "h_y_given_w": stat.h_y_given_w, "h_yw": stat.h_yw,
        "h_y_given_x": conditional_entropy_y_given_x(d),
        "minimal": is_minimal(d, stat, row_tol=args.row_tol),
    }
    return Report(result)


def cmd_gk(d, args) -> Report:
    rep = gk_report(d)
    rows = [(i, " ".join(c["x"]), " ".join(c["y"]), p)
            for i, (c, p) in enumerate(zip(rep["components"], rep["component_probs"]))]
    return Report(rep, (["component", "x_symbols", "y_symbols", "probability"], rows))


def _beta_grid(args):
    return ibmod.default_beta_grid(args.betas, args.beta_min, args.beta_max)


def _sweep(d, args):
    """(best point per beta, every (beta, restart) point)."""
    return ibmod.sweep_beta(d, _beta_grid(args), restarts=args.restarts, seed=args.seed,
                            u_card=args.u_card, max_iter=args.max_iter, tol=args.tol,
                            return_all=True)


def cmd_ib(d, args) -> Report:
    points, every = _sweep(d, args)
    h_y = entropy_y(d)
    env = ibmod.ib_envelope(every, h_y)
    result = {
        "points": [p.as_dict() for p in points],
        "envelope": {"rates": list(env.rates), "values": list(env.values)},
        "h_y": h_y, "identity_gap": ibmod.identity_gap(every, h_y),
        "predictive_ceiling": ibmod.predictive_ceiling(d),
        "nonconverged": sum(not p.converged for p in points),
    }
    header = ["beta", "i_ux", "i_yu", "h_y_given_u", "converged", "iterations", "F", "B"]
    rows = [(p.beta, p.i_ux, p.i_yu, p.h_y_given_u, p.converged, p.iterations,
             env.F(p.i_ux), env.B(p.i_ux)) for p in points]
    return Report(result, (header, rows))


def _check_dict(chk):
    return {"passed": chk.passed, **chk.details}


def cmd_lemmas(d, args) -> Report:
    spec = TypicalSpec(args.n, args.delta)
    part = _partition_arg(d, args.partition or "identity")
    markov = verify_markov_lemma(d, part, TypicalSpec(args.markov_n, args.markov_delta),
                                 trials=args.trials, seed=args.seed)
    result = {
        "typical_size_x": _check_dict(check_typical_size(marginal_x(d), spec, d.log_base)),
        "typical_size_y": _check_dict(check_typical_size(marginal_y(d), spec, d.log_base)),
        "joint_typical_set": _check_dict(check_joint_typical_set(d, spec)),
        "conditional_sizes": _check_dict(check_conditional_sizes(d, spec)),
        "markov_chain": {"partition": part.canonical_form, "estimate": markov.estimate,
                   "conditioning_events": markov.conditioning_events,
                   "joint_events": markov.joint_events, "trials": markov.trials,
                   "delta": markov.delta, "conclusion_delta": markov.conclusion_delta,
                   "passed": markov.passed},
    }
    return Report(result)


def cmd_simulate(d, args) -> Report:
    part = _partition_arg(d, args.partition)
    cfg = CodecConfig(d, part, args.n, args.delta, args.storage_base, args.seed)
    keep = args.trace is not None
    result = {"partition": part.canonical_form, "cells": _cells(d, part)}
    reports = {}
    if args.scheme in ("structured", "both"):
        reports["structured"] = simulate(cfg, args.trials, workers=args.threads, keep_trace=keep)
    if args.scheme in ("uniform", "both"):
        reports["uniform_binning"] = simulate_uniform_binning(cfg, args.trials,
                                                              workers=args.threads, keep_trace=keep)
    for name, rep in reports.items():
        result[name] = rep.as_dict()
    if keep:
        header = ["scheme", "trial", "escape_x", "escape_y", "prefix_match",
                  "x_suffix_len", "y_suffix_len", "roundtrip_ok"]
        rows = [(name, *o.as_dict().values()) for name, rep in reports.items() for o in rep.outcomes]
        with open(args.trace, "w", newline="") as fh:
            fh.write(dumps_csv(header, rows))
    return Report(result)


def cmd_compare(d, args) -> Report:
    curve = _curve(d, args)
    _, every = _sweep(d, args)
    h_y = entropy_y(d)
    env = ibmod.ib_envelope(every, h_y)
    dec = gacs_korner(d)
    h_x = entropy_x(d)
    grid = set(np.linspace(0.0, h_x, args.grid).round(12).tolist())
    grid |= {round(v.j, 12) for v in curve.vertices}
    js = np.array(sorted(grid))
    ls = curve.evaluate(js)
    fa, fb, fc = simple_bounds(d, js)
    f = env.F(js)
    table = [{"j": j, "envelope_l": l, "envelope_m": l - j, "ib_F": fv,
              "bound_a": a, "bound_b": b, "bound_c": c}
             for j, l, fv, a, b, c in zip(js, ls, f, fa, fb, fc)]
    result = {
        "table": table,
        "corner_points": {"j0": 0.0, "l_at_j0": curve.evaluate(0.0),
                          "j_max": h_x, "l_at_j_max": curve.evaluate(h_x),
                          "h_y": h_y, "h_xy": joint_entropy(d)},
        "h_w": curve.h_w, "h_yw": curve.h_yw, "exact": curve.exact,
        "common_information": dec.c_value, "gk_converse_m": h_y - dec.c_value,
        "ib_below_exact": all(r["ib_F"] <= r["envelope_m"] + ibmod.IDENTITY_TOL for r in table),
        "bound_violations": bound_violations(d, curve),
    }
    header = ["j", "envelope_l", "envelope_m", "ib_F", "bound_a", "bound_b", "bound_c"]
    return Report(result, (header, [[r[k] for k in header] for r in table]))


COMMANDS = {
    "stats": cmd_stats, "curve": cmd_curve, "suffstat": cmd_suffstat, "gk": cmd_gk,
    "ib": cmd_ib, "lemmas": cmd_lemmas, "simulate": cmd_simulate, "compare": cmd_compare,
}


def _add_curve_flags(p):
    p.add_argument("--limit", type=int, default=EXACT_SEARCH_LIMIT,
                   help="largest X-support searched exhaustively")
    p.add_argument("--max-cells", type=int, default=None)
    p.add_argument("--heuristic", action="store_true", help="greedy search for large supports")
    p.add_argument("--restarts", type=int, default=10)


def _add_ib_flags(p, restarts=True):
    p.add_argument("--betas", type=int, default=50, help="number of log-spaced beta values")
    p.add_argument("--beta-min", type=float, default=0.01)
    p.add_argument("--beta-max", type=float, default=100.0)
    if restarts:
        p.add_argument("--restarts", type=int, default=ibmod.DEFAULT_RESTARTS)
    p.add_argument("--u-card", type=int, default=None)
    p.add_argument("--max-iter", type=int, default=ibmod.MAX_ITER)
    p.add_argument("--tol", type=float, default=ibmod.CONV_TOL)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", help="joint distribution as JSON or CSV")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", default=None, help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1, help="worker cap; results do not depend on it")
    common.add_argument("--log-base", type=float, default=None, help="override the input's log base")

    parser = argparse.ArgumentParser(prog="malleable",
                                     description="Reuse/malleability trade-offs of finite sources.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    sub.add_parser("stats", parents=[common], help="entropies and marginals")
    p = sub.add_parser("curve", parents=[common], help="partition points and lower envelope")
    _add_curve_flags(p)
    p.add_argument("--envelope-only", action="store_true")
    p = sub.add_parser("suffstat", parents=[common], help="minimal sufficient statistic")
    p.add_argument("--row-tol", type=float, default=1e-9)
    sub.add_parser("gk", parents=[common], help="common information from the support graph")
    p = sub.add_parser("ib", parents=[common], help="information-bottleneck sweep")
    _add_ib_flags(p)
    p = sub.add_parser("lemmas", parents=[common], help="typical-set checks")
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--markov-n", type=int, default=64)
    p.add_argument("--markov-delta", type=float, default=0.1)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--partition", default=None, help="identity, trivial or a form like 0-1-0-1")
    p = sub.add_parser("simulate", parents=[common], help="codec Monte-Carlo")
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--storage-base", type=int, default=2)
    p.add_argument("--partition", default=None,
                   help="identity, trivial or a form like 0-1-0-1 (default: sufficient statistic)")
    p.add_argument("--scheme", choices=("structured", "uniform", "both"), default="structured")
    p.add_argument("--trace", default=None, help="per-trial CSV path")
    p = sub.add_parser("compare", parents=[common], help="exact, relaxed and bound curves side by side")
    _add_curve_flags(p)
    _add_ib_flags(p, restarts=False)
    p.add_argument("--grid", type=int, default=11, help="evenly spaced j values added to the vertices")
    return parser


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items())}


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}{k}.")
    elif isinstance(obj, (list, tuple)) and any(isinstance(v, (dict, list, tuple)) for v in obj):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}{i}.")
    elif isinstance(obj, (list, tuple)):
        yield prefix[:-1], " ".join(fmt(v) if not isinstance(v, str) else v for v in obj)
    else:
        yield prefix[:-1], obj


def render(report: Report, args) -> str:
    if args.format == "json":
        return dumps_json({"config": _config(args), "result": report.result})
    lines = [f"# {k}={'' if v is None else (v if isinstance(v, str) else fmt(v))}"
             for k, v in _config(args).items()]
    if report.table is None:
        body = dumps_csv(["field", "value"], list(_flatten(report.result)))
    else:
        scalars = {k: v for k, v in report.result.items()
                   if not isinstance(v, (dict, list, tuple))}
        lines += [f"# {k}={v if isinstance(v, str) else fmt(v)}" for k, v in scalars.items()]
        body = dumps_csv(*report.table)
    return "\n".join(lines) + "\n" + body


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.threads < 1:
            raise ValidationError("--threads must be >= 1")
        d = load_distribution(args.input, args.log_base)
        report = COMMANDS[args.subcommand](d, args)
        text = render(report, args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except MalleableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
