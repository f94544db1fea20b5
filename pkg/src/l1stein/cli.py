"""Command-line entry point: ``python -m l1stein <verb> ...``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import experiment, metrics
from .experiment import ScenarioConfig
from .zerobias import e_abs_zero_bias, zero_bias_cdf


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, (dict, list, tuple)):
        return json.dumps(v, sort_keys=True)
    return "" if v is None else str(v)


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def write_records(records, fmt, out=None):
    """JSON: one object per record (an array if several). CSV: one row each."""
    records = list(records)
    if fmt == "json":
        body = records[0] if len(records) == 1 else records
        text = json.dumps(body, indent=2, default=_json_default) + "\n"
    else:
        cols = list(records[0].keys()) if records else []
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in records:
            w.writerow([_fmt(r.get(c)) for c in cols])
        text = buf.getvalue()
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _scenario_config(args, kind=None, **params) -> ScenarioConfig:
    d = experiment.load_config(args.config) if args.config else {}
    if kind:
        d["kind"] = kind
    d.update({k: v for k, v in params.items() if v is not None})
    if args.seed is not None:
        d["seed"] = args.seed
    if args.reps is not None:
        d["reps"] = args.reps
    if getattr(args, "workers", None):
        d["workers"] = args.workers
    if "kind" not in d:
        raise SystemExit("scenario kind missing: pass --config with a 'kind' entry")
    return experiment.config_from_dict(d)


# -- verbs ----------------------------------------------------------------------------

def cmd_dist(args):
    base = experiment.resolve_base(args.base)
    law = zero_bias_cdf(base)
    lo, hi = base.support
    if not (math.isfinite(lo) and math.isfinite(hi)):
        lo, hi = -6.0, 6.0
    xs = np.linspace(lo, hi, args.points)
    d = metrics.l1_cdf_distance(law.cdf_function(), base.cdf_function())
    summary = {"base": args.base, "variance": float(base.variance),
               "abs_moment3": float(base.abs_moment3),
               "e_abs_zero_bias": e_abs_zero_bias(base), "l1_zero_bias": d}
    if args.format == "json":
        summary["table"] = [{"x": float(x), "cdf": float(base.cdf(x)), "cdf_star": float(law.cdf(x)),
                             "density_star": float(law.density(x))} for x in xs]
        write_records([summary], "json", args.out)
    else:
        write_records([{"x": float(x), "cdf": float(base.cdf(x)), "cdf_star": float(law.cdf(x)),
                        "density_star": float(law.density(x))} for x in xs], "csv", args.out)


def cmd_couple(args):
    cfg = _scenario_config(args)
    pairs = experiment.draw_pairs(cfg)
    rows = [{"w": float(a), "w_star": float(b), "cost": float(c)}
            for a, b, c in zip(pairs.w, pairs.w_star, pairs.cost)]
    write_records(rows, "csv" if args.format == "csv" else "json", args.out)


def _report(args, cfg):
    rep = experiment.run_scenario(cfg)
    write_records([rep.to_dict()], args.format, args.out)
    return 0 if rep.verdict != "violated" else 1


def cmd_run(args):
    return _report(args, _scenario_config(args))


def cmd_cone(args):
    return _report(args, _scenario_config(args, "cone", n=args.n, p=args.p, theta_file=args.theta))


def cmd_srs(args):
    return _report(args, _scenario_config(args, "srs", population_file=args.population, n=args.n))


def cmd_perm(args):
    return _report(args, _scenario_config(args, "perm", matrix_file=args.matrix))


def cmd_sweep(args):
    base = _scenario_config(args)
    values = [json.loads(v) for v in args.values.split(",")]
    configs = []
    for v in values:
        params = dict(base.params)
        params[args.axis] = v
        if base.kind == "cone" and params.get("theta", "uniform") == "uniform":
            params.pop("theta", None)
        configs.append(ScenarioConfig(base.kind, params, base.reps, base.seed, base.folds, base.workers))
    rows, table = experiment.sweep(configs, args.workers or 1, args.axis)
    records = []
    for r in rows:
        rec = {args.axis: r.x}
        if r.report:
            rec.update({k: v for k, v in r.report.to_dict().items() if k != "scenario"})
        rec["error"] = r.error
        records.append(rec)
    if args.format == "json":
        write_records([{"rows": records, "slope_bound": table["slope_bound"],
                        "slope_est_l1": table["slope_est_l1"]}], "json", args.out)
    else:
        write_records(records, "csv", args.out)
        print(f"# slope_bound={table['slope_bound']:.6g} slope_est_l1={table['slope_est_l1']:.6g}",
              file=sys.stderr)


def cmd_verify(args):
    cfg = _scenario_config(args)
    res = experiment.characterization(cfg)
    write_records([{"f": r.name, "delta": r.delta, "se": r.se, "lhs": r.lhs, "rhs": r.rhs,
                    "ok": r.ok} for r in res], args.format, args.out)
    return 0 if all(r.ok for r in res) else 1


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--reps", type=int, default=None, help="replications m")
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--config", default=None, help="JSON or key = value file")
    common.add_argument("--workers", type=int, default=None)

    ap = argparse.ArgumentParser(prog="l1stein", description="zero-bias couplings and L1 bound certification")
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("dist", parents=[common], help="zero-bias tables for a base")
    p.add_argument("--base", default="uniform", help="catalog name, bernoulli-<p>, or value<TAB>prob file")
    p.add_argument("--points", type=int, default=41)
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("couple", parents=[common], help="raw coupling draws")
    p.set_defaults(func=cmd_couple)

    p = sub.add_parser("run", parents=[common], help="certification report for a config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("cone", parents=[common], help="cone-measure projection scenario")
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--theta", default=None, help="theta file, one number per line")
    p.set_defaults(func=cmd_cone)

    p = sub.add_parser("srs", parents=[common], help="simple random sampling scenario")
    p.add_argument("--population", default=None, help="one value per line")
    p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_srs)

    p = sub.add_parser("perm", parents=[common], help="permutation statistic scenario")
    p.add_argument("--matrix", default=None, help="n lines of n numbers")
    p.set_defaults(func=cmd_perm)

    p = sub.add_parser("sweep", parents=[common], help="grid over one parameter")
    p.add_argument("--axis", default="n")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", parents=[common], help="characterization residual suite")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        rc = args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return rc or 0


if __name__ == "__main__":
    sys.exit(main())
