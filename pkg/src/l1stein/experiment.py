"""Scenario runner: coupling draws, closed-form bound, empirical L1, verdict.

A scenario is a kind plus a flat parameter dict. ``run_scenario`` draws m
coupled pairs in blocks with streams keyed by (seed, scenario id, block), so
the report does not depend on the worker count.
"""
from __future__ import annotations

import json
import math
import re
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import cone, couplings, distributions, metrics, permclt, rng as rngmod, srs
from .couplings import CoupledPair
from .zerobias import verify_characterization

KINDS = ("iid-sum", "general-sum", "cone", "srs", "perm")
SLACK = 4.0
MIN_CERT_REPS = 10_000


@dataclass
class ScenarioConfig:
    kind: str
    params: dict = field(default_factory=dict)
    reps: int = 1_000_000
    seed: int = 0
    folds: int = 20
    workers: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}; expected one of {KINDS}")
        if self.reps < 2:
            raise ValueError("need at least two replications")

    def scenario_id(self) -> int:
        return rngmod.scenario_id({"kind": self.kind, **self.params})

    def echo(self) -> dict:
        return {"kind": self.kind, **self.params, "reps": self.reps}


REPORT_FIELDS = ("scenario", "bound", "est_l1", "est_cost2", "se_l1", "se_cost",
                 "verdict", "seed", "wall_time")


@dataclass
class BoundReport:
    scenario: dict
    bound: float
    est_l1: float
    est_cost2: float
    se_l1: float
    se_cost: float
    verdict: str
    seed: int
    wall_time: float

    def to_dict(self):
        return asdict(self)


def verdict(est_l1, est_cost2, bound, se_l1, se_cost, reps=MIN_CERT_REPS) -> str:
    """certified / violated on the two inequalities with 4 se slack.

    The first inequality compares two noisy estimates, so its slack uses the
    combined standard error. Runs below the certification size are reported
    as inconclusive whatever the numbers say.
    """
    vals = (est_l1, est_cost2, bound, se_l1, se_cost)
    if not all(map(math.isfinite, vals)):
        return "inconclusive"
    first = est_l1 <= est_cost2 + SLACK * math.hypot(se_l1, se_cost)
    second = est_cost2 <= bound + SLACK * se_cost
    if not (first and second):
        return "violated"
    return "certified" if reps >= MIN_CERT_REPS else "inconclusive"


# -- building scenarios ------------------------------------------------------------------

def resolve_base(spec) -> distributions.ScalarDistribution:
    """Catalog name, ``bernoulli-<p>``, or path to a value<TAB>prob file.

    The result is standardized to variance one.
    """
    if isinstance(spec, distributions.ScalarDistribution):
        return spec.standardized()
    name = str(spec)
    cat = distributions.catalog()
    if name in cat:
        return cat[name]
    m = re.fullmatch(r"bernoulli-([0-9.]+)", name)
    if m:
        return distributions.standardized_bernoulli(float(m.group(1)))
    if Path(name).exists():
        return distributions.load_discrete(name, center=True).standardized()
    raise ValueError(f"unknown base {name!r}; catalog names: {sorted(cat)}")


def _theta(params):
    n = int(params["n"])
    if "theta_file" in params:
        return cone.load_theta(params["theta_file"])
    th = params.get("theta", "uniform")
    if th == "uniform":
        return tuple(np.full(n, 1.0 / math.sqrt(n)))
    th = np.asarray(th, dtype=float)
    return tuple((th / math.sqrt(float(th @ th))).tolist())


def _population(params):
    if "population_file" in params:
        return srs.Population(srs.load_population(params["population_file"]))
    return srs.Population(params["population"])


def _matrix(params):
    if "matrix_file" in params:
        return permclt.load_matrix(params["matrix_file"])
    mat = params["matrix"]
    if mat == "identity":
        return np.eye(int(params["n"]))
    return np.asarray(mat, dtype=float)


def build(config: ScenarioConfig):
    """Return ``(draw, bound)`` where ``draw(rng, size)`` yields a CoupledPair."""
    p = config.params
    kind = config.kind
    if kind == "iid-sum":
        base = resolve_base(p["base"])
        n = int(p["n"])
        model = couplings.IndependentSumModel.iid(base, n)
        return (lambda r, s: couplings.independent_sum_couple(model, r, s),
                couplings.iid_sum_bound(base, n))
    if kind == "general-sum":
        bases = [resolve_base(b) for b in p["bases"]]
        var = p.get("variances") or [1.0] * len(bases)
        summands = [b.scaled(math.sqrt(v)) for b, v in zip(bases, var)]
        model = couplings.IndependentSumModel(summands)
        return (lambda r, s: couplings.independent_sum_couple(model, r, s),
                couplings.general_sum_bound(model))
    if kind == "cone":
        params = cone.ConeParams(int(p["n"]), float(p["p"]), _theta(p))
        model = cone.ConeModel(params)
        return (lambda r, s: couplings.coordinate_symmetric_couple(model, r, s),
                cone.theorem41_bound(params))
    if kind == "srs":
        sc = srs.SrsScenario(_population(p), int(p["n"]))
        model = srs.SrsModel(sc)
        return (lambda r, s: couplings.exchangeable_pair_couple(model, r, s),
                srs.theorem51_bound(sc))
    if kind == "perm":
        mat = permclt.ScoreMatrix(_matrix(p))
        model = permclt.PermutationModel(mat)
        return (lambda r, s: couplings.exchangeable_pair_couple(model, r, s),
                permclt.theorem61_bound(mat))
    raise ValueError(kind)


def draw_pairs(config: ScenarioConfig, draw=None) -> CoupledPair:
    if draw is None:
        draw, _ = build(config)
    parts = rngmod.run_blocks(draw, config.reps, config.seed, config.scenario_id(),
                              workers=config.workers)
    return CoupledPair.concat(parts)


def run_scenario(config: ScenarioConfig, pairs: CoupledPair | None = None) -> BoundReport:
    """Certify the chain ||F - Phi||_1 <= 2 E|W* - W| <= bound for one scenario."""
    t0 = time.perf_counter()
    draw, bound = build(config)
    if pairs is None:
        pairs = draw_pairs(config, draw)
    m = len(pairs)
    sub = rngmod.stream(config.seed, config.scenario_id(), rngmod.SUBSAMPLE_STREAM)
    est_l1, se_l1 = metrics.empirical_l1_to_normal(pairs.w, rng=sub, folds=config.folds)
    cost = pairs.cost
    est_cost2 = 2.0 * math.fsum(cost.tolist()) / m
    se_cost = 2.0 * float(np.std(cost, ddof=1)) / math.sqrt(m)
    return BoundReport(
        scenario=config.echo(),
        bound=float(bound),
        est_l1=float(est_l1),
        est_cost2=est_cost2,
        se_l1=float(se_l1),
        se_cost=se_cost,
        verdict=verdict(est_l1, est_cost2, bound, se_l1, se_cost, m),
        seed=config.seed,
        wall_time=time.perf_counter() - t0,
    )


def characterization(config: ScenarioConfig):
    """Residuals of E W f(W) = E f'(W*) over the test battery for one scenario."""
    pairs = draw_pairs(config)
    return verify_characterization(pairs.w, pairs.w_star)


# -- sweeps ----------------------------------------------------------------------------

@dataclass
class SweepRow:
    x: float
    report: BoundReport | None
    error: str | None = None


def loglog_slope(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0)
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def sweep(configs, parallelism: int = 1, axis: str = "n"):
    """Run each config; failures are kept as rows with the error message.

    Returns ``(rows, table)`` where the table holds the bound and est_l1
    columns and the fitted log-log slopes of both against ``axis``.
    """
    configs = list(configs)
    if not configs:
        raise ValueError("empty sweep")
    rows = []
    for c in configs:
        c.workers = max(c.workers, parallelism)
        x = float(c.params.get(axis, float("nan")))
        try:
            rows.append(SweepRow(x, run_scenario(c)))
        except Exception as exc:  # noqa: BLE001 - report and continue
            rows.append(SweepRow(x, None, f"{type(exc).__name__}: {exc}"))
    ok = [r for r in rows if r.report is not None]
    xs = [r.x for r in ok]
    table = {
        "axis": axis,
        "x": [r.x for r in rows],
        "bound": [r.report.bound if r.report else None for r in rows],
        "est_l1": [r.report.est_l1 if r.report else None for r in rows],
        "error": [r.error for r in rows],
        "slope_bound": loglog_slope(xs, [r.report.bound for r in ok]),
        "slope_est_l1": loglog_slope(xs, [r.report.est_l1 for r in ok]),
    }
    return rows, table


# -- config files ------------------------------------------------------------------------

def _parse_value(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except ValueError:
        return text


def load_config(path) -> dict:
    """JSON document, or flat ``key = value`` lines (values parsed as JSON when possible)."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return json.loads(text)
    out = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ValueError(f"bad config line {line!r}: expected key = value")
        out[key.strip()] = _parse_value(val)
    return out


def config_from_dict(d: dict) -> ScenarioConfig:
    d = dict(d)
    params = dict(d.pop("params", {}))
    kind = d.pop("kind")
    kw = {k: d.pop(k) for k in ("reps", "seed", "folds", "workers") if k in d}
    params.update(d)
    return ScenarioConfig(kind, params, **{k: int(v) for k, v in kw.items()})
