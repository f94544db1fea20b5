"""Simple random sampling from a finite population.

The exchangeable pair is (X' + R, X'' + R) for an ordered sample
X', X'', X_2..X_n of size n + 1, R = X_2 + ... + X_n. The zero-bias coupling
draws a biased pair (X_dag, X_ddag) with probability proportional to
(a - b)^2, keeps every X_k not in {X_dag, X_ddag}, and replaces those that
collide by a fresh ordered sample from the unused labels.

All set operations act on integer labels, never on values, so populations
with repeated values are handled.
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .couplings import CoupledPair, ExchangeablePairModel, exchangeable_pair_couple


class Population:
    def __init__(self, values, labels=None):
        vals = np.asarray([float(v) for v in values])
        if vals.size < 2:
            raise ValueError("population needs N >= 2")
        if np.all(vals == vals[0]):
            raise ValueError("population values are all equal (sigma^2 = 0)")
        if labels is None:
            labels = range(vals.size)
        labels = tuple(int(l) for l in labels)
        if len(set(labels)) != len(labels) or len(labels) != vals.size:
            raise ValueError("labels must be unique, one per value")
        self.exact = [v if isinstance(v, (int, Fraction)) else None for v in values]
        self.values = vals
        self.labels = labels
        self.N = vals.size
        self.abar = float(np.mean(vals))
        dev = vals - self.abar
        self.ss = math.fsum((dev * dev).tolist())
        self.a3 = math.fsum((np.abs(dev) ** 3).tolist())
        self.normalized_values = dev / math.sqrt(self.ss)

    def __len__(self):
        return self.N

    def exact_values(self):
        """Values as Fractions (floats are converted exactly)."""
        return [Fraction(v) for v in (e if e is not None else float(x)
                                      for e, x in zip(self.exact, self.values))]


class SrsStats(NamedTuple):
    mu: float
    sigma2: float
    a3: float
    lam: float


def srs_stats(population: Population, n: int, check_range: bool = True) -> SrsStats:
    """Mean and variance of the sample sum, a3 and lambda = N/(n(N-n)).

    ``check_range=False`` skips the 2 < n < N-1 requirement, which the
    coupling needs but the moment formulas do not.
    """
    N = population.N
    if check_range and not 2 < n < N - 1:
        raise ValueError(f"need 2 < n < N - 1, got n={n}, N={N}")
    if not 0 < n < N:
        raise ValueError("need 0 < n < N")
    mu = n * population.abar
    sigma2 = n * (N - n) / (N * (N - 1)) * population.ss
    return SrsStats(mu, sigma2, population.a3, N / (n * (N - n)))


@dataclass(frozen=True)
class SrsScenario:
    population: Population
    n: int

    def __post_init__(self):
        N = self.population.N
        if not 2 < self.n < N - 1:
            raise ValueError(f"need 2 < n < N - 1, got n={self.n}, N={N}")

    @property
    def N(self):
        return self.population.N

    @property
    def sigma2(self):
        """Variance of the sample sum on normalized values."""
        n, N = self.n, self.N
        return n * (N - n) / (N * (N - 1))

    @property
    def lam(self):
        return self.N / (self.n * (self.N - self.n))

    @property
    def a3(self):
        return math.fsum((np.abs(self.population.normalized_values) ** 3).tolist())


def ordered_sample(rng, size: int, N: int, k: int) -> np.ndarray:
    """Rows of k distinct labels in draw order (partial Fisher-Yates)."""
    lab = np.tile(np.arange(N), (size, 1))
    rows = np.arange(size)
    for t in range(k):
        j = rng.integers(t, N, size)
        a = lab[rows, t].copy()
        lab[rows, t] = lab[rows, j]
        lab[rows, j] = a
    return lab[:, :k]


class SrsModel(ExchangeablePairModel):
    """Exchangeable pair and dagger sampler for the normalized population.

    Shared randomness: the sample slots X_2..X_n not hit by the biased pair
    are reused verbatim; only X' is replaced by the biased pair and colliding
    slots by fresh labels.
    """

    def __init__(self, scenario: SrsScenario):
        self.scenario = scenario
        self.a = scenario.population.normalized_values
        self.N = scenario.N
        self.n = scenario.n
        self.sigma2 = scenario.sigma2
        self.lam = scenario.lam
        self.check_lambda()
        diff = self.a[:, None] - self.a[None, :]
        q = (diff * diff).ravel()
        self._q_cum = np.cumsum(q / q.sum())
        self._q_cum[-1] = 1.0

    def draw_pair(self, rng, size):
        lab = ordered_sample(rng, size, self.N, self.n + 1)
        rest = self.a[lab[:, 2:]].sum(axis=1)
        return self.a[lab[:, 0]] + rest, self.a[lab[:, 1]] + rest

    def draw_biased_labels(self, rng, size):
        k = np.searchsorted(self._q_cum, rng.random(size), side="right")
        k = np.minimum(k, self.N * self.N - 1)
        return k // self.N, k % self.N

    def draw_dagger(self, rng, size):
        a, N = self.a, self.N
        lab = ordered_sample(rng, size, N, self.n + 1)
        dag, ddag = self.draw_biased_labels(rng, size)
        rest = lab[:, 2:]
        hit = (rest == dag[:, None]) | (rest == ddag[:, None])
        r_count = hit.sum(axis=1)
        rest_vals = a[rest]
        r_prime = np.where(hit, rest_vals, 0.0).sum(axis=1)
        s = rest_vals.sum(axis=1) - r_prime
        # replacements: an ordered simple random sample from labels outside Q
        keys = rng.random((size, N))
        rows = np.arange(size)
        keys[rows[:, None], rest] = 2.0
        keys[rows, dag] = 2.0
        keys[rows, ddag] = 2.0
        two = np.argpartition(keys, 1, axis=1)[:, :2]
        swap = keys[rows, two[:, 0]] > keys[rows, two[:, 1]]
        first = np.where(swap, two[:, 1], two[:, 0])
        second = np.where(swap, two[:, 0], two[:, 1])
        r_dag = np.where(r_count >= 1, a[first], 0.0) + np.where(r_count >= 2, a[second], 0.0)
        y1 = a[lab[:, 0]] + rest_vals.sum(axis=1)
        yd = a[dag] + s + r_dag
        ydd = a[ddag] + s + r_dag
        return y1, yd, ydd, {"r_count": r_count, "dagger": dag, "ddagger": ddag}


def srs_couple(scenario: SrsScenario, rng, size: int = 1) -> CoupledPair:
    return exchangeable_pair_couple(SrsModel(scenario), rng, size)


def direct_sample_sums(scenario: SrsScenario, rng, size: int) -> np.ndarray:
    """Standardized sums of plain size-n samples, for marginal comparisons."""
    lab = ordered_sample(rng, size, scenario.N, scenario.n)
    return scenario.population.normalized_values[lab].sum(axis=1) / math.sqrt(scenario.sigma2)


def theorem51_bound(scenario: SrsScenario) -> float:
    n, N = scenario.n, scenario.N
    sigma2 = scenario.sigma2
    return (4.0 * scenario.a3 / sigma2 ** 1.5 * (n * (N - n) / (N * (N - 1)))
            * (1.0 + n / N) ** 2)


def q_marginal(scenario: SrsScenario, label: int) -> float:
    """P(X_dag = a) = (a^2 + 1/N)/2 for the normalized value a of ``label``."""
    idx = scenario.population.labels.index(label)
    a = scenario.population.normalized_values[idx]
    return 0.5 * (a * a + 1.0 / scenario.N)


# -- exact enumeration -----------------------------------------------------------------------

def _centered_fractions(population):
    vals = population.exact_values()
    abar = sum(vals) / len(vals)
    return [v - abar for v in vals]


def enumerate_pair_moments(population: Population, n: int) -> dict:
    """Exact moments of the exchangeable pair over all ordered (n+1)-samples."""
    a = _centered_fractions(population)
    N = len(a)
    count = 0
    e1 = Fraction(0)
    e_diff2 = Fraction(0)
    e_y1sq = Fraction(0)
    by_y1 = defaultdict(lambda: [0, Fraction(0)])
    for s in itertools.permutations(range(N), n + 1):
        rest = sum(a[k] for k in s[2:])
        y1 = a[s[0]] + rest
        y2 = a[s[1]] + rest
        count += 1
        e1 += y1
        e_diff2 += (y1 - y2) ** 2
        e_y1sq += y1 * y1
        cell = by_y1[y1]
        cell[0] += 1
        cell[1] += y2
    ss = sum(v * v for v in a)
    sigma2 = Fraction(n * (N - n), N * (N - 1)) * ss
    lam = Fraction(N, n * (N - n))
    regression = {y: tot / c for y, (c, tot) in by_y1.items()}
    return {
        "mean": e1 / count,
        "var": e_y1sq / count,
        "diff2": e_diff2 / count,
        "sigma2": sigma2,
        "lam": lam,
        "linear": all(v == (1 - lam) * y for y, v in regression.items()),
    }


def enumerate_dagger_law(population: Population, n: int):
    """Exact law of (Y_dag, Y_ddag) produced by the coupling, and the target
    law (y' - y'')^2 dF / E(Y' - Y'')^2, both as dicts over value pairs."""
    a = _centered_fractions(population)
    N = len(a)
    pairs = [(i, j) for i in range(N) for j in range(N) if a[i] != a[j]]
    qtot = sum((a[i] - a[j]) ** 2 for i, j in pairs)
    samples = list(itertools.permutations(range(N), n + 1))
    p_sample = Fraction(1, len(samples))
    produced = defaultdict(Fraction)
    target = defaultdict(Fraction)
    for s in samples:
        rest = s[2:]
        rest_sum = sum(a[k] for k in rest)
        y1, y2 = a[s[0]] + rest_sum, a[s[1]] + rest_sum
        target[(y1, y2)] += p_sample * (y1 - y2) ** 2
        for i, j in pairs:
            w = p_sample * (a[i] - a[j]) ** 2 / qtot
            hit = [k for k in rest if k in (i, j)]
            s_sum = rest_sum - sum(a[k] for k in hit)
            if not hit:
                produced[(a[i] + s_sum, a[j] + s_sum)] += w
                continue
            free = [k for k in range(N) if k not in rest and k not in (i, j)]
            reps = list(itertools.permutations(free, len(hit)))
            for r in reps:
                add = sum(a[k] for k in r)
                produced[(a[i] + s_sum + add, a[j] + s_sum + add)] += w / len(reps)
    tot = sum(target.values())
    target = {k: v / tot for k, v in target.items() if v}
    return dict(produced), target


def load_population(path) -> list:
    """One value per line, decimal or rational ``p/q``."""
    out = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "/" in line:
            out.append(Fraction(line))
        else:
            try:
                out.append(int(line))
            except ValueError:
                out.append(float(line))
    return out
