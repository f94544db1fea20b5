"""Generic constructions of (W, W*) on a common probability space.

Three constructions are provided:

* independent sums: replace a summand chosen with probability proportional to
  its variance by a zero-biased copy, drawn comonotonically;
* coordinate-symmetric vectors: replace coordinate I by U times its
  square-biased version and adjust the rest;
* exchangeable pairs with E(Y''|Y') = (1 - lam) Y': mix a squared-difference
  biased pair with an independent uniform weight.

All coupling functions take an explicit ``numpy.random.Generator`` and a
``size`` and return a ``CoupledPair`` of arrays.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .distributions import Normal, ScalarDistribution
from .zerobias import zero_bias_cdf


@dataclass
class CoupledPair:
    w: np.ndarray
    w_star: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def cost(self) -> np.ndarray:
        return np.abs(self.w_star - self.w)

    def __len__(self):
        return self.w.size

    @classmethod
    def concat(cls, pairs):
        pairs = list(pairs)
        keys = pairs[0].diagnostics.keys()
        return cls(np.concatenate([p.w for p in pairs]),
                   np.concatenate([p.w_star for p in pairs]),
                   {k: np.concatenate([p.diagnostics[k] for p in pairs]) for k in keys})


# -- independent sums ---------------------------------------------------------------

class IndependentSumModel:
    """W = sum of independent mean-zero summands, total variance one."""

    def __init__(self, summands, normalize: bool = True):
        summands = list(summands)
        if not summands:
            raise ValueError("need at least one summand")
        for s in summands:
            if abs(s.mean) > 1e-12:
                raise ValueError("summands must have mean zero")
            if not s.variance > 0:
                raise ValueError("summand variances must be positive")
        total = math.fsum(s.variance for s in summands)
        if normalize and abs(total - 1.0) > 1e-15:
            c = 1.0 / math.sqrt(total)
            summands = [s.scaled(c) for s in summands]
            total = math.fsum(s.variance for s in summands)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"total variance {total!r} is not 1")
        self.summands = summands
        self.variances = np.array([s.variance for s in summands])
        self.total_variance = total
        self._laws = [zero_bias_cdf(s) for s in summands]

    @classmethod
    def iid(cls, base: ScalarDistribution, n: int):
        s = base.scaled(1.0 / math.sqrt(n * base.variance))
        return cls([s] * n, normalize=False)

    @property
    def n(self):
        return len(self.summands)


def independent_sum_couple(model: IndependentSumModel, rng, size: int = 1) -> CoupledPair:
    n = model.n
    x = np.empty((size, n))
    groups = {}
    for j, s in enumerate(model.summands):
        groups.setdefault(id(s), []).append(j)
        x[:, j] = s.sample(rng, size)
    probs = model.variances / model.variances.sum()
    idx = rng.choice(n, size=size, p=probs) if n > 1 else np.zeros(size, dtype=np.intp)
    v = rng.random(size)
    rows = np.arange(size)
    x[rows, idx] = 0.0
    rest = x.sum(axis=1)
    xi = np.empty(size)
    xi_star = np.empty(size)
    # comonotone pair (G^{-1}(V), G*^{-1}(V)); identical summands share one call
    for cols in groups.values():
        mask = np.isin(idx, cols)
        if not mask.any():
            continue
        j = cols[0]
        xi[mask] = model.summands[j].quantile(v[mask])
        xi_star[mask] = model._laws[j].quantile(v[mask])
    return CoupledPair(rest + xi, rest + xi_star, {"index": idx})


def _l1_zero_bias_standardized(s: ScalarDistribution, quad) -> float:
    std = s.standardized()
    law = zero_bias_cdf(std)
    return metrics.l1_cdf_distance(law.cdf_function(), std.cdf_function(), quad)


def iid_sum_bound(base: ScalarDistribution, n: int,
                  quad: metrics.QuadratureSpec = metrics.QuadratureSpec()) -> float:
    """(2/sqrt(n)) ||G* - G||_1 for n i.i.d. copies of a unit-variance base."""
    if abs(base.variance - 1.0) > 1e-12:
        raise ValueError("base must have variance 1; standardize it first")
    if n < 1:
        raise ValueError("n must be positive")
    if isinstance(base, Normal):
        return 0.0
    law = zero_bias_cdf(base)
    d = metrics.l1_cdf_distance(law.cdf_function(), base.cdf_function(), quad)
    return 2.0 / math.sqrt(n) * d


def general_sum_bound(model: IndependentSumModel,
                      quad: metrics.QuadratureSpec = metrics.QuadratureSpec()) -> float:
    """2 sum_i s_i^2 ||G_i* - G_i||_1, each distance via the standardized summand."""
    terms = []
    cache = {}
    for s in model.summands:
        if isinstance(s, Normal):
            terms.append(0.0)
            continue
        key = id(s)
        if key not in cache:
            cache[key] = _l1_zero_bias_standardized(s, quad)
        sd = math.sqrt(s.variance)
        terms.append(s.variance * sd * cache[key])
    return 2.0 * math.fsum(terms)


def third_moment_bound(model: IndependentSumModel) -> float:
    """3 sum_i E|X_i|^3."""
    moments = [s.abs_moment3 for s in model.summands]
    if not all(map(math.isfinite, moments)):
        raise ValueError("infinite third absolute moment")
    return 3.0 * math.fsum(moments)


# -- coordinate-symmetric vectors ----------------------------------------------------

class CoordinateSymmetricModel:
    """Interface for vectors invariant under coordinate sign flips.

    Subclasses set ``n`` and ``variances`` and implement ``draw``.
    """

    n: int
    variances: np.ndarray

    def draw(self, rng, index: np.ndarray):
        """Return ``(Y, Y_biased)``: row r of ``Y_biased`` is the direction
        ``index[r]`` square-biased vector built from row r of ``Y``."""
        raise NotImplementedError


class IndependentCoordinates(CoordinateSymmetricModel):
    """Independent symmetric coordinates; the adjustment step is trivial."""

    def __init__(self, coords):
        self.coords = list(coords)
        for c in self.coords:
            if not c.symmetric:
                raise ValueError("coordinates must be symmetric")
        self.n = len(self.coords)
        self.variances = np.array([c.variance for c in self.coords])

    def draw(self, rng, index):
        size = index.size
        y = np.column_stack([c.sample(rng, size) for c in self.coords])
        biased = y.copy()
        rows = np.arange(size)
        for i, c in enumerate(self.coords):
            mask = index == i
            if mask.any():
                biased[rows[mask], i] = c.square_bias_sample(rng, int(mask.sum()))
        return y, biased


def coordinate_symmetric_couple(model: CoordinateSymmetricModel, rng, size: int = 1) -> CoupledPair:
    probs = model.variances / model.variances.sum()
    index = rng.choice(model.n, size=size, p=probs) if model.n > 1 else np.zeros(size, dtype=np.intp)
    y, biased = model.draw(rng, index)
    u = rng.uniform(-1.0, 1.0, size)
    rows = np.arange(size)
    w = y.sum(axis=1)
    head = biased[rows, index]
    w_star = biased.sum(axis=1) - head + u * head
    return CoupledPair(w, w_star, {"index": index})


# -- exchangeable pairs ------------------------------------------------------------------

class ExchangeablePairModel:
    """Interface for an exchangeable pair (Y', Y'') with linear regression.

    ``lam`` is declared, not inferred; tests check it by regression and, for
    finite models, by exact enumeration. ``draw_pair`` returns ``(Y', Y'')``
    and ``draw_dagger`` returns ``(Y', Y_dagger, Y_ddagger, diagnostics)``
    where the dagger pair has the (y' - y'')^2-biased law and shares whatever
    randomness the model documents with Y'.
    """

    lam: float
    sigma2: float

    def check_lambda(self):
        if not 0.0 < self.lam <= 1.0:
            raise ValueError(f"lambda={self.lam!r} outside (0, 1]")
        if self.lam == 1.0:
            warnings.warn("lambda = 1: outside the open interval (0, 1) assumed by "
                          "the linearity condition; proceeding", RuntimeWarning, stacklevel=3)

    def draw_pair(self, rng, size):
        raise NotImplementedError

    def draw_dagger(self, rng, size):
        raise NotImplementedError


class GaussianIndependentPair(ExchangeablePairModel):
    """Y', Y'' i.i.d. N(0, s2): lam = 1 and the dagger pair is explicit.

    Writing Y' = (S + D)/sqrt(2), the (y' - y'')^2 bias only touches D, which
    becomes a signed chi variable with three degrees of freedom; S is shared.
    """

    def __init__(self, sigma2: float = 1.0):
        self.sigma2 = float(sigma2)
        self.lam = 1.0

    def draw_pair(self, rng, size):
        s = math.sqrt(self.sigma2)
        return s * rng.standard_normal(size), s * rng.standard_normal(size)

    def draw_dagger(self, rng, size):
        s = math.sqrt(self.sigma2)
        shared = rng.standard_normal(size)
        d0 = rng.standard_normal(size)
        d = np.sqrt(rng.chisquare(3, size)) * np.where(rng.random(size) < 0.5, -1.0, 1.0)
        r2 = math.sqrt(2.0)
        y1 = s * (shared + d0) / r2
        return y1, s * (shared + d) / r2, s * (shared - d) / r2, {}


def exchangeable_pair_couple(model: ExchangeablePairModel, rng, size: int = 1) -> CoupledPair:
    """W = Y'/s, W* = (U Y_dagger + (1 - U) Y_ddagger)/s with U ~ U[0, 1]."""
    y1, yd, ydd, diag = model.draw_dagger(rng, size)
    u = rng.random(size)
    s = math.sqrt(model.sigma2)
    return CoupledPair(y1 / s, (u * yd + (1.0 - u) * ydd) / s, diag)


# -- pair diagnostics ----------------------------------------------------------------------

def regression_slope(y1, y2):
    """OLS slope of Y'' on Y' with its standard error."""
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    x = y1 - y1.mean()
    sxx = float(x @ x)
    slope = float(x @ (y2 - y2.mean())) / sxx
    resid = (y2 - y2.mean()) - slope * x
    # sandwich (heteroskedasticity-robust) standard error
    se = math.sqrt(float(np.sum((x * resid) ** 2))) / sxx
    return slope, se
