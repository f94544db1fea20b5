"""Cone measure on the l_p sphere and its projection coupling.

A cone-measure vector is built from independent G_j ~ Gamma(1/p, 1) and
random signs e_j as x_j = e_j (G_j / sum G)^(1/p). Square biasing coordinate
i only needs one extra G'_i ~ Gamma(2/p, 1); the other coordinates are then
rescaled by (sum G / (sum G + G'_i))^(1/p), which keeps the point on the sphere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import special

from .couplings import CoordinateSymmetricModel, CoupledPair, coordinate_symmetric_couple
from .distributions import ScalarDistribution, _scalar_or_array

THETA_PRUNE = 1e-15


def beta_moment(alpha: float, beta: float, kappa: float) -> float:
    """E B^kappa for B ~ Beta(alpha, beta)."""
    if min(alpha, beta, kappa) <= 0:
        raise ValueError("arguments must be positive")
    return math.exp(special.gammaln(alpha + kappa) + special.gammaln(alpha + beta)
                    - special.gammaln(alpha + beta + kappa) - special.gammaln(alpha))


def _check_np(n, p):
    if n < 2 or int(n) != n:
        raise ValueError("n must be an integer >= 2")
    if not p > 0:
        raise ValueError("p must be positive")


def sigma_np(n: int, p: float) -> float:
    """Variance of one coordinate under cone measure."""
    _check_np(n, p)
    return math.exp(special.gammaln(3 / p) + special.gammaln(n / p)
                    - special.gammaln(1 / p) - special.gammaln((n + 2) / p))


def m_np(n: int, p: float) -> float:
    """E|X_i^i|, the mean absolute value of the square-biased coordinate."""
    _check_np(n, p)
    return math.exp(special.gammaln(4 / p) + special.gammaln((n + 2) / p)
                    - special.gammaln(3 / p) - special.gammaln((n + 3) / p))


@dataclass(frozen=True)
class ConeParams:
    n: int
    p: float
    theta: tuple

    def __post_init__(self):
        if self.n < 1 or int(self.n) != self.n:
            raise ValueError("n must be a positive integer")
        if not self.p > 0:
            raise ValueError("p must be positive")
        th = np.asarray(self.theta, dtype=float)
        if th.shape != (self.n,):
            raise ValueError(f"theta must have {self.n} entries")
        if abs(float(th @ th) - 1.0) > 1e-12:
            raise ValueError("theta must have unit length")
        object.__setattr__(self, "theta", tuple(th.tolist()))

    @classmethod
    def uniform(cls, n: int, p: float):
        return cls(n, p, tuple(np.full(n, 1.0 / math.sqrt(n))))

    @property
    def sigma2(self):
        return sigma_np(self.n, self.p)


@dataclass
class ConeVector:
    """Points of the sphere with the Gamma draws and signs that built them."""

    x: np.ndarray
    gammas: np.ndarray
    signs: np.ndarray

    @property
    def gamma_sum(self):
        return self.gammas.sum(axis=-1)


def sample_cone(params: ConeParams, rng, size=None) -> ConeVector:
    shape = (params.n,) if size is None else (size, params.n)
    g = rng.standard_gamma(1.0 / params.p, shape)
    total = g.sum(axis=-1, keepdims=True)
    if np.any(total <= 0) or not np.all(np.isfinite(g)):
        raise FloatingPointError("degenerate Gamma draw; retry with a fresh stream")
    signs = np.where(rng.random(shape) < 0.5, -1.0, 1.0)
    x = signs * (g / total) ** (1.0 / params.p)
    return ConeVector(x, g, signs)


def _g(x, p):
    return (1.0 - np.abs(x) ** p) ** (1.0 / p)


def square_bias_direction(params: ConeParams, i: int, rng):
    """One draw of (X, X_i^i, X^i): the vector, its biased coordinate i, and
    the direction-i square-biased vector sharing X's Gamma draws."""
    if not 0 <= i < params.n:
        raise ValueError("coordinate index out of range")
    vec = sample_cone(params, rng)
    g_extra = rng.standard_gamma(2.0 / params.p)
    total = vec.gammas.sum()
    x_ii = vec.signs[i] * ((vec.gammas[i] + g_extra) / (total + g_extra)) ** (1.0 / params.p)
    factor = (total / (total + g_extra)) ** (1.0 / params.p)
    biased = factor * vec.x
    biased[i] = x_ii
    return vec, float(x_ii), biased


def square_bias_draws(params: ConeParams, rng, index):
    """Vectorized square_bias_direction: row r is biased in coordinate index[r].

    Returns ``(vec, x_ii, factor)``; the biased vector is ``factor * vec.x``
    with coordinate ``index[r]`` replaced by ``x_ii``.
    """
    index = np.asarray(index)
    size = index.size
    p = params.p
    vec = sample_cone(params, rng, size)
    g_extra = rng.standard_gamma(2.0 / p, size)
    total = vec.gamma_sum
    rows = np.arange(size)
    x_ii = vec.signs[rows, index] * ((vec.gammas[rows, index] + g_extra) / (total + g_extra)) ** (1.0 / p)
    factor = (total / (total + g_extra)) ** (1.0 / p)
    return vec, x_ii, factor


class ConeModel(CoordinateSymmetricModel):
    """Y = theta * X / sigma_np with X cone distributed."""

    def __init__(self, params: ConeParams):
        self.params = params
        self.n = params.n
        th = np.asarray(params.theta)
        self.theta = np.where(np.abs(th) < THETA_PRUNE, 0.0, th)
        self.sigma = math.sqrt(sigma_np(params.n, params.p)) if params.n >= 2 else 1.0
        self.variances = self.theta ** 2

    def draw(self, rng, index):
        vec, x_ii, factor = square_bias_draws(self.params, rng, index)
        rows = np.arange(index.size)
        scale = self.theta / self.sigma
        y = vec.x * scale
        biased = y * factor[:, None]
        biased[rows, index] = x_ii * scale[index]
        return y, biased


def projection_couple(params: ConeParams, rng, size: int = 1) -> CoupledPair:
    """(W, W*) for W = theta . X / sigma_np via the coordinate-symmetric route."""
    return coordinate_symmetric_couple(ConeModel(params), rng, size)


def theorem41_bound(params: ConeParams) -> float:
    """3 (m/sigma) sum|theta_i|^3 + max(1/p, 1) 4/(n+2)."""
    n, p = params.n, params.p
    th = np.abs(np.asarray(params.theta))
    ratio = m_np(n, p) / math.sqrt(sigma_np(n, p))
    return 3.0 * ratio * math.fsum((th ** 3).tolist()) + max(1.0 / p, 1.0) * 4.0 / (n + 2)


class ConeMarginal(ScalarDistribution):
    """One coordinate of cone measure (times ``scale``): e B^(1/p), B ~ Beta(1/p, (n-1)/p)."""

    symmetric = True

    def __init__(self, n: int, p: float, scale: float = 1.0):
        _check_np(n, p)
        self.n, self.p, self.scale = int(n), float(p), abs(float(scale))
        self.a = 1.0 / p
        self.b = (n - 1.0) / p
        self.support = (-self.scale, self.scale)
        self.variance = self.scale ** 2 * sigma_np(n, p)
        self.abs_moment3 = self.scale ** 3 * beta_moment(self.a, self.b, 3.0 / p)
        self._m1 = beta_moment(self.a, self.b, 1.0 / p)
        self._m2 = beta_moment(self.a, self.b, 2.0 / p)

    def __repr__(self):
        return f"ConeMarginal(n={self.n}, p={self.p!r}, scale={self.scale!r})"

    def _t(self, x):
        return np.clip(np.abs(np.asarray(x, dtype=float)) / self.scale, 0.0, 1.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        half = 0.5 * special.betainc(self.a, self.b, self._t(x) ** self.p)
        return _scalar_or_array(np.where(x >= 0, 0.5 + half, 0.5 - half))

    def pdf(self, x):
        t = self._t(x)
        const = self.p * math.exp(special.gammaln(self.a + self.b) - special.gammaln(self.a) - special.gammaln(self.b))
        with np.errstate(divide="ignore", invalid="ignore"):
            dens = 0.5 * const * (1.0 - t ** self.p) ** (self.b - 1.0) / self.scale
        return _scalar_or_array(np.where(t < 1.0, dens, 0.0))

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        r = special.betaincinv(self.a, self.b, np.abs(2.0 * u - 1.0)) ** (1.0 / self.p)
        return _scalar_or_array(self.scale * np.sign(u - 0.5) * r)

    def sample(self, rng, size=None):
        r = rng.beta(self.a, self.b, size) ** (1.0 / self.p)
        sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        return _scalar_or_array(self.scale * sign * r)

    def partial_moments(self, x):
        x = np.asarray(x, dtype=float)
        tp = self._t(x) ** self.p
        s = self.scale
        # E[X; X <= x] = -E[|X|; |X| > |x|] / 2 for a symmetric law
        m1 = -0.5 * s * self._m1 * special.betaincc(self.a + 1.0 / self.p, self.b, tp)
        tail2 = 0.5 * s * s * self._m2 * special.betaincc(self.a + 2.0 / self.p, self.b, tp)
        m2 = np.where(x < 0, tail2, self.variance - tail2)
        return _scalar_or_array(m1), _scalar_or_array(m2)

    def square_bias_sample(self, rng, size=None):
        r = rng.beta(3.0 / self.p, self.b, size) ** (1.0 / self.p)
        sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        return _scalar_or_array(self.scale * sign * r)

    def square_bias_cdf(self, x):
        x = np.asarray(x, dtype=float)
        half = 0.5 * special.betainc(3.0 / self.p, self.b, self._t(x) ** self.p)
        return _scalar_or_array(np.where(x >= 0, 0.5 + half, 0.5 - half))

    def scaled(self, c):
        return ConeMarginal(self.n, self.p, self.scale * abs(float(c)))


def load_theta(path) -> tuple:
    """One number per line; renormalized if within 1e-6 of unit length."""
    vals = [float(line) for line in Path(path).read_text().split() if line.strip()]
    th = np.asarray(vals, dtype=float)
    norm = math.sqrt(float(th @ th))
    if abs(norm - 1.0) > 1e-6:
        raise ValueError(f"theta has norm {norm!r}; expected 1 within 1e-6")
    return tuple((th / norm).tolist())
