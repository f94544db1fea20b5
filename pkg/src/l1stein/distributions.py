"""Mean-zero scalar distributions.

Every distribution exposes its CDF, quantile, sampler and the two partial
moments ``E[X; X <= x]`` and ``E[X^2; X <= x]``. The partial moments are all
that is needed to write down the zero-bias CDF, so closed forms here give
closed-form zero-bias laws in ``l1stein.zerobias``.
"""
from __future__ import annotations

import math
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import integrate, special

from .metrics import Cdf, Quantile, std_normal_pdf, step_cdf

_TINY_U = 1e-300


def _scalar_or_array(out):
    return float(out) if np.ndim(out) == 0 else out


def bisect_increasing(fn, target, lo, hi, xtol=1e-10, max_iter=200):
    """Vectorized bisection for ``fn(x) = target`` with fn nondecreasing.

    Returns the smallest x (to ``xtol``) with ``fn(x) >= target``.
    """
    target = np.asarray(target, dtype=float)
    lo = np.full(target.shape, float(lo))
    hi = np.full(target.shape, float(hi))
    for _ in range(max_iter):
        if np.all(hi - lo <= xtol):
            break
        mid = 0.5 * (lo + hi)
        below = np.asarray(fn(mid)) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return _scalar_or_array(0.5 * (lo + hi))


class ScalarDistribution:
    """Base class. Subclasses set ``variance``, ``support`` and ``atoms``."""

    kind = "absolutely-continuous"
    mean = 0.0
    atoms: tuple = ()
    support: tuple = (-math.inf, math.inf)
    symmetric = False
    variance: float
    abs_moment3: float

    def cdf(self, x):
        raise NotImplementedError

    def quantile(self, u):
        lo, hi = self._bracket()
        return bisect_increasing(self.cdf, u, lo, hi, xtol=1e-12)

    def pdf(self, x):
        raise NotImplementedError

    def sample(self, rng, size=None):
        return self.quantile(rng.random(size))

    def partial_moments(self, x):
        """(E[X; X <= x], E[X^2; X <= x]) by quadrature of the density."""
        def one(t):
            lo = self.support[0]
            m1 = integrate.quad(lambda s: s * self.pdf(s), lo, t, limit=200)[0]
            m2 = integrate.quad(lambda s: s * s * self.pdf(s), lo, t, limit=200)[0]
            return m1, m2
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        res = np.array([one(t) for t in xs]).reshape(xs.shape + (2,))
        if np.ndim(x) == 0:
            return float(res[0, 0]), float(res[0, 1])
        return res[..., 0], res[..., 1]

    def square_bias_sample(self, rng, size=None):
        raise ValueError(
            f"{type(self).__name__}: no square-bias sampler (unbounded support "
            "without a closed form)")

    def zero_bias_quantile(self, u):
        """Quantile of the zero-bias law; bisection on its CDF by default."""
        from .zerobias import zero_bias_cdf
        law = zero_bias_cdf(self)
        lo, hi = self._bracket()
        return bisect_increasing(law.cdf, u, lo, hi, xtol=1e-10)

    def scaled(self, c: float) -> "ScalarDistribution":
        raise NotImplementedError

    def standardized(self) -> "ScalarDistribution":
        return self.scaled(1.0 / math.sqrt(self.variance))

    def _bracket(self):
        lo, hi = self.support
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError(f"{type(self).__name__}: unbounded support needs a _bracket override")
        return lo, hi

    def cdf_function(self) -> Cdf:
        return Cdf(self.cdf, support=self.support, atoms=tuple(self.atoms))

    def quantile_function(self) -> Quantile:
        return Quantile(self.quantile, support=self.support)


class FiniteDiscrete(ScalarDistribution):
    """Finitely many atoms with probabilities; the mean must be zero.

    ``values``/``probs`` may be floats or ``Fraction``s; with Fractions the
    zero-mean and unit-mass checks are exact.
    """

    kind = "finite-discrete"

    def __init__(self, values, probs, center: bool = False):
        vals = list(values)
        prs = list(probs)
        if len(vals) != len(prs) or not vals:
            raise ValueError("values and probs must be nonempty and equal length")
        if any(p < 0 for p in prs):
            raise ValueError("probabilities must be nonnegative")
        exact = all(isinstance(v, (int, Fraction)) for v in vals + prs)
        if exact:
            total = sum(Fraction(p) for p in prs)
            if total != 1:
                raise ValueError(f"probabilities sum to {total}, not 1")
            mean = sum(Fraction(v) * Fraction(p) for v, p in zip(vals, prs))
            if center:
                vals = [Fraction(v) - mean for v in vals]
            elif mean != 0:
                raise ValueError(f"mean is {mean}, not 0")
        else:
            total = math.fsum(float(p) for p in prs)
            if abs(total - 1.0) > 1e-12:
                raise ValueError(f"probabilities sum to {total!r}, not 1")
            mean = math.fsum(float(v) * float(p) for v, p in zip(vals, prs))
            scale = max(abs(float(v)) for v in vals) or 1.0
            if center:
                vals = [float(v) - mean for v in vals]
            elif abs(mean) > 1e-12 * scale:
                raise ValueError(f"mean is {mean!r}, not 0")
        self.exact_values = tuple(vals)
        self.exact_probs = tuple(prs)
        order = np.argsort(np.asarray(vals, dtype=float), kind="stable")
        v = np.asarray(vals, dtype=float)[order]
        p = np.asarray(prs, dtype=float)[order]
        keep = p > 0
        v, p = v[keep], p[keep]
        # merge repeated atoms
        uniq, inv = np.unique(v, return_inverse=True)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inv, p)
        self.values = uniq
        self.probs = merged
        self._cum = np.cumsum(merged)
        self._cum[-1] = 1.0
        self._m1 = np.cumsum(merged * uniq)
        self._m2 = np.cumsum(merged * uniq * uniq)
        self.variance = math.fsum((merged * uniq * uniq).tolist())
        if self.variance <= 0:
            raise ValueError("variance must be positive")
        self.abs_moment3 = math.fsum((merged * np.abs(uniq) ** 3).tolist())
        self.atoms = tuple(uniq.tolist())
        self.support = (float(uniq[0]), float(uniq[-1]))
        self.symmetric = bool(np.allclose(uniq, -uniq[::-1], rtol=0, atol=1e-14)
                              and np.allclose(merged, merged[::-1], rtol=0, atol=1e-15))

    def __repr__(self):
        return f"FiniteDiscrete(values={self.values.tolist()}, probs={self.probs.tolist()})"

    def cdf(self, x):
        idx = np.searchsorted(self.values, x, side="right")
        out = np.where(idx > 0, self._cum[np.maximum(idx - 1, 0)], 0.0)
        return _scalar_or_array(out)

    def quantile(self, u):
        # sup{x : F(x) < u} is the first atom whose cumulative mass reaches u
        idx = np.searchsorted(self._cum, u, side="left")
        return _scalar_or_array(self.values[np.minimum(idx, self.values.size - 1)])

    def sample(self, rng, size=None):
        return self.quantile(rng.random(size))

    def partial_moments(self, x):
        idx = np.searchsorted(self.values, x, side="right")
        j = np.maximum(idx - 1, 0)
        m1 = np.where(idx > 0, self._m1[j], 0.0)
        m2 = np.where(idx > 0, self._m2[j], 0.0)
        # after the last atom the partial moments are the full moments
        m1 = np.where(idx >= self.values.size, 0.0, m1)
        return _scalar_or_array(m1), _scalar_or_array(m2)

    def square_bias_probs(self):
        w = self.probs * self.values ** 2
        return w / w.sum()

    def square_bias_sample(self, rng, size=None):
        cum = np.cumsum(self.square_bias_probs())
        idx = np.searchsorted(cum, rng.random(size), side="right")
        return _scalar_or_array(self.values[np.minimum(idx, self.values.size - 1)])

    def square_bias_cdf(self, x):
        cum = np.cumsum(self.square_bias_probs())
        idx = np.searchsorted(self.values, x, side="right")
        return _scalar_or_array(np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0))

    def zero_bias_knots(self):
        """Knots, CDF values and slopes of the piecewise-linear zero-bias CDF."""
        v = self.values
        g = (self._m2 - v * self._m1) / self.variance
        g[-1] = 1.0
        slope = -self._m1[:-1] / self.variance
        return v, g, slope

    def zero_bias_quantile(self, u):
        v, g, slope = self.zero_bias_knots()
        u = np.asarray(u, dtype=float)
        k = np.clip(np.searchsorted(g, u, side="left") - 1, 0, v.size - 2)
        x = v[k] + (u - g[k]) / slope[k]
        return _scalar_or_array(np.clip(x, v[k], v[k + 1]))

    def scaled(self, c):
        return FiniteDiscrete(float(c) * self.values, self.probs)

    def cdf_function(self):
        return step_cdf(self.values, self._cum)

    def quantile_function(self):
        return Quantile(self.quantile, support=self.support,
                        jumps=tuple(self._cum[:-1].tolist()))


def rademacher() -> FiniteDiscrete:
    return FiniteDiscrete([-1, 1], [Fraction(1, 2), Fraction(1, 2)])


def standardized_bernoulli(p: float) -> FiniteDiscrete:
    """(B - p)/sqrt(pq) for B ~ Bernoulli(p)."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    q = 1.0 - p
    s = math.sqrt(p * q)
    return FiniteDiscrete([-p / s, q / s], [q, p])


class Uniform(ScalarDistribution):
    """Uniform on [-a, a]."""

    symmetric = True

    def __init__(self, half_width: float):
        if half_width <= 0:
            raise ValueError("half_width must be positive")
        self.a = float(half_width)
        self.support = (-self.a, self.a)
        self.variance = self.a ** 2 / 3.0
        self.abs_moment3 = self.a ** 3 / 4.0

    def __repr__(self):
        return f"Uniform(half_width={self.a!r})"

    def cdf(self, x):
        return _scalar_or_array(np.clip((np.asarray(x, dtype=float) + self.a) / (2 * self.a), 0.0, 1.0))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return _scalar_or_array(np.where(np.abs(x) <= self.a, 0.5 / self.a, 0.0))

    def quantile(self, u):
        return _scalar_or_array(self.a * (2.0 * np.asarray(u, dtype=float) - 1.0))

    def sample(self, rng, size=None):
        return rng.uniform(-self.a, self.a, size)

    def partial_moments(self, x):
        a = self.a
        t = np.clip(np.asarray(x, dtype=float), -a, a)
        m1 = (t * t - a * a) / (4 * a)
        m2 = (t ** 3 + a ** 3) / (6 * a)
        return _scalar_or_array(m1), _scalar_or_array(m2)

    def square_bias_sample(self, rng, size=None):
        # rejection from the base with acceptance x^2 / a^2
        n = 1 if size is None else int(np.prod(size))
        out = np.empty(0)
        while out.size < n:
            k = max(2 * (n - out.size) + 16, 64)
            x = rng.uniform(-self.a, self.a, k)
            acc = rng.random(k) * self.a ** 2 <= x * x
            out = np.concatenate([out, x[acc]])
        out = out[:n]
        return float(out[0]) if size is None else out.reshape(size)

    def square_bias_cdf(self, x):
        t = np.clip(np.asarray(x, dtype=float), -self.a, self.a)
        return _scalar_or_array((t ** 3 + self.a ** 3) / (2 * self.a ** 3))

    def scaled(self, c):
        return Uniform(abs(c) * self.a)


def uniform(sigma: float = 1.0) -> Uniform:
    """Mean-zero uniform with standard deviation ``sigma``."""
    return Uniform(math.sqrt(3.0) * sigma)


class Normal(ScalarDistribution):
    """N(0, s^2); the fixed point of the zero-bias map."""

    symmetric = True

    def __init__(self, sd: float = 1.0):
        if sd <= 0:
            raise ValueError("sd must be positive")
        self.s = float(sd)
        self.variance = self.s ** 2
        self.abs_moment3 = 2.0 * math.sqrt(2.0 / math.pi) * self.s ** 3

    def __repr__(self):
        return f"Normal(sd={self.s!r})"

    def cdf(self, x):
        return _scalar_or_array(special.ndtr(np.asarray(x, dtype=float) / self.s))

    def pdf(self, x):
        return _scalar_or_array(std_normal_pdf(np.asarray(x, dtype=float) / self.s) / self.s)

    def quantile(self, u):
        return _scalar_or_array(self.s * special.ndtri(np.asarray(u, dtype=float)))

    def _bracket(self):
        z = -special.ndtri(_TINY_U)
        return -z * self.s, z * self.s

    def sample(self, rng, size=None):
        return self.s * rng.standard_normal(size)

    def partial_moments(self, x):
        t = np.asarray(x, dtype=float) / self.s
        phi = std_normal_pdf(t)
        m1 = -self.s * phi
        m2 = self.s ** 2 * (special.ndtr(t) - t * phi)
        return _scalar_or_array(m1), _scalar_or_array(m2)

    def square_bias_sample(self, rng, size=None):
        # density x^2 phi(x) / s^2: a signed chi with three degrees of freedom
        r = np.sqrt(rng.chisquare(3, size))
        sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        return _scalar_or_array(self.s * sign * r)

    def square_bias_cdf(self, x):
        t = np.asarray(x, dtype=float) / self.s
        return _scalar_or_array(special.ndtr(t) - t * std_normal_pdf(t))

    def zero_bias_quantile(self, u):
        return self.quantile(u)

    def scaled(self, c):
        return Normal(abs(c) * self.s)

    def cdf_function(self):
        from .metrics import STD_NORMAL
        if self.s == 1.0:
            return STD_NORMAL
        return super().cdf_function()


class NormalMixture(ScalarDistribution):
    """Law of D + sZ with D finite discrete (mean zero) and Z standard normal.

    Used for sums of a discrete summand and an independent normal component.
    """

    kind = "mixture"

    def __init__(self, values, probs, sd: float):
        self.discrete = FiniteDiscrete(values, probs)
        if sd <= 0:
            raise ValueError("sd must be positive")
        self.s = float(sd)
        self.v = self.discrete.values
        self.p = self.discrete.probs
        self.variance = self.discrete.variance + self.s ** 2
        self.symmetric = self.discrete.symmetric
        self.abs_moment3 = math.fsum(
            float(pk) * _normal_abs3(float(vk), self.s) for vk, pk in zip(self.v, self.p))

    def __repr__(self):
        return f"NormalMixture(values={self.v.tolist()}, probs={self.p.tolist()}, sd={self.s!r})"

    def _t(self, x):
        x = np.asarray(x, dtype=float)
        return (x[..., None] - self.v) / self.s

    def cdf(self, x):
        return _scalar_or_array(special.ndtr(self._t(x)) @ self.p)

    def pdf(self, x):
        return _scalar_or_array(std_normal_pdf(self._t(x)) @ self.p / self.s)

    def sample(self, rng, size=None):
        d = self.discrete.sample(rng, size)
        return d + self.s * rng.standard_normal(size)

    def _bracket(self):
        z = -special.ndtri(_TINY_U)
        return float(self.v[0] - z * self.s), float(self.v[-1] + z * self.s)

    def partial_moments(self, x):
        t = self._t(x)
        Phi = special.ndtr(t)
        phi = std_normal_pdf(t)
        s = self.s
        v = self.v
        m1 = (v * Phi - s * phi) @ self.p
        m2 = (v * v * Phi - 2 * v * s * phi + s * s * (Phi - t * phi)) @ self.p
        return _scalar_or_array(m1), _scalar_or_array(m2)

    def scaled(self, c):
        c = abs(float(c))
        return NormalMixture(c * self.v, self.p, c * self.s)


def _normal_abs3(mu, s):
    """E|mu + sZ|^3."""
    t = mu / s
    Phi = special.ndtr(t)
    phi = std_normal_pdf(t)
    # E|Y|^3 = E Y^3 - 2 E[Y^3; Y < 0]
    ey3 = mu ** 3 + 3 * mu * s * s
    neg = ey3 * (1 - Phi) - s * phi * (mu * mu + 2 * s * s)
    return float(ey3 - 2 * neg)


# -- text format ---------------------------------------------------------------

def _parse_number(tok: str):
    tok = tok.strip()
    if "/" in tok:
        return Fraction(tok)
    try:
        return int(tok)
    except ValueError:
        return float(tok)


def load_discrete(path, center: bool = False) -> FiniteDiscrete:
    """Read ``value<TAB>prob`` lines; probabilities must sum to 1 within 1e-12."""
    values, probs = [], []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'value<TAB>prob'")
        values.append(_parse_number(parts[0]))
        probs.append(_parse_number(parts[1]))
    return FiniteDiscrete(values, probs, center=center)


def dump_discrete(dist: FiniteDiscrete, path) -> None:
    lines = [f"{v!r}\t{p!r}" for v, p in zip(dist.values.tolist(), dist.probs.tolist())]
    Path(path).write_text("\n".join(lines) + "\n")


def catalog():
    """Standardized built-in bases keyed by name."""
    return {
        "rademacher": rademacher(),
        "bernoulli-0.5": standardized_bernoulli(0.5),
        "bernoulli-0.2": standardized_bernoulli(0.2),
        "uniform": uniform(),
        "normal": Normal(),
        "three-point": FiniteDiscrete([-2, 0, 1], [Fraction(1, 6), Fraction(1, 2), Fraction(1, 3)]).standardized(),
        "normal-mixture": NormalMixture([-1.0, 1.0], [0.5, 0.5], 1.0).standardized(),
    }
