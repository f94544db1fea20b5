"""L1 (Wasserstein-1) distances between distribution functions on the line.

Two routes are provided and are meant to cross-check each other:

* ``l1_cdf_distance`` integrates ``|F(t) - G(t)|`` over ``t``;
* ``l1_quantile_coupling`` integrates ``|F^{-1}(u) - G^{-1}(u)|`` over ``u``.

Step functions against the standard normal are integrated in closed form
using the antiderivative ``t * Phi(t) + phi(t)`` of ``Phi``; this is also the
engine behind ``empirical_l1_to_normal``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, special

PHI_CLAMP = 8.0
_SQRT_2PI = math.sqrt(2.0 * math.pi)


class QuadratureError(RuntimeError):
    """Raised when an integral misses its requested tolerance."""

    def __init__(self, message, value, error):
        super().__init__(f"{message} (value={value!r}, error estimate={error!r})")
        self.value = value
        self.error = error


def std_normal_cdf(x):
    """Standard normal CDF; saturates to exactly 0/1 beyond |x| = 8."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("std_normal_cdf requires finite input")
    out = special.ndtr(arr)
    out = np.where(arr > PHI_CLAMP, 1.0, np.where(arr < -PHI_CLAMP, 0.0, out))
    return float(out) if out.ndim == 0 else out


def std_normal_pdf(x):
    arr = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * arr * arr) / _SQRT_2PI
    return float(out) if out.ndim == 0 else out


def std_normal_quantile(u):
    out = special.ndtri(np.asarray(u, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class Cdf:
    """A distribution function together with what quadrature needs to know.

    ``fn`` must accept scalars and numpy arrays. ``atoms`` lists the jump
    locations. ``steps``, when set, is ``(locations, levels)`` for a pure step
    function whose value on ``[locations[k], locations[k+1])`` is
    ``levels[k]``. ``normal`` marks the standard normal CDF.
    """

    fn: Callable
    support: tuple = (-math.inf, math.inf)
    atoms: tuple = ()
    steps: Optional[tuple] = None
    normal: bool = False

    def __call__(self, x):
        return self.fn(x)


@dataclass(frozen=True)
class Quantile:
    """A quantile function ``u -> sup{x : H(x) < u}`` on (0, 1).

    ``jumps`` are the u-values at which the function is discontinuous
    (the CDF levels reached at atoms).
    """

    fn: Callable
    support: tuple = (-math.inf, math.inf)
    jumps: tuple = ()

    def __call__(self, u):
        return self.fn(u)


@dataclass(frozen=True)
class QuadratureSpec:
    tol: float = 1e-12
    limit: int = 500
    tail_eps: float = 1e-7
    max_error: float = 1e-9


STD_NORMAL = Cdf(std_normal_cdf, normal=True)
STD_NORMAL_QUANTILE = Quantile(std_normal_quantile)


def step_cdf(locations, levels) -> Cdf:
    """Build a right-continuous step CDF from sorted locations and levels."""
    locs = np.asarray(locations, dtype=float)
    lev = np.asarray(levels, dtype=float)

    def fn(x):
        idx = np.searchsorted(locs, x, side="right")
        out = np.where(idx > 0, lev[np.maximum(idx - 1, 0)], 0.0)
        return float(out) if np.ndim(out) == 0 else out

    return Cdf(fn, support=(float(locs[0]), float(locs[-1])),
               atoms=tuple(locs.tolist()), steps=(locs, lev))


# -- closed-form pieces against Phi ------------------------------------------

def _phi_antiderivative(t):
    # d/dt [t Phi(t) + phi(t)] = Phi(t)
    return t * special.ndtr(t) + std_normal_pdf(t)


def _lower_tail_integral(t):
    """Integral of Phi over (-inf, t]."""
    return _phi_antiderivative(t)


def _upper_tail_integral(t):
    """Integral of 1 - Phi over [t, inf)."""
    return _phi_antiderivative(-t)


def _level_minus_phi_abs(c, a, b):
    """Integral of |c - Phi(t)| over [a, b], vectorized over arrays.

    Levels above 1/2 are reflected (t -> -t, c -> 1 - c) so the antiderivative
    is always evaluated where it is small.
    """
    c = np.asarray(c, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    flip = c > 0.5
    cc = np.where(flip, 1.0 - c, c)
    aa = np.where(flip, -b, a)
    bb = np.where(flip, -a, b)
    with np.errstate(divide="ignore"):
        t0 = np.clip(special.ndtri(cc), aa, bb)
    A_a = _phi_antiderivative(aa)
    A_b = _phi_antiderivative(bb)
    A_0 = _phi_antiderivative(t0)
    left = cc * (t0 - aa) - (A_0 - A_a)
    right = (A_b - A_0) - cc * (bb - t0)
    return np.maximum(left, 0.0) + np.maximum(right, 0.0)


def _step_vs_normal(locs, levels) -> float:
    """Exact integral of |S - Phi| for a step CDF S ending at level 1."""
    locs = np.asarray(locs, dtype=float)
    levels = np.asarray(levels, dtype=float)
    total = [float(_lower_tail_integral(locs[0])),
             float(_upper_tail_integral(locs[-1]))]
    if locs.size > 1:
        mid = _level_minus_phi_abs(levels[:-1], locs[:-1], locs[1:])
        total.append(float(np.sum(mid)))
    return math.fsum(total)


def _step_vs_step(f: Cdf, g: Cdf) -> float:
    grid = np.union1d(f.steps[0], g.steps[0])
    diff = np.abs(f(grid[:-1]) - g(grid[:-1]))
    return math.fsum((diff * np.diff(grid)).tolist())


# -- public distances -----------------------------------------------------------

def _quad(fn, a, b, spec, points=None):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        kw = {"epsabs": spec.tol, "epsrel": spec.tol, "limit": spec.limit}
        if points is not None and len(points) and math.isfinite(a) and math.isfinite(b):
            kw["points"] = points
        return integrate.quad(fn, a, b, **kw)


def l1_cdf_distance(f: Cdf, g: Cdf, quad: QuadratureSpec = QuadratureSpec(),
                    full_output: bool = False):
    """Integral of |F - G| over the real line.

    Splits the domain at every atom of either CDF and at finite support
    endpoints; step-vs-normal and step-vs-step pairs are done exactly.
    Raises ``QuadratureError`` if the error estimate exceeds
    ``quad.max_error``.
    """
    if f.steps is not None and g.normal:
        value, err = _step_vs_normal(*f.steps), 0.0
    elif g.steps is not None and f.normal:
        value, err = _step_vs_normal(*g.steps), 0.0
    elif f.steps is not None and g.steps is not None:
        value, err = _step_vs_step(f, g), 0.0
    else:
        value, err = _l1_cdf_quad(f, g, quad)
    if err > quad.max_error:
        raise QuadratureError("L1 CDF quadrature did not converge", value, err)
    return (value, err) if full_output else value


_CUT_LEVELS = np.array([1e-9, 1e-6, 1e-3, 0.02, 0.1, 0.25, 0.5, 0.75, 0.9, 0.98,
                        1 - 1e-3, 1 - 1e-6, 1 - 1e-9])


def _level_points(cdf: Cdf, levels=_CUT_LEVELS, iters=80):
    """Points where ``cdf`` crosses each level (bisection on the monotone fn).

    Used as quadrature breakpoints, so that a law concentrated on a small
    part of a wide support is never missed by the first Kronrod pass.
    """
    lo, hi = cdf.support
    span = 1.0
    if not math.isfinite(lo):
        while float(cdf(-span)) > levels[0] and span < 1e12:
            span *= 2.0
        lo = -span
    span = 1.0
    if not math.isfinite(hi):
        while float(cdf(span)) < levels[-1] and span < 1e12:
            span *= 2.0
        hi = span
    a = np.full(levels.size, lo, dtype=float)
    b = np.full(levels.size, hi, dtype=float)
    for _ in range(iters):
        mid = 0.5 * (a + b)
        below = np.asarray(cdf(mid), dtype=float) < levels
        a = np.where(below, mid, a)
        b = np.where(below, b, mid)
    return set(b.tolist())


def _l1_cdf_quad(f, g, spec):
    lo = min(f.support[0], g.support[0])
    hi = max(f.support[1], g.support[1])
    cuts = set(f.atoms) | set(g.atoms)
    cuts.update(s for s in (*f.support, *g.support) if math.isfinite(s))
    cuts |= _level_points(f) | _level_points(g)
    if not cuts:
        cuts = {0.0}
    cuts = sorted(c for c in cuts if lo <= c <= hi)
    edges = [lo, *cuts, hi]

    def integrand(t):
        return abs(float(f(t)) - float(g(t)))

    values, errors = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if a == b:
            continue
        v, e = _quad(integrand, a, b, spec)
        values.append(v)
        errors.append(e)
    return math.fsum(values), math.fsum(errors)


def l1_quantile_coupling(f_inv: Quantile, g_inv: Quantile,
                         quad: QuadratureSpec = QuadratureSpec(),
                         full_output: bool = False):
    """E|F^{-1}(U) - G^{-1}(U)| for U uniform on (0, 1).

    The body ``[eps, 1 - eps]`` is integrated with breakpoints at the jump
    levels of both quantile functions. The two tails are integrated after the
    substitution ``u = eps * exp(-s)``, which removes the endpoint singularity
    of unbounded quantiles; their total is returned as the tail remainder when
    ``full_output`` is set, as ``(value, error, tail)``.
    """
    eps = quad.tail_eps

    def integrand(u):
        return abs(float(f_inv(u)) - float(g_inv(u)))

    jumps = sorted({j for j in (*f_inv.jumps, *g_inv.jumps) if eps < j < 1 - eps})
    body, err = _quad(integrand, eps, 1.0 - eps, quad, points=jumps)

    def lower(s):
        u = eps * math.exp(-s)
        return integrand(u) * u

    def upper(s):
        u = eps * math.exp(-s)
        return integrand(1.0 - u) * u

    # u underflows to 0 (where an unbounded quantile is infinite) far out in
    # the lower tail, and 1 - u rounds to 1 once u < 1e-16; cap both there
    t_lo, e_lo = _quad(lower, 0.0, math.log(eps / 1e-300), quad)
    s_max = math.log(eps / 1e-16)
    t_hi, e_hi = _quad(upper, 0.0, s_max, quad)
    if math.isfinite(f_inv.support[1]) and math.isfinite(g_inv.support[1]):
        t_hi += 1e-16 * (max(f_inv.support[1], g_inv.support[1])
                         - min(f_inv.support[0], g_inv.support[0]))
    tail = t_lo + t_hi
    value = body + tail
    error = err + e_lo + e_hi
    if error > quad.max_error:
        raise QuadratureError("L1 quantile quadrature did not converge", value, error)
    return (value, error, tail) if full_output else value


def empirical_l1_to_normal(sample: Sequence[float], rng=None, folds: int = 20):
    """Exact L1 distance between the empirical CDF of ``sample`` and Phi.

    Returns ``(estimate, stderr_proxy)``. The proxy is the standard deviation
    of the same statistic over ``folds`` half-size subsamples drawn without
    replacement, scaled by 1/sqrt(2). ``rng`` seeds the subsampling; pass a
    generator for reproducible proxies.
    """
    x = np.sort(np.asarray(sample, dtype=float))
    m = x.size
    if m < 2:
        raise ValueError("need at least two sample points")
    estimate = _empirical_sorted(x)
    if folds <= 1:
        return estimate, 0.0
    rng = np.random.default_rng(rng)
    half = m // 2
    subs = []
    for _ in range(folds):
        idx = rng.choice(m, size=half, replace=False)
        idx.sort()
        subs.append(_empirical_sorted(x[idx]))
    return estimate, float(np.std(subs, ddof=1) / math.sqrt(2.0))


def _empirical_sorted(x) -> float:
    m = x.size
    levels = np.arange(1, m + 1, dtype=float) / m
    return _step_vs_normal(x, levels)
