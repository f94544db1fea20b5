import math
from fractions import Fraction

import numpy as np
import pytest

from l1stein.distributions import (FiniteDiscrete, Normal, NormalMixture, Uniform, catalog,
                                   dump_discrete, load_discrete, rademacher, standardized_bernoulli)


def test_exact_mean_check():
    with pytest.raises(ValueError, match="mean"):
        FiniteDiscrete([0, 1], [Fraction(1, 2), Fraction(1, 2)])
    with pytest.raises(ValueError, match="sum"):
        FiniteDiscrete([-1, 1], [Fraction(1, 2), Fraction(1, 3)])


def test_center_flag():
    d = FiniteDiscrete([0, 1], [Fraction(1, 2), Fraction(1, 2)], center=True)
    assert d.values.tolist() == [-0.5, 0.5]


def test_float_checks_use_tolerance():
    FiniteDiscrete([-1.0, 1.0], [0.5, 0.5 + 1e-13])
    with pytest.raises(ValueError):
        FiniteDiscrete([-1.0, 1.0], [0.5, 0.5 + 1e-9])


def test_negative_probability_rejected():
    with pytest.raises(ValueError):
        FiniteDiscrete([-1, 0, 1], [Fraction(1, 2), Fraction(-1, 2), Fraction(1)])


@pytest.mark.parametrize("name", sorted(catalog()))
def test_catalog_standardized(name):
    b = catalog()[name]
    assert b.variance == pytest.approx(1.0, abs=1e-12)
    assert abs(b.mean) <= 1e-12


@pytest.mark.parametrize("name", sorted(catalog()))
def test_sampler_moments(name, rng):
    b = catalog()[name]
    x = b.sample(rng, 400_000)
    se = math.sqrt(1 / x.size)
    assert abs(x.mean()) <= 4 * se
    x2 = x * x
    assert abs(x2.mean() - 1.0) <= max(4 * x2.std() / math.sqrt(x.size), 1e-12)


@pytest.mark.parametrize("name", sorted(catalog()))
def test_abs_moment3_by_quadrature(name, rng):
    b = catalog()[name]
    x = np.abs(b.sample(rng, 400_000)) ** 3
    assert abs(x.mean() - b.abs_moment3) <= 4 * x.std() / math.sqrt(x.size)


def test_partial_moments_uniform_closed_form():
    u = Uniform(2.0)
    m1, m2 = u.partial_moments(0.5)
    assert m1 == pytest.approx((0.25 - 4) / 8)
    assert m2 == pytest.approx((0.125 + 8) / 12)


def test_normal_mixture_partial_moments_by_quadrature():
    from scipy import integrate
    m = NormalMixture([-1.0, 2.0], [2 / 3, 1 / 3], 0.7)
    for x in (-1.3, 0.0, 0.8, 3.0):
        m1, m2 = m.partial_moments(x)
        assert m1 == pytest.approx(integrate.quad(lambda t: t * m.pdf(t), -np.inf, x)[0], abs=1e-10)
        assert m2 == pytest.approx(integrate.quad(lambda t: t * t * m.pdf(t), -np.inf, x)[0], abs=1e-10)
    a3 = integrate.quad(lambda t: abs(t) ** 3 * m.pdf(t), -np.inf, np.inf)[0]
    assert m.abs_moment3 == pytest.approx(a3, abs=1e-10)


def test_scaled_and_standardized():
    d = standardized_bernoulli(0.3).scaled(2.0)
    assert d.variance == pytest.approx(4.0)
    assert d.standardized().variance == pytest.approx(1.0)
    assert Normal(3.0).standardized().variance == pytest.approx(1.0)


def test_discrete_file_roundtrip(tmp_path):
    d = catalog()["three-point"]
    path = tmp_path / "law.tsv"
    dump_discrete(d, path)
    back = load_discrete(path)
    assert np.array_equal(back.values, d.values) and np.array_equal(back.probs, d.probs)


def test_discrete_file_rational_and_errors(tmp_path):
    p = tmp_path / "r.tsv"
    p.write_text("-1\t1/2\n1\t1/2\n")
    assert load_discrete(p).variance == 1.0
    p.write_text("-1\t1/2\n1\t1/3\n")
    with pytest.raises(ValueError):
        load_discrete(p)
    p.write_text("-1 1/2\n")
    with pytest.raises(ValueError):
        load_discrete(p)


def test_rademacher_quantile_and_cdf():
    r = rademacher()
    assert r.cdf(-1.0) == 0.5 and r.cdf(0.99) == 0.5 and r.cdf(1.0) == 1.0
    assert r.quantile(0.5) == -1.0 and r.quantile(0.51) == 1.0
