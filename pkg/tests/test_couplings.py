import math
import warnings

import numpy as np
import pytest

from l1stein import couplings, metrics
from l1stein.cone import ConeModel, ConeParams
from l1stein.couplings import (GaussianIndependentPair, IndependentCoordinates, IndependentSumModel,
                               coordinate_symmetric_couple, exchangeable_pair_couple,
                               general_sum_bound, iid_sum_bound, independent_sum_couple,
                               regression_slope, third_moment_bound)
from l1stein.distributions import Normal, catalog, rademacher, standardized_bernoulli, uniform
from l1stein.zerobias import verify_characterization, zero_bias_cdf

R3 = math.sqrt(3.0)


def mc_ok(x, target):
    return abs(x.mean() - target) <= 4 * x.std() / math.sqrt(x.size)


def test_single_rademacher_summand(rng):
    model = IndependentSumModel([rademacher()])
    pair = independent_sum_couple(model, rng, 200_000)
    assert set(np.unique(pair.w)) == {-1.0, 1.0}
    assert np.all(np.abs(pair.w_star) <= 1.0)
    # comonotone: the zero-bias draw sits on the same side as X
    assert np.all(pair.w_star * pair.w >= 0)
    assert mc_ok(pair.cost, 0.5)
    assert np.array_equal(pair.cost, np.abs(pair.w_star - pair.w))


def test_normal_summands_zero_bound(rng):
    model = IndependentSumModel.iid(Normal(), 8)
    pair = independent_sum_couple(model, rng, 10_000)
    assert np.allclose(pair.w, pair.w_star)
    assert iid_sum_bound(Normal(), 8) == 0.0
    assert general_sum_bound(model) == 0.0


@pytest.mark.parametrize("p,n", [(0.5, 4), (0.2, 9), (0.7, 16)])
def test_bernoulli_cost_matches_corollary(p, n, rng):
    q = 1 - p
    model = IndependentSumModel.iid(standardized_bernoulli(p), n)
    pair = independent_sum_couple(model, rng, 400_000)
    assert mc_ok(pair.cost, (p * p + q * q) / (2 * math.sqrt(n * p * q)))


def test_iid_sum_bound_values():
    assert iid_sum_bound(standardized_bernoulli(0.5), 4) == pytest.approx(0.5, abs=1e-12)
    assert iid_sum_bound(uniform(), 4) == pytest.approx(R3 / 8, abs=1e-9)
    for n in (1, 4, 16, 64):
        assert iid_sum_bound(uniform(), n) == pytest.approx(R3 / (4 * math.sqrt(n)), abs=1e-9)
    with pytest.raises(ValueError):
        iid_sum_bound(uniform(2.0), 4)


def test_general_sum_bound_cases():
    halves = IndependentSumModel([standardized_bernoulli(0.5)] * 2)
    assert general_sum_bound(halves) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert general_sum_bound(halves) == pytest.approx(iid_sum_bound(standardized_bernoulli(0.5), 2), abs=1e-12)
    # X + Z: only the non-normal summand contributes
    x = uniform().scaled(math.sqrt(0.3))
    z = Normal(math.sqrt(0.7))
    model = IndependentSumModel([x, z])
    d = metrics.l1_cdf_distance(zero_bias_cdf(uniform()).cdf_function(), uniform().cdf_function())
    assert general_sum_bound(model) == pytest.approx(2 * 0.3 * math.sqrt(0.3) * d, abs=1e-9)


def test_general_sum_scaling_matches_direct_distance():
    # the standardized route equals the raw ||G_i* - G_i|| with Prop 2.1 scaling
    s = uniform().scaled(0.5)
    raw = metrics.l1_cdf_distance(zero_bias_cdf(s).cdf_function(), s.cdf_function())
    std = metrics.l1_cdf_distance(zero_bias_cdf(uniform()).cdf_function(), uniform().cdf_function())
    assert raw == pytest.approx(0.5 * std, abs=1e-9)


def test_third_moment_bound_values():
    for n in (1, 4, 25):
        m = IndependentSumModel.iid(uniform(), n)
        assert third_moment_bound(m) == pytest.approx(9 * R3 / 4 / math.sqrt(n), rel=1e-12)
        r = IndependentSumModel.iid(rademacher(), n)
        assert third_moment_bound(r) == pytest.approx(3 / math.sqrt(n), rel=1e-12)


@pytest.mark.parametrize("name", sorted(catalog()))
def test_third_moment_bound_dominates(name):
    base = catalog()[name]
    for n in (1, 4, 16):
        m = IndependentSumModel.iid(base, n)
        assert third_moment_bound(m) >= iid_sum_bound(base, n) - 1e-12


def test_model_validation():
    with pytest.raises(ValueError):
        IndependentSumModel([])
    with pytest.raises(ValueError):
        IndependentSumModel([uniform(2.0)], normalize=False)
    m = IndependentSumModel([uniform(2.0), rademacher()])
    assert m.total_variance == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("names", [("uniform", "bernoulli-0.2", "three-point"), ("normal-mixture", "uniform")])
def test_independent_sum_characterization(names, rng):
    model = IndependentSumModel([catalog()[n] for n in names])
    pair = independent_sum_couple(model, rng, 400_000)
    for r in verify_characterization(pair.w, pair.w_star):
        assert r.ok, r


def test_independent_sum_index_frequencies(rng):
    model = IndependentSumModel([uniform().scaled(0.5), rademacher(), uniform().scaled(2.0)])
    pair = independent_sum_couple(model, rng, 200_000)
    freq = np.bincount(pair.diagnostics["index"], minlength=3) / 200_000
    p = model.variances
    assert np.all(np.abs(freq - p) <= 4 * np.sqrt(p * (1 - p) / 200_000))


def test_coordinate_symmetric_n1_is_scalar_zero_bias(rng):
    model = IndependentCoordinates([uniform()])
    pair = coordinate_symmetric_couple(model, rng, 400_000)
    for r in verify_characterization(pair.w, pair.w_star):
        assert r.ok, r


def test_coordinate_symmetric_rademacher(rng):
    th = np.array([0.6, 0.8])
    coords = [rademacher().scaled(t) for t in th]
    model = IndependentCoordinates(coords)
    pair = coordinate_symmetric_couple(model, rng, 100_000)
    idx = pair.diagnostics["index"]
    # W* - W = (U - 1) Y_I, so |W* - W| <= 2 theta_I
    assert np.all(pair.cost <= 2 * th[idx] + 1e-12)
    for r in verify_characterization(pair.w, pair.w_star):
        assert r.ok, r


def test_coordinate_symmetric_cone(rng):
    model = ConeModel(ConeParams.uniform(3, 2.0))
    pair = coordinate_symmetric_couple(model, rng, 1_000_000)
    for r in verify_characterization(pair.w, pair.w_star):
        assert r.ok, r


def test_nonsymmetric_coordinates_rejected():
    with pytest.raises(ValueError):
        IndependentCoordinates([standardized_bernoulli(0.3)])


def test_gaussian_pair(rng):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        model = GaussianIndependentPair(2.0)
    pair = exchangeable_pair_couple(model, rng, 400_000)
    for r in verify_characterization(pair.w, pair.w_star):
        assert r.ok, r
    y1, y2 = model.draw_pair(rng, 400_000)
    slope, se = regression_slope(y1, y2)
    assert abs(slope - (1 - model.lam)) <= 4 * se


def test_lambda_one_warns():
    with pytest.warns(RuntimeWarning, match="lambda = 1"):
        GaussianIndependentPair().check_lambda()


def test_lambda_out_of_range():
    m = GaussianIndependentPair()
    m.lam = 1.5
    with pytest.raises(ValueError):
        m.check_lambda()


def test_coupled_pair_concat(rng):
    model = IndependentSumModel.iid(uniform(), 2)
    a = independent_sum_couple(model, rng, 5)
    b = independent_sum_couple(model, rng, 7)
    c = couplings.CoupledPair.concat([a, b])
    assert len(c) == 12 and c.diagnostics["index"].size == 12
