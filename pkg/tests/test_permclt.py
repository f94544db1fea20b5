import itertools
import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from l1stein import permclt
from l1stein.couplings import regression_slope
from l1stein.permclt import (BiasedIndexDraw, PermutationModel, ScoreMatrix, bound_factor,
                             center_scores, dagger_permutations, direct_sums, enumerate_exact,
                             matrix_stats, perm_couple, sample_biased_indices, theorem61_bound,
                             variance_pairs, variance_rowcol)
from l1stein.zerobias import verify_characterization


@pytest.fixture(autouse=True)
def _quiet_lambda():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="lambda = 1", category=RuntimeWarning)
        yield


def random_int_matrix(seed, n, hi=10):
    return np.random.default_rng(seed).integers(-hi, hi + 1, (n, n))


def test_identity_n3_bruteforce():
    counts = [sum(p[i] == i for i in range(3)) for p in itertools.permutations(range(3))]
    st = matrix_stats(np.eye(3))
    assert st.sigma2 == pytest.approx(np.var(counts), abs=1e-14)
    assert st.sigma2 == pytest.approx(1.0, abs=1e-14)
    assert st.a3 == pytest.approx(10 / 9, abs=1e-14)
    assert st.mu == pytest.approx(1.0)
    assert st.lam == 1.0
    assert theorem61_bound(ScoreMatrix(np.eye(3))) == pytest.approx(10 / 9 / 2 * 46, rel=1e-13)
    assert theorem61_bound(ScoreMatrix(np.eye(3))) == pytest.approx(25.56, abs=0.005)


def test_product_scores_centering():
    b = np.array([1.0, 4.0, -2.0, 0.5])
    c = np.array([3.0, -1.0, 2.0, 7.0])
    d = center_scores(np.outer(b, c))
    assert np.allclose(d, np.outer(b - b.mean(), c - c.mean()), atol=1e-13)


def test_centered_rows_and_columns_sum_to_zero():
    d = ScoreMatrix(random_int_matrix(1, 7) * 0.37).centered
    assert np.max(np.abs(d.sum(axis=0))) <= 1e-12 and np.max(np.abs(d.sum(axis=1))) <= 1e-12


def test_variance_formulas_agree_exactly():
    gen = np.random.default_rng(2)
    for t in range(50):
        n = int(gen.integers(3, 9))
        a = gen.integers(-20, 21, (n, n)).tolist()
        v88 = variance_rowcol(a)
        v89 = variance_pairs(a)
        assert isinstance(v88, Fraction) and v88 == v89
        assert float(v88) == pytest.approx(variance_pairs(np.asarray(a, float)), rel=1e-10)


def test_degenerate_matrix_rejected():
    r = np.array([1.0, 5.0, -2.0, 3.0])
    s = np.array([0.0, 2.0, 2.0, -1.0])
    with pytest.raises(ValueError, match="row"):
        ScoreMatrix(r[:, None] + s[None, :])
    with pytest.raises(ValueError):
        ScoreMatrix(np.eye(2))
    with pytest.raises(ValueError):
        ScoreMatrix(np.ones((3, 4)))


def test_table_mass_and_zero_cells():
    m = ScoreMatrix(random_int_matrix(3, 6))
    tab = m._sampler
    assert abs(math.fsum(tab.probs.tolist()) - 1.0) < 1e-12
    assert tab.total == pytest.approx(tab.expected_total, rel=1e-12)
    p = tab.probs.reshape((6,) * 4)
    for i in range(6):
        assert np.all(p[i, i] == 0) and np.all(p[:, :, i, i] == 0)


def test_sampler_frequencies_match_table(rng):
    m = ScoreMatrix(random_int_matrix(4, 4))
    idx = sample_biased_indices(m, rng, 1_000_000)
    assert np.all(idx.i != idx.j) and np.all(idx.k != idx.l)
    flat = ((idx.i * 4 + idx.j) * 4 + idx.k) * 4 + idx.l
    freq = np.bincount(flat, minlength=256) / flat.size
    p = m._sampler.probs
    assert np.all(np.abs(freq - p) <= 4 * np.sqrt(p * (1 - p) / flat.size) + 1e-15)


def test_two_stage_sampler_matches_table(rng):
    m = ScoreMatrix(random_int_matrix(5, 5))
    two = permclt._TwoStageSampler(m.centered)
    idx = two.sample(rng, 400_000)
    flat = ((idx.i * 5 + idx.j) * 5 + idx.k) * 5 + idx.l
    freq = np.bincount(flat, minlength=625) / flat.size
    p = m._sampler.probs
    assert np.all(np.abs(freq - p) <= 4 * np.sqrt(p * (1 - p) / flat.size) + 1e-15)


def test_large_n_uses_two_stage(rng):
    m = ScoreMatrix(np.random.default_rng(6).standard_normal((70, 70)))
    assert isinstance(m._sampler, permclt._TwoStageSampler)
    pair = perm_couple(m, rng, 2000)
    assert np.isfinite(pair.w_star).all()


def test_dagger_postcondition(rng):
    m = ScoreMatrix(random_int_matrix(7, 6))
    n = 6
    pi = permclt.random_permutations(rng, 50_000, n)
    idx = sample_biased_indices(m, rng, 50_000)
    dag, ddag = dagger_permutations(pi, idx)
    rows = np.arange(pi.shape[0])
    for p in (dag, ddag):
        got = np.sort(np.stack([p[rows, idx.i], p[rows, idx.j]], axis=1), axis=1)
        want = np.sort(np.stack([idx.k, idx.l], axis=1), axis=1)
        assert np.array_equal(got, want)
        assert np.all(np.sort(p, axis=1) == np.arange(n))


def test_r2_case_v_formula():
    d = ScoreMatrix(random_int_matrix(8, 5)).centered
    pi = np.array([[2, 0, 4, 1, 3]])
    I, J = np.array([1]), np.array([3])
    K, L = pi[0, I], pi[0, J]
    dag, ddag = dagger_permutations(pi, BiasedIndexDraw(I, J, K, L))
    y = lambda p: d[np.arange(5), p[0]].sum()
    assert np.array_equal(dag, pi)
    u = 0.3
    v = u * y(dag) + (1 - u) * y(ddag) - y(pi)
    i, j, k, l = int(I[0]), int(J[0]), int(K[0]), int(L[0])
    assert v == pytest.approx((1 - u) * (d[i, l] + d[j, k] - d[i, k] - d[j, l]), abs=1e-12)


def test_identity_n4_characterization(rng):
    pair = perm_couple(ScoreMatrix(np.eye(4)), rng, 1_000_000)
    for r in verify_characterization(pair.w, pair.w_star):
        assert r.ok, r


def test_diagnostics(rng):
    m = ScoreMatrix(random_int_matrix(9, 5))
    pair = perm_couple(m, rng, 10_000)
    assert set(np.unique(pair.diagnostics["R"])) <= {0, 1, 2}
    assert np.allclose(pair.diagnostics["V"], m.sigma * (pair.w_star - pair.w))


def test_marginal_matches_direct(rng):
    m = ScoreMatrix(random_int_matrix(10, 6))
    pair = perm_couple(m, rng, 100_000)
    assert stats.ks_2samp(pair.w, direct_sums(m, rng, 100_000)).pvalue > 1e-4


def test_regression_slope(rng):
    m = ScoreMatrix(random_int_matrix(11, 7))
    y1, y2 = PermutationModel(m).draw_pair(rng, 400_000)
    slope, se = regression_slope(y1, y2)
    assert abs(slope - (1 - 2 / 6)) <= 4 * se


def test_bound_scaling_invariance():
    a = random_int_matrix(12, 6).astype(float)
    gen = np.random.default_rng(0)
    b = 3.5 * a + gen.normal(size=(6, 1)) + gen.normal(size=(1, 6))
    assert theorem61_bound(ScoreMatrix(a)) == pytest.approx(theorem61_bound(ScoreMatrix(b)), rel=1e-10)


def test_bound_factor_asymptotics():
    assert bound_factor(3) == 46
    assert abs(bound_factor(1000) / 16 - 1) < 0.05


def test_enumerate_identity_n3():
    rep = enumerate_exact(np.eye(3, dtype=int).tolist())
    assert rep["law"] == {0: Fraction(1, 3), 1: Fraction(1, 2), 3: Fraction(1, 6)}
    assert rep["mean"] == rep["mu"] == 1
    assert rep["sigma2"] == rep["sigma2_rowcol"] == rep["sigma2_pairs"] == 1


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_enumerated_pair_difference(n):
    a = random_int_matrix(20 + n, n).tolist()
    rep = enumerate_exact(a, coupling=False)
    assert rep["diff2"] == 4 * rep["sigma2"] / (n - 1)
    assert rep["sigma2"] == variance_rowcol(a)
    raw_var = sum(pr * (y - rep["mean"]) ** 2 for y, pr in rep["law"].items())
    assert raw_var == rep["sigma2"]
    if n == 5:
        assert rep["diff2"] == rep["sigma2"]


@pytest.mark.parametrize("seed,n", [(30, 4), (31, 4), (32, 5)])
def test_enumerated_characterization_exact(seed, n):
    rep = enumerate_exact(random_int_matrix(seed, n).tolist())
    for c in rep["characterization"]:
        assert c["lhs"] == c["rhs"], c["poly"]
    cube = next(c for c in rep["characterization"] if c["poly"] == [0, 0, 0, 1])
    assert isinstance(cube["lhs"], Fraction)


def test_enumerate_rejects_large_n():
    with pytest.raises(ValueError):
        enumerate_exact(np.eye(9, dtype=int).tolist())


def test_sigma2_matches_enumeration_bitwise():
    a = random_int_matrix(40, 6).tolist()
    rep = enumerate_exact(a, coupling=False)
    assert float(rep["sigma2"]) == float(variance_rowcol(a))


def test_load_matrix(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("1 0 0\n0 1 0\n0 0 1/2\n")
    assert permclt.load_matrix(p)[2, 2] == 0.5
    p.write_text("1 0\n0 1\n")
    with pytest.raises(ValueError):
        permclt.load_matrix(p)
    p.write_text("1 0 0\n0 1\n0 0 1\n")
    with pytest.raises(ValueError):
        permclt.load_matrix(p)


def test_lambda_one_warning_at_n3():
    with pytest.warns(RuntimeWarning, match="lambda = 1"):
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            PermutationModel(ScoreMatrix(np.eye(3)))
