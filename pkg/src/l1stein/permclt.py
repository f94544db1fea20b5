"""Combinatorial CLT: Y = sum_i a[i, pi(i)] for a uniform permutation pi.

Scores are double-centered on ingestion, so Y has mean zero. The zero-bias
coupling draws indices (I, J, K, L) with probability proportional to
[(d_IK + d_JL) - (d_IL + d_JK)]^2, then moves pi by at most two
transpositions so that {pi_dag(I), pi_dag(J)} = {K, L}.
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict
from fractions import Fraction
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .couplings import CoupledPair, ExchangeablePairModel, exchangeable_pair_couple

EXACT_TABLE_MAX_N = 64
ENUMERATE_MAX_N = 8


def center_scores(raw):
    """d_ij = a_ij - a_i. - a_.j + a_.. (exact for Fraction/int input)."""
    if isinstance(raw, np.ndarray) and raw.dtype != object:
        r = raw.astype(float)
        return r - r.mean(axis=1, keepdims=True) - r.mean(axis=0, keepdims=True) + r.mean()
    rows = [[Fraction(x) for x in row] for row in raw]
    n = len(rows)
    rmean = [sum(r) / n for r in rows]
    cmean = [sum(rows[i][j] for i in range(n)) / n for j in range(n)]
    tot = sum(rmean) / n
    return [[rows[i][j] - rmean[i] - cmean[j] + tot for j in range(n)] for i in range(n)]


def variance_rowcol(raw) -> Fraction | float:
    """sigma^2 = (1/(n-1)) sum_ij (a_ij^2 - a_i.^2 - a_.j^2 + a_..^2)."""
    exact = not isinstance(raw, np.ndarray) or raw.dtype == object
    rows = [[Fraction(x) for x in row] for row in raw] if exact else np.asarray(raw, float)
    n = len(rows)
    if exact:
        rmean = [sum(r) / n for r in rows]
        cmean = [sum(rows[i][j] for i in range(n)) / n for j in range(n)]
        tot = sum(rmean) / n
        s = sum(rows[i][j] ** 2 - rmean[i] ** 2 - cmean[j] ** 2 + tot ** 2
                for i in range(n) for j in range(n))
        return s / (n - 1)
    a = rows
    s = (a ** 2).sum() - n * (a.mean(axis=1) ** 2).sum() - n * (a.mean(axis=0) ** 2).sum() + n * n * a.mean() ** 2
    return float(s) / (n - 1)


def variance_pairs(raw) -> Fraction | float:
    """sigma^2 = sum_ijkl [(a_ik + a_jl) - (a_il + a_jk)]^2 / (4 n^2 (n-1))."""
    exact = not isinstance(raw, np.ndarray) or raw.dtype == object
    if exact:
        a = [[Fraction(x) for x in row] for row in raw]
        n = len(a)
        s = sum(((a[i][k] + a[j][l]) - (a[i][l] + a[j][k])) ** 2
                for i in range(n) for j in range(n) for k in range(n) for l in range(n))
        return s / (4 * n * n * (n - 1))
    a = np.asarray(raw, float)
    n = a.shape[0]
    b = _bracket(a)
    return float(np.sum(b * b)) / (4 * n * n * (n - 1))


def _bracket(d):
    # b[i, j, k, l] = (d_ik + d_jl) - (d_il + d_jk)
    return (d[:, None, :, None] + d[None, :, None, :]) - (d[:, None, None, :] + d[None, :, :, None])


class MatrixStats(NamedTuple):
    centered: np.ndarray
    mu: float
    sigma2: float
    a3: float
    lam: float


def matrix_stats(raw) -> MatrixStats:
    a = np.asarray(raw, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("score matrix must be square")
    n = a.shape[0]
    if n < 3:
        raise ValueError("need n >= 3")
    d = center_scores(a)
    sigma2 = variance_rowcol(a)
    scale = max(1.0, float(np.abs(a).max()) ** 2)
    if sigma2 <= 1e-13 * n * scale:
        raise ValueError("sigma^2 = 0: every two rows of the score matrix differ "
                         "by a constant row vector")
    a3 = math.fsum((np.abs(d) ** 3).ravel().tolist())
    return MatrixStats(d, n * float(a.mean()), sigma2, a3, 2.0 / (n - 1))


class ScoreMatrix:
    """Raw scores plus their centered form and statistics."""

    def __init__(self, raw):
        self.raw = np.asarray(raw, dtype=float)
        st = matrix_stats(self.raw)
        self.centered = st.centered
        self.mu = st.mu
        self.sigma2 = st.sigma2
        self.a3 = st.a3
        self.lam = st.lam
        self.n = self.raw.shape[0]
        if self.n <= EXACT_TABLE_MAX_N:
            self._sampler = _TableSampler(self.centered, self.sigma2)
        else:
            self._sampler = _TwoStageSampler(self.centered)

    @property
    def sigma(self):
        return math.sqrt(self.sigma2)

    def sample_indices(self, rng, size):
        return self._sampler.sample(rng, size)


class BiasedIndexDraw(NamedTuple):
    i: np.ndarray
    j: np.ndarray
    k: np.ndarray
    l: np.ndarray


class _TableSampler:
    """Inverse-CDF over all n^4 cells (zero cells included, never hit)."""

    def __init__(self, d, sigma2):
        n = d.shape[0]
        b2 = (_bracket(d) ** 2).ravel()
        self.total = math.fsum(b2.tolist())
        self.expected_total = 4.0 * n * n * (n - 1) * sigma2
        self.n = n
        cum = np.cumsum(b2)
        self.probs = b2 / self.total
        self.cum = cum / cum[-1]
        self.cum[-1] = 1.0

    def sample(self, rng, size):
        n = self.n
        flat = np.searchsorted(self.cum, rng.random(size), side="right")
        flat = np.minimum(flat, n ** 4 - 1)
        i, rem = np.divmod(flat, n ** 3)
        j, rem = np.divmod(rem, n * n)
        k, l = np.divmod(rem, n)
        return BiasedIndexDraw(i, j, k, l)


class _TwoStageSampler:
    """Row pair (i, j) by its marginal mass 2n |d_i - d_j|^2, then (k, l)
    from the conditional table (D_k - D_l)^2 with D = d_i - d_j."""

    def __init__(self, d):
        self.d = d
        n = d.shape[0]
        self.n = n
        sq = (d * d).sum(axis=1)
        mass = 2 * n * (sq[:, None] + sq[None, :] - 2 * d @ d.T)
        np.fill_diagonal(mass, 0.0)
        mass = np.maximum(mass, 0.0).ravel()
        self.cum = np.cumsum(mass / mass.sum())
        self.cum[-1] = 1.0

    def sample(self, rng, size):
        n = self.n
        flat = np.minimum(np.searchsorted(self.cum, rng.random(size), side="right"), n * n - 1)
        i, j = np.divmod(flat, n)
        k = np.empty(size, dtype=np.intp)
        l = np.empty(size, dtype=np.intp)
        u = rng.random(size)
        for pair in np.unique(flat):
            rows = np.nonzero(flat == pair)[0]
            D = self.d[pair // n] - self.d[pair % n]
            w = ((D[:, None] - D[None, :]) ** 2).ravel()
            cum = np.cumsum(w / w.sum())
            cum[-1] = 1.0
            cell = np.minimum(np.searchsorted(cum, u[rows], side="right"), n * n - 1)
            k[rows], l[rows] = np.divmod(cell, n)
        return BiasedIndexDraw(i, j, k, l)


def sample_biased_indices(matrix: ScoreMatrix, rng, size: int = 1) -> BiasedIndexDraw:
    return matrix.sample_indices(rng, size)


def random_permutations(rng, size, n):
    return np.argsort(rng.random((size, n)), axis=1)


def _swap(perm, a, b):
    rows = np.arange(perm.shape[0])
    va = perm[rows, a].copy()
    perm[rows, a] = perm[rows, b]
    perm[rows, b] = va


def dagger_permutations(pi, idx: BiasedIndexDraw):
    """pi_dag by the three-case rule and pi_ddag = pi_dag composed with (I J).

    Right-multiplying by a transposition swaps two positions of the array.
    """
    size, n = pi.shape
    rows = np.arange(size)
    inv = np.empty_like(pi)
    inv[rows[:, None], pi] = np.arange(n)
    I, J, K, L = idx
    piI = pi[rows, I]
    piJ = pi[rows, J]
    invK = inv[rows, K]
    invL = inv[rows, L]
    case1 = (L == piI) & (K != piJ)
    case2 = (L != piI) & (K == piJ)
    other = ~(case1 | case2)
    dag = pi.copy()
    # case 1: pi tau(pi^-1(K), J); case 2: pi tau(pi^-1(L), I)
    # otherwise: pi tau(pi^-1(K), I) tau(pi^-1(L), J)
    a = np.where(case1, invK, np.where(case2, invL, invK))
    b = np.where(case1, J, np.where(case2, I, I))
    _swap(dag, a, b)
    c = np.where(other, invL, 0)
    e = np.where(other, J, 0)
    _swap(dag, c, e)
    ddag = dag.copy()
    _swap(ddag, I, J)
    return dag, ddag


class PermutationModel(ExchangeablePairModel):
    """Shared randomness: pi is drawn once; (I, J, K, L) independently; pi_dag
    is pi moved by at most two transpositions."""

    def __init__(self, matrix: ScoreMatrix):
        self.matrix = matrix
        self.sigma2 = matrix.sigma2
        self.lam = matrix.lam
        self.check_lambda()

    def _y(self, perm):
        n = self.matrix.n
        return self.matrix.centered[np.arange(n), perm].sum(axis=1)

    def draw_pair(self, rng, size):
        n = self.matrix.n
        pi = random_permutations(rng, size, n)
        ij = np.argsort(rng.random((size, n)), axis=1)[:, :2]
        pi2 = pi.copy()
        _swap(pi2, ij[:, 0], ij[:, 1])
        return self._y(pi), self._y(pi2)

    def draw_dagger(self, rng, size):
        n = self.matrix.n
        pi = random_permutations(rng, size, n)
        idx = self.matrix.sample_indices(rng, size)
        dag, ddag = dagger_permutations(pi, idx)
        rows = np.arange(size)
        r = ((pi[rows, idx.i] == idx.k) | (pi[rows, idx.i] == idx.l)).astype(int) \
            + ((pi[rows, idx.j] == idx.k) | (pi[rows, idx.j] == idx.l)).astype(int)
        return self._y(pi), self._y(dag), self._y(ddag), {"R": r}


def perm_couple(matrix: ScoreMatrix, rng, size: int = 1) -> CoupledPair:
    model = PermutationModel(matrix)
    pair = exchangeable_pair_couple(model, rng, size)
    pair.diagnostics["V"] = matrix.sigma * (pair.w_star - pair.w)
    return pair


def direct_sums(matrix: ScoreMatrix, rng, size: int) -> np.ndarray:
    pi = random_permutations(rng, size, matrix.n)
    return matrix.centered[np.arange(matrix.n), pi].sum(axis=1) / matrix.sigma


def theorem61_bound(matrix: ScoreMatrix) -> float:
    n = matrix.n
    return matrix.a3 / ((n - 1) * matrix.sigma2 ** 1.5) * bound_factor(n)


def bound_factor(n: int) -> float:
    return 16.0 + 56.0 / (n - 1) + 8.0 / (n - 1) ** 2


# -- exact enumeration -------------------------------------------------------------------

def _fraction_matrix(raw):
    return [[Fraction(x) for x in row] for row in raw]


def enumerate_exact(raw, polys=None, coupling: bool | None = None) -> dict:
    """Exhaustive exact report over S_n (n <= 8) in rational arithmetic.

    Returns the law of Y = sum a[i, pi(i)], its mean and variance, the
    rowcol and pair-sum variance formulas, E(Y' - Y'')^2 over transposition
    pairs, and, when ``coupling`` is on (default for n <= 5), the exact
    values of E Y f(Y) and sigma^2 E f'(Y*) for each polynomial in ``polys``
    (coefficient lists, lowest degree first). U is integrated analytically:
    E f'(U a + (1-U) b) = (f(a) - f(b))/(a - b).
    """
    n = len(raw)
    if n > ENUMERATE_MAX_N:
        raise ValueError(f"enumeration limited to n <= {ENUMERATE_MAX_N}")
    if coupling is None:
        coupling = n <= 5
    a = _fraction_matrix(raw)
    d = center_scores(a)
    perms = list(itertools.permutations(range(n)))
    nf = len(perms)
    law = defaultdict(Fraction)
    ys = []
    for p in perms:
        ys.append(sum(d[i][p[i]] for i in range(n)))
        law[sum(a[i][p[i]] for i in range(n))] += Fraction(1, nf)
    mean = sum(y * pr for y, pr in law.items())
    var = sum(y * y for y in ys) / nf
    report = {
        "n": n,
        "law": dict(law),
        "mean": mean,
        "mu": n * sum(map(sum, a)) / (n * n),
        "sigma2": var,
        "sigma2_rowcol": variance_rowcol(a),
        "sigma2_pairs": variance_pairs(a),
    }
    diff2 = Fraction(0)
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    for p, y in zip(perms, ys):
        for i, j in pairs:
            y2 = y - d[i][p[i]] - d[j][p[j]] + d[i][p[j]] + d[j][p[i]]
            diff2 += (y - y2) ** 2
    report["diff2"] = diff2 / (nf * len(pairs))
    if coupling:
        polys = polys or [[0, 1], [0, 0, 1], [0, 0, 0, 1], [0, 0, 0, 0, 1], [1, -2, 0, 3, 1]]
        report["characterization"] = _exact_characterization(d, perms, ys, var, polys)
    return report


def _poly(c, x):
    return sum(ck * x ** k for k, ck in enumerate(c))


def _dpoly(c, x):
    return sum(k * ck * x ** (k - 1) for k, ck in enumerate(c) if k)


def _exact_characterization(d, perms, ys, sigma2, polys):
    n = len(d)
    nf = len(perms)
    cells = []
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    b = (d[i][k] + d[j][l]) - (d[i][l] + d[j][k])
                    if b:
                        cells.append((i, j, k, l, b * b))
    tot = sum(c[4] for c in cells)
    lhs = [sum(y * _poly(c, y) for y in ys) / nf for c in polys]
    rhs = [Fraction(0)] * len(polys)
    for p in perms:
        inv = [0] * n
        for pos, val in enumerate(p):
            inv[val] = pos
        for i, j, k, l, w in cells:
            dag = list(p)
            if l == p[i] and k != p[j]:
                moves = [(inv[k], j)]
            elif l != p[i] and k == p[j]:
                moves = [(inv[l], i)]
            else:
                moves = [(inv[k], i), (inv[l], j)]
            for x, z in moves:
                dag[x], dag[z] = dag[z], dag[x]
            ddag = list(dag)
            ddag[i], ddag[j] = ddag[j], ddag[i]
            y1 = sum(d[t][dag[t]] for t in range(n))
            y2 = sum(d[t][ddag[t]] for t in range(n))
            wt = w / (tot * nf)
            for q, c in enumerate(polys):
                if y1 != y2:
                    rhs[q] += wt * (_poly(c, y1) - _poly(c, y2)) / (y1 - y2)
                else:
                    rhs[q] += wt * _dpoly(c, y1)
    return [{"poly": c, "lhs": l_, "rhs": sigma2 * r_} for c, l_, r_ in zip(polys, lhs, rhs)]


def load_matrix(path) -> np.ndarray:
    """n lines of n whitespace-separated numbers; n >= 3."""
    rows = [line.split() for line in Path(path).read_text().splitlines() if line.strip()]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("score matrix must be square")
    if n < 3:
        raise ValueError("need n >= 3")
    return np.array([[float(Fraction(x)) for x in r] for r in rows])
