# %% [markdown]
# Projections theta . X of a point X drawn from the cone measure on the unit
# l_p sphere. The coordinate-symmetric coupling gives W* from the square-bias
# law of one coordinate.

# %%
import numpy as np
from scipy import stats

from l1stein.cone import ConeParams, m_np, sample_cone, sigma_np, square_bias_draws
from l1stein.experiment import ScenarioConfig, run_scenario

rng = np.random.default_rng(7)

# %% [markdown]
# |X_1|^p is Beta(1/p, (n-1)/p); under square biasing it becomes
# Beta(3/p, (n-1)/p).

# %%
n, p = 8, 1.5
params = ConeParams.uniform(n, p)
vec = sample_cone(params, rng, 100_000)
print("KS |X_1|^p:", stats.kstest(np.abs(vec.x[:, 0]) ** p, stats.beta(1 / p, (n - 1) / p).cdf).pvalue)
_, x_ii, _ = square_bias_draws(params, rng, rng.integers(0, n, 100_000))
print("KS |X_i^i|^p:", stats.kstest(np.abs(x_ii) ** p, stats.beta(3 / p, (n - 1) / p).cdf).pvalue)

# %%
for n in (4, 16, 64):
    print(f"n={n:3d}  sigma2_(n,1) {sigma_np(n, 1.0):.6f}  m_(n,1) {m_np(n, 1.0):.6f}")

# %%
for n, p in ((8, 1.0), (16, 2.0), (16, 0.5)):
    r = run_scenario(ScenarioConfig("cone", {"n": n, "p": p}, reps=200_000, seed=3))
    print(f"n={n} p={p}: L1 {r.est_l1:.4f}  2E|W*-W| {r.est_cost2:.4f}  bound {r.bound:.4f}  {r.verdict}")
