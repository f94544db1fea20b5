# %% [markdown]
# Zero-bias laws of a few standardized bases, and how far each one sits from
# its base in L1. For the uniform base the distance is sqrt(3)/8; for a
# Bernoulli(p) indicator it is (p^2 + q^2) / (2 sqrt(pq)).

# %%
import math

import numpy as np

from l1stein import metrics
from l1stein.distributions import catalog, standardized_bernoulli
from l1stein.zerobias import e_abs_zero_bias, zero_bias_cdf

# %%
for name, base in catalog().items():
    law = zero_bias_cdf(base)
    d = metrics.l1_cdf_distance(law.cdf_function(), base.cdf_function())
    print(f"{name:15s} L1(X*, X) = {d:.6f}   E|X*| = {e_abs_zero_bias(base):.6f}")

print("sqrt(3)/8 =", math.sqrt(3) / 8)

# %% [markdown]
# Bernoulli grid against the closed form.

# %%
for p in np.linspace(0.05, 0.95, 7):
    b = standardized_bernoulli(p)
    d = metrics.l1_cdf_distance(zero_bias_cdf(b).cdf_function(), b.cdf_function())
    q = 1 - p
    print(f"p={p:.2f}  quad {d:.12f}  closed {(p * p + q * q) / (2 * math.sqrt(p * q)):.12f}")

# %% [markdown]
# The zero-bias law of a discrete base is piecewise uniform: its CDF is
# piecewise linear between the atoms.

# %%
three = catalog()["three-point"]
law = zero_bias_cdf(three)
for x in np.linspace(*three.support, 9):
    print(f"x={x:+.3f}  F={float(three.cdf(x)):.4f}  F*={float(law.cdf(x)):.4f}")
