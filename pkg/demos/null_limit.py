"""Finite-n null law of T_n against its weighted chi-square limit.

Draws T_n(lambda) under uniformity at several n and compares quantiles
with draws from the limit mixture. The two agree closely already at
n = 50 because the mean is exact for every n and the variance carries
only the factor (n - 1) / n.

    python3 demos/null_limit.py
"""

import numpy as np

from steinunif.null_dist import ChiSquareMixture, finite_n_variance_h0, null_gram_draws, sample_limit
from steinunif.statistic import c_kp, d_n, truncation_order

p, lam, M = 3, 1.0, 4000
K = truncation_order(p, lam)
c = c_kp(np.arange(1, K + 1), p, lam)
limit = sample_limit(ChiSquareMixture.stein(p, lam), np.random.default_rng(1), 100_000)
qs = [0.5, 0.9, 0.95, 0.99]

print(f"p={p} lambda={lam}: E[T_n] = d_n = {d_n(p, lam):.6f}")
print(f"{'':>8}" + "".join(f"{q:>10}" for q in qs) + f"{'var':>12}{'closed':>12}")
print(f"{'limit':>8}" + "".join(f"{np.quantile(limit, q):10.4f}" for q in qs) + f"{limit.var():12.5f}")
for n in (10, 50, 200):
    t = null_gram_draws(n, p, K, M, seed=0) @ c
    print(f"{'n=' + str(n):>8}" + "".join(f"{np.quantile(t, q):10.4f}" for q in qs) + f"{t.var():12.5f}{finite_n_variance_h0(n, p, lam):12.5f}")
