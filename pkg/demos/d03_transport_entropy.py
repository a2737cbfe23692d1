"""
Checking a transport-entropy constant
=====================================

A Gaussian with variance v satisfies W1 <= sqrt(2 C Ent) exactly when
C >= v. The checks below can only falsify a constant: they report the
worst margin over a stress family and list witnesses.
"""
from markov_concentration import ChainSpec, stationary_measure
from markov_concentration.transport import check_te_direct, check_te_dual, wasserstein1_1d
import numpy as np

mu = stationary_measure(ChainSpec.linear_gaussian(0.5))
print("variance", mu.variance)

# %%
rng = np.random.default_rng(0)
x = rng.standard_normal(100_000)
print("W1 under a shift of 0.3:", wasserstein1_1d(x, x + 0.3))

# %%
for c in (1.0, mu.variance, 2 * mu.variance):
    rep = check_te_direct(mu, c, samples=100_000).merge(check_te_dual(mu, c, samples=200_000))
    print(f"c={c:.3f} direct margin {rep.direct_margin:+.4f} dual margin {rep.dual_margin:+.4f} "
          f"witnesses {len(rep.witnesses)}")
