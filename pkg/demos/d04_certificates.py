"""
Concentration certificates
==========================

The operator-norm, Chernoff, sample-complexity and hypercontractive tail
bounds for the AR(1) chain, with every input constant kept on the result.
"""
import math

from markov_concentration import (
    ChainSpec,
    InitialDistribution,
    chernoff_fk_bound,
    find_hypercontractive_p,
    gaussian_hyperbound,
    hypercontractive_tail_cor11,
    mult_op_norm_bound,
    sample_complexity_thm10,
    stationary_measure,
)
from markov_concentration.chain import identity

alpha = 0.5
mu = stationary_measure(ChainSpec.linear_gaussian(alpha))
r = identity()
beta = InitialDistribution.gaussian(0.0, 0.5)

# %%
# Largest p with ||P||_{2->p} certified <= 1.
p = find_hypercontractive_p(alpha)
h = gaussian_hyperbound(alpha, p)
print("p* =", p, "bound", h.value)

# %%
print(mult_op_norm_bound(mu, r, 4.0).to_json())

# %%
for N in (500, 2000, 8000):
    c = chernoff_fk_bound(mu, r, beta, p, h.value, N, 0.2)
    t = hypercontractive_tail_cor11(mu, r, beta, p, N, 0.2)
    print(N, c.value, t.value)

# %%
# Trajectory length for a deviation sqrt(C) L / n, with ||P|| half way
# to its admissible budget at q = 4.
cert = sample_complexity_thm10(mu, r, InitialDistribution.stationary(), 4.0, math.exp(1 / 16), 1, 0.5)
print(cert.value, 16 * math.log(2), cert.details)
