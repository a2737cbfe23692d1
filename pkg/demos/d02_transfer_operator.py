"""
Transfer operator in two bases
==============================

The Hermite-Galerkin matrix of P is diagonal with entries alpha^k; an
Ulam partition gives a stochastic matrix whose second eigenvalue estimates
the same spectral gap 1 - alpha.
"""
import numpy as np

from markov_concentration import ChainSpec, hermite_galerkin, stationary_measure
from markov_concentration.chain import identity
from markov_concentration.transfer_operator import feynman_kac_matrix, spectral_report, ulam_discretize

spec = ChainSpec.linear_gaussian(0.5)
op = hermite_galerkin(spec, 8)
np.set_printoptions(precision=4, suppress=True)
print(op.matrix)

# %%
rep = spectral_report(op, 10)
print("gap", rep.spectral_gap)
print("||P^n - U||", [round(v, 6) for _, v in rep.power_convergence])

# %%
# Ulam with 64 cells over +-6 standard deviations.
sd = stationary_measure(spec).std
ulam = ulam_discretize(spec, np.linspace(-6 * sd, 6 * sd, 65), samples_per_cell=2000, seed=7)
print("Ulam gap", spectral_report(ulam, 5).spectral_gap)

# %%
# e^{s r} P for r(x) = x: its N-th power grows like the per-step factor.
fk = feynman_kac_matrix(hermite_galerkin(spec, 32), identity(), 0.1)
print("tail mass", fk.tail_mass, "per-step growth", fk.power_norm(50) ** (1 / 50))
