"""
Simulating the AR(1) chain
==========================

Draw trajectories of x' = alpha x + w, compare their marginals with the
stationary law N(0, 1/(1 - alpha^2)) and look at how fast correlations die.
"""
import numpy as np

from markov_concentration import ChainSpec, InitialDistribution, TrajectoryConfig, simulate_batch, stationary_measure
from markov_concentration.sampler import autocorrelation, estimate_tail
from markov_concentration.chain import identity

spec = ChainSpec.linear_gaussian(0.5)
mu = stationary_measure(spec)
print("stationary variance", mu.variance)

# %%
# A stationary start keeps every marginal at the stationary law.
cfg = TrajectoryConfig(n_steps=10, n_trajectories=50_000, seed=1)
states = simulate_batch(spec, InitialDistribution.stationary(), cfg)
print("per-time sample variances", np.round(states.var(axis=0), 3))

# %%
# A Dirac start is pulled in geometrically; the default burn-in is ten
# relaxation times.
dirac = InitialDistribution.dirac(5.0)
print("burn-in used:", cfg.resolved_burn_in(spec, dirac))
raw = simulate_batch(spec, dirac, TrajectoryConfig(10, 50_000, seed=1, burn_in=0))
print("means without burn-in", np.round(raw.mean(axis=0), 3))

# %%
# Lag-m autocorrelation of a long path, against alpha^m.
path = simulate_batch(spec, InitialDistribution.stationary(), TrajectoryConfig(200_000, 1, seed=2))[0]
print(np.round(autocorrelation(path, 5), 3), 0.5 ** np.arange(6))

# %%
# Empirical tail of the time average, with a 95% Wilson interval.
est = estimate_tail(spec, InitialDistribution.stationary(), identity(), TrajectoryConfig(500, 4000, seed=3), 0.1)
print(est.empirical_probability, est.wilson_interval)
