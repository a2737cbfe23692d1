"""Seeded trajectory simulation and Monte Carlo tail estimates.

Trajectory ``i`` of a run with seed ``s`` is drawn from its own Philox stream
keyed on ``(s, i)``, so results do not depend on how trajectories are split
across workers or chunks.
"""
import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import signal, stats

from .chain import InitialKind, stationary_expectation, stationary_measure
from .errors import EmptyTrajectory, InvalidParameter, UnsupportedChain

BURN_IN_CAP = 10_000_000
WILSON_Z = float(stats.norm.ppf(0.975))
CHUNK = 512


@dataclass(frozen=True)
class TrajectoryConfig:
    n_steps: int
    n_trajectories: int
    seed: int
    burn_in: Optional[int] = None

    def __post_init__(self):
        if self.n_steps < 1 or self.n_trajectories < 1:
            raise InvalidParameter("n_steps and n_trajectories must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidParameter("seed must be a 64-bit unsigned integer")
        if self.burn_in is not None and not 0 <= self.burn_in < BURN_IN_CAP:
            raise InvalidParameter(f"burn_in must lie in [0, {BURN_IN_CAP})")

    def resolved_burn_in(self, spec, beta):
        """Explicit ``burn_in`` if set; else 0 for a stationary start and
        ten relaxation times ``ceil(1 / (1 - |alpha|))`` otherwise."""
        if self.burn_in is not None:
            return self.burn_in
        if beta.kind is InitialKind.STATIONARY or not spec.is_gaussian:
            return 0
        # round first: 1 / (1 - 0.9) is 10.000000000000002 in floating point
        return 10 * math.ceil(round(1.0 / (1.0 - abs(spec.alpha)), 9))


@dataclass(frozen=True)
class TailEstimate:
    """Empirical ``P(avg - mu(r) >= epsilon)`` with a 95% Wilson interval.

    The two-sided event ``|avg - mu(r)| > epsilon`` is estimated on the same
    trajectories and reported separately.
    """

    epsilon: float
    empirical_probability: float
    wilson_interval: tuple
    n_trajectories: int
    hits: int
    two_sided_probability: float
    two_sided_wilson_interval: tuple

    def to_dict(self):
        return {
            "epsilon": self.epsilon,
            "empirical_probability": self.empirical_probability,
            "wilson_interval": list(self.wilson_interval),
            "n_trajectories": self.n_trajectories,
            "hits": self.hits,
            "two_sided_probability": self.two_sided_probability,
            "two_sided_wilson_interval": list(self.two_sided_wilson_interval),
        }


def trajectory_stream(seed, trajectory_index):
    ss = np.random.SeedSequence(seed, spawn_key=(trajectory_index,))
    return np.random.Generator(np.random.Philox(ss))


def simulate_trajectory(spec, beta, cfg, trajectory_index):
    """States ``x_0 .. x_{N-1}`` recorded after ``burn_in`` discarded steps.

    The stream first yields the initial state (no draw for a Dirac start),
    then the transition noise in time order.
    """
    if not 0 <= trajectory_index < cfg.n_trajectories:
        raise InvalidParameter("trajectory_index out of range")
    return _simulate_rows(spec, beta, cfg, [trajectory_index])[0]


def _simulate_rows(spec, beta, cfg, indices):
    burn = cfg.resolved_burn_in(spec, beta)
    total = burn + cfg.n_steps
    if spec.is_gaussian:
        mu = stationary_measure(spec) if beta.kind is InitialKind.STATIONARY else None
        drive = np.empty((len(indices), total))
        for row, idx in enumerate(indices):
            rng = trajectory_stream(cfg.seed, idx)
            drive[row, 0] = beta.sample(rng, stationary=mu)
            drive[row, 1:] = spec.noise_std * rng.standard_normal(total - 1)
        # x_0 = u_0, x_k = alpha x_{k-1} + u_k
        states = signal.lfilter([1.0], [1.0, -spec.alpha], drive, axis=1)
        return states[:, burn:]
    states = np.empty((len(indices), total))
    for row, idx in enumerate(indices):
        rng = trajectory_stream(cfg.seed, idx)
        if beta.kind is InitialKind.STATIONARY:
            raise UnsupportedChain("stationary start requires a known stationary law")
        x = beta.sample(rng)
        states[row, 0] = x
        for k in range(1, total):
            x = float(spec.sample_next(np.array([x]), rng)[0])
            states[row, k] = x
    return states[:, burn:]


def simulate_batch(spec, beta, cfg, indices=None, threads=1):
    """States of several trajectories, one row per trajectory index."""
    indices = list(range(cfg.n_trajectories)) if indices is None else list(indices)
    chunks = [indices[i:i + CHUNK] for i in range(0, len(indices), CHUNK)]
    work = lambda idx: _simulate_rows(spec, beta, cfg, idx)
    if threads <= 1:
        parts = [work(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    return np.concatenate(parts, axis=0)


def empirical_average(trajectory, r):
    """``(1/N) sum r(x_i)`` with exactly rounded summation."""
    values = np.asarray(r(np.asarray(trajectory, dtype=float)), dtype=float)
    if values.size == 0:
        raise EmptyTrajectory("cannot average an empty trajectory")
    return math.fsum(values.ravel()) / values.size


def trajectory_averages(spec, beta, observables, cfg, threads=1):
    """Empirical averages of each observable on every trajectory.

    Returns an array of shape ``(len(observables), n_trajectories)``; the
    contents are independent of ``threads``.
    """
    chunks = [range(i, min(i + CHUNK, cfg.n_trajectories)) for i in range(0, cfg.n_trajectories, CHUNK)]

    def work(idx):
        states = _simulate_rows(spec, beta, cfg, list(idx))
        out = np.empty((len(observables), len(idx)))
        for j, r in enumerate(observables):
            values = r(states)
            for row in range(len(idx)):
                out[j, row] = math.fsum(values[row]) / cfg.n_steps
        return out

    if threads <= 1:
        parts = [work(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    return np.concatenate(parts, axis=1)


def wilson_interval(hits, n, z=WILSON_Z):
    if n <= 0:
        raise InvalidParameter("need at least one trial")
    phat = hits / n
    denom = 1 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    low, high = max(0.0, centre - half), min(1.0, centre + half)
    # guard against rounding at phat in {0, 1}
    return min(low, phat), max(high, phat)


def tail_from_deviations(deviations, epsilon):
    deviations = np.asarray(deviations, dtype=float)
    n = deviations.size
    hits = int(np.count_nonzero(deviations >= epsilon))
    hits2 = int(np.count_nonzero(np.abs(deviations) > epsilon))
    return TailEstimate(float(epsilon), hits / n, wilson_interval(hits, n), n, hits,
                        hits2 / n, wilson_interval(hits2, n))


def estimate_tail(spec, beta, r, cfg, epsilon, threads=1):
    """Fraction of trajectories with ``avg_r - mu(r) >= epsilon``."""
    mean = stationary_expectation(r, stationary_measure(spec))
    averages = trajectory_averages(spec, beta, [r], cfg, threads=threads)[0]
    return tail_from_deviations(averages - mean, epsilon)


def write_trajectory_csv(path, averages, stationary_mean):
    """One row per trajectory: ``trajectory_index, empirical_average, deviation``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["trajectory_index", "empirical_average", "deviation"])
        for i, a in enumerate(averages):
            writer.writerow([i, repr(float(a)), repr(float(a - stationary_mean))])


def autocorrelation(x, max_lag):
    """Sample autocorrelation at lags ``0 .. max_lag`` (biased, mean-centred)."""
    x = np.asarray(x, dtype=float)
    x = x - x.mean()
    n = x.size
    var = np.dot(x, x) / n
    return np.array([np.dot(x[: n - m], x[m:]) / n / var for m in range(max_lag + 1)])


def bartlett_standard_error(rho, lag, n):
    """Bartlett's large-sample standard error of the lag-``lag`` sample
    autocorrelation, given the true autocorrelation function ``rho``
    (``rho[0] = 1``, truncated where it has decayed)."""
    rho = np.asarray(rho, dtype=float)
    kmax = rho.size - 1 - lag
    r = lambda k: rho[abs(k)] if abs(k) < rho.size else 0.0
    total = sum((r(k + lag) + r(k - lag) - 2 * r(k) * r(lag)) ** 2 for k in range(1, kmax + 1))
    return math.sqrt(total / n)
