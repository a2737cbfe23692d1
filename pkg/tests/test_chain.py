import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from markov_concentration.chain import (
    ChainSpec,
    InitialDistribution,
    StationaryMeasure,
    TransitionKernel,
    absolute,
    clipped_linear,
    constant,
    density_ratio_l2,
    identity,
    stationary_expectation,
    stationary_measure,
)
from markov_concentration.errors import DivergentRatio, InvalidParameter, UnsupportedChain


def chi2_oracle(beta_mean, beta_var, mu):
    """sqrt(int (dbeta/dmu)^2 dmu) on a fine grid over +-12 sd of mu."""
    x = np.linspace(mu.mean - 12 * mu.std, mu.mean + 12 * mu.std, 400_001)
    b = stats.norm.pdf(x, beta_mean, math.sqrt(beta_var))
    m = stats.norm.pdf(x, mu.mean, mu.std)
    return math.sqrt(integrate.trapezoid(b * b / m, x))


@pytest.mark.parametrize("alpha, variance", [(0.5, 4 / 3), (0.0, 1.0), (0.9, 1 / 0.19)])
def test_stationary_measure_closed_form(alpha, variance):
    mu = stationary_measure(ChainSpec.linear_gaussian(alpha))
    assert mu.mean == 0.0
    assert mu.variance == pytest.approx(variance, rel=1e-15)
    assert mu.te_constant == mu.variance


def test_stationary_measure_literal_constant_override():
    mu = stationary_measure(ChainSpec.linear_gaussian(0.5), te_constant=1.0)
    assert mu.te_constant == 1.0


@pytest.mark.parametrize("alpha", np.linspace(-0.99, 0.99, 23))
def test_stationary_is_fixed_point_of_one_step(alpha):
    v = stationary_measure(ChainSpec.linear_gaussian(alpha)).variance
    assert abs(alpha ** 2 * v + 1 - v) < 1e-12 * max(1.0, v)


def test_custom_kernel_has_no_closed_form():
    kernel = TransitionKernel(lambda x, rng: 0.5 * x + rng.standard_normal(x.shape),
                              lambda x, y: stats.norm.pdf(y, 0.5 * x))
    with pytest.raises(UnsupportedChain):
        stationary_measure(ChainSpec.custom(kernel))


@pytest.mark.parametrize("alpha", [1.0, -1.0, 1.5, -1.2, float("nan")])
def test_unstable_alpha_rejected(alpha):
    with pytest.raises(InvalidParameter):
        ChainSpec.linear_gaussian(alpha)


def test_alpha_near_one_accepted():
    assert ChainSpec.linear_gaussian(1 - 1e-9).alpha < 1


@pytest.mark.parametrize("alpha", [1 - 1e-15, -(1 - 1e-15)])
def test_alpha_numerically_at_boundary_rejected(alpha):
    with pytest.raises(InvalidParameter):
        ChainSpec.linear_gaussian(alpha)


@pytest.mark.parametrize("noise", [0.0, -1.0])
def test_noise_must_be_positive(noise):
    with pytest.raises(InvalidParameter):
        ChainSpec.linear_gaussian(0.5, noise)


def test_density_ratio_stationary_is_one():
    mu = stationary_measure(ChainSpec.linear_gaussian(0.3))
    assert density_ratio_l2(InitialDistribution.stationary(), mu) == 1.0


def test_density_ratio_same_gaussian_is_one():
    mu = StationaryMeasure(0.0, 2.5, 2.5)
    assert density_ratio_l2(InitialDistribution.gaussian(0.0, 2.5), mu) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("m, var", [(0.0, 0.5), (0.4, 0.5), (-1.0, 1.0), (0.7, 1.3)])
def test_density_ratio_matches_quadrature_oracle(m, var):
    mu = stationary_measure(ChainSpec.linear_gaussian(0.5))
    assert density_ratio_l2(InitialDistribution.gaussian(m, var), mu) == pytest.approx(
        chi2_oracle(m, var, mu), rel=1e-8)


def test_density_ratio_reference_value():
    # beta = N(0, 1/2), mu = N(0, 4/3); value frozen from chi2_oracle
    mu = stationary_measure(ChainSpec.linear_gaussian(0.5))
    assert density_ratio_l2(InitialDistribution.gaussian(0.0, 0.5), mu) == pytest.approx(1.1318238513305405, rel=1e-9)


def test_density_ratio_dirac_diverges():
    mu = stationary_measure(ChainSpec.linear_gaussian(0.5))
    with pytest.raises(DivergentRatio) as info:
        density_ratio_l2(InitialDistribution.dirac(1.0), mu)
    assert info.value.value == math.inf


def test_density_ratio_too_wide_diverges():
    mu = stationary_measure(ChainSpec.linear_gaussian(0.5))
    with pytest.raises(DivergentRatio):
        density_ratio_l2(InitialDistribution.gaussian(0.0, 2 * mu.variance), mu)


@settings(max_examples=200, deadline=None)
@given(m=st.floats(-3, 3), var=st.floats(0.05, 2.6), v=st.floats(0.2, 5.0))
def test_density_ratio_at_least_one(m, var, v):
    mu = StationaryMeasure(0.0, v, v)
    try:
        value = density_ratio_l2(InitialDistribution.gaussian(m, var), mu)
    except DivergentRatio:
        assert 2 / var - 1 / v <= 0
        return
    assert value >= 1 - 1e-12


@settings(max_examples=100, deadline=None)
@given(x=st.floats(-50, 50), y=st.floats(-50, 50), scale=st.floats(0.1, 10))
def test_builtin_observables_respect_lipschitz_seminorm(x, y, scale):
    for r in (identity(), absolute(), clipped_linear(scale)):
        assert abs(float(r(x)) - float(r(y))) <= r.lipschitz_seminorm * abs(x - y) + 1e-12


def test_abs_mean_closed_form():
    mu = stationary_measure(ChainSpec.linear_gaussian(0.5))
    assert stationary_expectation(absolute(), mu) == pytest.approx(mu.std * math.sqrt(2 / math.pi), abs=1e-14)


@pytest.mark.parametrize("r", [absolute(), clipped_linear(0.7), clipped_linear(3.0)])
@pytest.mark.parametrize("mean", [0.0, 0.8])
def test_stationary_expectation_against_grid(r, mean):
    mu = StationaryMeasure(mean, 4 / 3, 4 / 3)
    x = np.linspace(mean - 14 * mu.std, mean + 14 * mu.std, 2_000_001)
    oracle = integrate.trapezoid(r(x) * mu.pdf(x), x)
    assert stationary_expectation(r, mu) == pytest.approx(oracle, abs=1e-10)


def test_constant_observable():
    r = constant(2.5)
    assert r.lipschitz_seminorm == 0
    assert stationary_expectation(r, StationaryMeasure(0, 1)) == 2.5


def test_initial_distribution_validation():
    with pytest.raises(InvalidParameter):
        InitialDistribution.gaussian(0.0, 0.0)
    with pytest.raises(InvalidParameter):
        InitialDistribution("Dirac")


def test_specs_are_immutable():
    spec = ChainSpec.linear_gaussian(0.5)
    with pytest.raises(AttributeError):
        spec.alpha = 0.1
