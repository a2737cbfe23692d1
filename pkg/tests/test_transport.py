import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from markov_concentration.chain import ChainSpec, StationaryMeasure, constant, identity, stationary_measure
from markov_concentration.errors import InvalidParameter, LengthMismatch, MomentOverflow
from markov_concentration.transport import (
    TECheckReport,
    check_te_direct,
    check_te_dual,
    default_test_family,
    gaussian_relative_entropy,
    wasserstein1_1d,
    wasserstein1_batched,
)

MU = stationary_measure(ChainSpec.linear_gaussian(0.5))  # N(0, 4/3)
MEAN_SHIFTS = [(s * k * MU.std, MU.variance) for k in (0.5, 1.0, 2.0) for s in (1, -1)]


def _quantile_w1_oracle(sd_a, sd_b):
    """W_1 between centred Gaussians as the integral of |F_a^-1 - F_b^-1| over (0, 1)."""
    val, _ = integrate.quad(lambda u: abs(stats.norm.ppf(u, scale=sd_a) - stats.norm.ppf(u, scale=sd_b)),
                            0, 1, limit=200)
    return val


def test_w1_identical_samples():
    x = np.random.default_rng(0).standard_normal(1000)
    assert wasserstein1_1d(x, x) == 0.0


def test_w1_translation():
    x = np.random.default_rng(1).standard_normal(1000)
    assert wasserstein1_1d(x, x + 2.5) == pytest.approx(2.5, abs=1e-12)
    assert wasserstein1_1d(x, x - 0.75) == pytest.approx(0.75, abs=1e-12)


def test_w1_unsorted_inputs_are_sorted():
    assert wasserstein1_1d([3.0, 1.0, 2.0], [0.0, 2.0, 1.0]) == pytest.approx(1.0)


def test_w1_length_mismatch():
    with pytest.raises(LengthMismatch):
        wasserstein1_1d([1.0, 2.0], [1.0])
    with pytest.raises(LengthMismatch):
        wasserstein1_1d([], [])


def test_w1_gaussian_scale_against_quantile_oracle():
    oracle = _quantile_w1_oracle(1.0, 2.0)
    assert oracle == pytest.approx(math.sqrt(2 / math.pi), rel=1e-8)
    rng = np.random.Generator(np.random.Philox(42))
    a = rng.standard_normal(10 ** 6)
    b = 2.0 * rng.standard_normal(10 ** 6)
    w1, se = wasserstein1_batched(a, b)
    assert abs(w1 - oracle) < 3 * se


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 60))
def test_w1_metric_axioms(seed, n):
    rng = np.random.default_rng(seed)
    a, b, c = rng.standard_normal((3, n)) * rng.uniform(0.1, 5, size=(3, 1))
    assert wasserstein1_1d(a, b) == pytest.approx(wasserstein1_1d(b, a), abs=1e-12)
    assert wasserstein1_1d(a, c) <= wasserstein1_1d(a, b) + wasserstein1_1d(b, c) + 1e-12
    assert wasserstein1_1d(a, b) >= 0


def test_kl_examples():
    assert gaussian_relative_entropy((0.3, 2.0), (0.3, 2.0)) == 0.0
    assert gaussian_relative_entropy((1.0, 1.0), (0.0, 1.0)) == pytest.approx(0.5, abs=1e-15)


def _kl_quad_oracle(nu, mu):
    fn = stats.norm(nu[0], math.sqrt(nu[1]))
    fm = stats.norm(mu[0], math.sqrt(mu[1]))
    val, _ = integrate.quad(lambda x: fn.pdf(x) * (fn.logpdf(x) - fm.logpdf(x)), -np.inf, np.inf)
    return val


@pytest.mark.parametrize("nu,mu", [((0.0, 2.0), (0.0, 1.0)), ((1.0, 0.5), (-0.5, 4 / 3)), ((0.0, 1.0), (0.0, 2.0))])
def test_kl_against_quadrature(nu, mu):
    assert gaussian_relative_entropy(nu, mu) == pytest.approx(_kl_quad_oracle(nu, mu), abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.floats(-5, 5), st.floats(0.05, 20), st.floats(-5, 5), st.floats(0.05, 20))
def test_kl_nonnegative(m1, v1, m0, v0):
    assert gaussian_relative_entropy((m1, v1), (m0, v0)) >= -1e-15


def test_kl_rejects_nonpositive_variance():
    with pytest.raises(InvalidParameter):
        gaussian_relative_entropy((0.0, 0.0), (0.0, 1.0))


def test_direct_check_holds_at_stationary_variance():
    rep = check_te_direct(MU, MU.variance, samples=100_000)
    assert not rep.witnesses
    assert rep.direct_margin >= 0


def test_direct_check_mean_shift_is_tight_at_variance():
    """For a mean shift W_1 = |dm| and sqrt(2 v Ent) = |dm|: equality at c = v."""
    for m, v in MEAN_SHIFTS:
        rhs = math.sqrt(2 * MU.variance * gaussian_relative_entropy((m, v), (0.0, MU.variance)))
        assert rhs == pytest.approx(abs(m), rel=1e-12)


@pytest.mark.xfail(strict=True, reason="unit constant is below the variance 4/3; mean shifts violate it")
def test_direct_check_unit_constant_on_mean_shifts():
    rep = check_te_direct(MU, 1.0, test_family=MEAN_SHIFTS, samples=100_000)
    assert not rep.witnesses


def test_direct_check_unit_constant_flags_every_mean_shift():
    rep = check_te_direct(MU, 1.0, test_family=MEAN_SHIFTS, samples=100_000)
    assert len(rep.witnesses) == len(MEAN_SHIFTS)
    assert rep.direct_margin < 0


def test_direct_check_inflated_constant():
    rep = check_te_direct(MU, 1e6, samples=20_000)
    assert not rep.witnesses and all(m > 0 for m in rep.direct_margins)


def test_direct_check_tiny_constant_produces_witness():
    rep = check_te_direct(MU, 1e-8, test_family=[(1.0, MU.variance)], samples=20_000)
    assert len(rep.witnesses) == 1 and rep.direct_margin < 0


def test_direct_check_is_seed_deterministic():
    a = check_te_direct(MU, 1.0, samples=5000, seed=9)
    b = check_te_direct(MU, 1.0, samples=5000, seed=9)
    assert a.to_json() == b.to_json()


def test_default_family_shape():
    fam = default_test_family(MU)
    assert len(fam) == 8
    assert (MU.std, MU.variance) in fam and (0.0, 2 * MU.variance) in fam


def test_dual_lambda_zero_is_exact():
    rep = check_te_dual(MU, MU.variance, lambdas=(0.0,), samples=1000)
    assert all(r == 1.0 for r in rep.dual_ratios)
    assert all(m == 0.0 for m in rep.dual_margins)


def test_dual_constant_observable():
    rep = check_te_dual(MU, 1.0, observables=[constant(2.0)], lambdas=(0.5, 1.0), samples=1000)
    assert rep.dual_ratios == [1.0, 1.0]
    assert not rep.witnesses


def test_dual_gaussian_mgf_saturates():
    std = StationaryMeasure(0.0, 1.0)
    oracle, _ = integrate.quad(lambda x: math.exp(x + stats.norm.logpdf(x)), -40, 40, points=[1.0])
    assert oracle == pytest.approx(math.exp(0.5), rel=1e-10)
    rep = check_te_dual(std, 1.0, observables=[identity()], lambdas=(1.0,), samples=10 ** 6)
    el = rep.elements[0]
    assert el["rhs"] == pytest.approx(oracle, rel=1e-12)
    assert abs(el["lhs"] - oracle) < 4 * el["lhs_se"]


def test_dual_tightness_at_variance_and_slack_above():
    tight = check_te_dual(MU, MU.variance, observables=[identity()], lambdas=(1.0,), samples=10 ** 6)
    assert tight.dual_ratios[0] == pytest.approx(1.0, abs=0.01)
    loose = check_te_dual(MU, 2 * MU.variance, observables=[identity()], lambdas=(1.0,), samples=10 ** 6)
    assert loose.dual_margin > 0 and loose.dual_ratios[0] < 0.9


def test_dual_half_variance_produces_witness():
    rep = check_te_dual(MU, MU.variance / 2, samples=200_000)
    assert rep.witnesses and rep.dual_margin < 0


def test_dual_literal_constant_comparison():
    rep = check_te_dual(MU, MU.variance, samples=200_000)
    assert rep.literal_constant_witnesses >= 1
    assert check_te_dual(MU, 1.0, samples=1000).literal_constant_witnesses is None


def test_dual_moment_overflow():
    with pytest.raises(MomentOverflow):
        check_te_dual(MU, 1.0, observables=[identity()], lambdas=(1000.0,), samples=10_000)


def test_checks_reject_nonpositive_constant():
    with pytest.raises(InvalidParameter):
        check_te_direct(MU, 0.0)
    with pytest.raises(InvalidParameter):
        check_te_dual(MU, -1.0)


def test_report_merge_and_json():
    d = check_te_direct(MU, 1.0, test_family=MEAN_SHIFTS[:2], samples=5000)
    u = check_te_dual(MU, 1.0, lambdas=(0.5,), samples=5000)
    both = d.merge(u)
    assert both.direct_margin == d.direct_margin and both.dual_margin == u.dual_margin
    assert len(both.elements) == len(d.elements) + len(u.elements)
    assert (both.direct_margin < 0 or (both.dual_margin is not None and both.dual_margin < 0)) == both.violated
    data = json.loads(both.to_json())
    assert set(data) >= {"c_claimed", "direct_margin", "dual_margin", "direct_margins", "dual_margins", "witnesses"}
    with pytest.raises(InvalidParameter):
        d.merge(TECheckReport(2.0))


def test_margin_sign_matches_witnesses():
    for c in (0.5, 1.0, MU.variance, 3.0):
        rep = check_te_direct(MU, c, samples=20_000).merge(check_te_dual(MU, c, samples=20_000))
        negative = any(m < 0 for m in rep.direct_margins + rep.dual_margins)
        assert negative == rep.violated
