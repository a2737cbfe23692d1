"""Wasserstein-1, Gaussian relative entropy and transport-entropy checks.

A check can only falsify ``mu in T_1(C)``: it evaluates the inequality on a
finite stress family and reports the worst margin. A margin is counted as a
violation (and a witness recorded) only when it is negative by more than
three Monte Carlo standard errors; reported margins already include that
allowance, so a negative margin and a nonempty witness list go together.
"""
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .chain import identity, absolute, clipped_linear, stationary_expectation
from .errors import InvalidParameter, LengthMismatch, MomentOverflow

SE_MULTIPLIER = 3.0


def wasserstein1_1d(samples_a, samples_b):
    """Empirical ``W_1`` between two equal-size samples via the monotone coupling.

    Inputs are sorted here, so already-sorted samples pass through unchanged.
    """
    a = np.sort(np.asarray(samples_a, dtype=float))
    b = np.sort(np.asarray(samples_b, dtype=float))
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch(f"sample sizes differ: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise LengthMismatch("empty samples")
    return float(np.mean(np.abs(a - b)))


def wasserstein1_batched(samples_a, samples_b, n_batches=20):
    """``W_1`` on the full samples, plus a standard error from disjoint batches.

    Batches are consecutive blocks of the samples in their given (iid) order.
    """
    a = np.asarray(samples_a, dtype=float)
    b = np.asarray(samples_b, dtype=float)
    if a.shape != b.shape:
        raise LengthMismatch(f"sample sizes differ: {a.shape} vs {b.shape}")
    full = wasserstein1_1d(a, b)
    per = np.array([wasserstein1_1d(x, y) for x, y in zip(np.array_split(a, n_batches), np.array_split(b, n_batches))])
    return full, float(per.std(ddof=1) / math.sqrt(n_batches))


def gaussian_relative_entropy(nu, mu):
    """``Ent(nu | mu)`` in nats for ``nu = (mean, variance)`` and ``mu`` likewise."""
    m1, v1 = nu
    m0, v0 = mu
    if not (v1 > 0 and v0 > 0):
        raise InvalidParameter("variances must be positive")
    return 0.5 * (v1 / v0 + (m1 - m0) ** 2 / v0 - 1.0 + math.log(v0 / v1))


@dataclass
class TECheckReport:
    """Outcome of a transport-entropy check at constant ``c_claimed``.

    ``direct_margin`` is the worst ``sqrt(2 C Ent) - W_1`` and ``dual_margin``
    the worst ``exp(lambda^2 C L^2 / 2) - E e^{lambda (f - <f>)}``, both net
    of a three-standard-error allowance. ``None`` marks a part not run.
    """

    c_claimed: float
    direct_margin: float = None
    dual_margin: float = None
    witnesses: list = field(default_factory=list)
    direct_margins: list = field(default_factory=list)
    dual_margins: list = field(default_factory=list)
    dual_ratios: list = field(default_factory=list)
    elements: list = field(default_factory=list)
    literal_constant_witnesses: int = None

    @property
    def violated(self):
        return bool(self.witnesses)

    def merge(self, other):
        if other.c_claimed != self.c_claimed:
            raise InvalidParameter("cannot merge reports for different constants")
        out = TECheckReport(self.c_claimed)
        for part in (self, other):
            out.direct_margin = _worst(out.direct_margin, part.direct_margin)
            out.dual_margin = _worst(out.dual_margin, part.dual_margin)
            out.witnesses += part.witnesses
            out.direct_margins += part.direct_margins
            out.dual_margins += part.dual_margins
            out.dual_ratios += part.dual_ratios
            out.elements += part.elements
            if part.literal_constant_witnesses is not None:
                out.literal_constant_witnesses = (out.literal_constant_witnesses or 0) + part.literal_constant_witnesses
        return out

    def to_dict(self):
        return {
            "c_claimed": self.c_claimed,
            "direct_margin": self.direct_margin,
            "dual_margin": self.dual_margin,
            "direct_margins": self.direct_margins,
            "dual_margins": self.dual_margins,
            "dual_ratios": self.dual_ratios,
            "elements": self.elements,
            "witnesses": self.witnesses,
            "literal_constant_witnesses": self.literal_constant_witnesses,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _worst(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def default_test_family(mu):
    """Mean shifts of ``+-{0.5, 1, 2}`` standard deviations and variance scalings ``{0.5, 2}``."""
    s = mu.std
    family = [(mu.mean + sign * k * s, mu.variance) for k in (0.5, 1.0, 2.0) for sign in (1, -1)]
    family += [(mu.mean, mu.variance * f) for f in (0.5, 2.0)]
    return family


def default_observables():
    return [identity(), absolute(), clipped_linear(1.0)]


def check_te_direct(mu, c, test_family=None, samples=200_000, seed=0, n_batches=20):
    """Check ``W_1(mu, nu) <= sqrt(2 c Ent(nu | mu))`` over Gaussian ``nu``.

    ``W_1`` is estimated from ``samples`` draws of each law; its standard
    error comes from ``n_batches`` disjoint batches.
    """
    if not c > 0:
        raise InvalidParameter("c must be positive")
    family = default_test_family(mu) if test_family is None else list(test_family)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    report = TECheckReport(float(c))
    for idx, (m, v) in enumerate(family):
        xs = mu.sample(samples, rng)
        ys = m + math.sqrt(v) * rng.standard_normal(samples)
        w1, se = wasserstein1_batched(xs, ys, n_batches)
        rhs = math.sqrt(2 * c * gaussian_relative_entropy((m, v), (mu.mean, mu.variance)))
        margin = rhs - w1 + SE_MULTIPLIER * se
        desc = {"index": idx, "nu_mean": m, "nu_variance": v, "w1": w1, "w1_se": se, "rhs": rhs}
        report.direct_margins.append(margin)
        report.elements.append(desc)
        if margin < 0:
            report.witnesses.append({"kind": "direct", **desc})
    report.direct_margin = min(report.direct_margins) if report.direct_margins else None
    return report


def _dual_terms(x, f, mean_f, lam):
    with np.errstate(over="ignore"):
        terms = np.exp(lam * (f(x) - mean_f))
    if not np.all(np.isfinite(terms)):
        raise MomentOverflow(f"exp(lambda (f - <f>)) overflowed at lambda={lam}")
    return terms


def check_te_dual(mu, c, observables=None, lambdas=(0.0, 0.5, 1.0), samples=1_000_000, seed=0,
                  compare_literal=True):
    """Check ``E_mu e^{lambda (f - <f>)} <= exp(lambda^2 c ||f||_L^2 / 2)``.

    ``<f>`` is computed by quadrature; the left side is a sample mean over
    ``samples`` draws from ``mu``. With ``compare_literal`` and ``c != 1``
    the same draws are also checked at ``c = 1`` and the number of
    violations stored in ``literal_constant_witnesses``.

    Raises
    ------
    MomentOverflow
        If an exponential moment is not representable for the requested
        ``lambda``.
    """
    if not c > 0:
        raise InvalidParameter("c must be positive")
    observables = default_observables() if observables is None else list(observables)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    x = mu.sample(samples, rng)
    report = TECheckReport(float(c))
    literal = 0
    for fi, f in enumerate(observables):
        mean_f = stationary_expectation(f, mu)
        lip = f.lipschitz_seminorm
        for lam in lambdas:
            terms = _dual_terms(x, f, mean_f, lam)
            lhs = float(np.mean(terms))
            se = float(terms.std(ddof=1) / math.sqrt(samples))
            rhs = math.exp(lam ** 2 * c * lip ** 2 / 2)
            margin = rhs - lhs + SE_MULTIPLIER * se
            desc = {"observable": f.name, "index": fi, "lambda": lam, "lhs": lhs, "lhs_se": se, "rhs": rhs}
            report.dual_margins.append(margin)
            report.dual_ratios.append(lhs / rhs)
            report.elements.append(desc)
            if margin < 0:
                report.witnesses.append({"kind": "dual", **desc})
            if compare_literal and c != 1.0:
                if math.exp(lam ** 2 * lip ** 2 / 2) - lhs + SE_MULTIPLIER * se < 0:
                    literal += 1
    report.dual_margin = min(report.dual_margins) if report.dual_margins else None
    if compare_literal and c != 1.0:
        report.literal_constant_witnesses = literal
    return report
