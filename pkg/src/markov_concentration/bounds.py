"""Concentration certificates for additive functionals of Markov chains.

Every function returns a :class:`ConcentrationCertificate` carrying all the
constants it used, so a certificate can be re-derived from its own record.
Notation shared by the functions below:

``C``
    transport-entropy constant of the stationary law (``mu.te_constant``
    unless overridden),
``L``
    Lipschitz seminorm of the observable,
``h``
    an upper bound on ``||P||_{2 -> p}``,
``rho``
    ``||d beta / d mu||_2``.

The one-step Chernoff exponent is ``ln h + p s^2 C L^2 / (p - 2) - s eps``,
minimized at ``s* = eps (p - 2) / (2 p C L^2)`` with minimum
``ln h - eps^2 (p - 2) / (4 p C L^2)``.
"""
import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field

from .chain import density_ratio_l2, stationary_expectation
from .errors import (
    InvalidExponent,
    InvalidParameter,
    NegativeDenominator,
    NormConditionViolated,
    OutsideValidityRegion,
    UnknownTEConstant,
)

P_MAX = 64.0


class Theorem(str, enum.Enum):
    MULT_OP_NORM = "MultOpNorm"
    CHERNOFF_FK = "ChernoffFK"
    HYPERBOUNDED_SAMPLE_COMPLEXITY = "HyperboundedSampleComplexity"
    HYPERCONTRACTIVE_TAIL = "HypercontractiveTail"
    GAUSSIAN_HYPERBOUND = "GaussianHyperbound"


TAIL_THEOREMS = {Theorem.CHERNOFF_FK, Theorem.HYPERCONTRACTIVE_TAIL}

CSV_FIELDS = ["theorem", "value", "clamped_value", "valid", "inputs", "details"]


@dataclass(frozen=True)
class ConcentrationCertificate:
    theorem: Theorem
    inputs: dict
    value: float
    precondition_report: list
    details: dict = field(default_factory=dict)

    @property
    def valid(self):
        return all(holds for _, holds in self.precondition_report)

    @property
    def clamped_value(self):
        """``min(value, 1)`` for tail probabilities, ``None`` otherwise."""
        return min(self.value, 1.0) if self.theorem in TAIL_THEOREMS else None

    @property
    def vacuous(self):
        return self.theorem in TAIL_THEOREMS and not self.value < 1.0

    def to_dict(self):
        return {
            "theorem": self.theorem.value,
            "inputs": self.inputs,
            "value": _jsonable(self.value),
            "clamped_value": _jsonable(self.clamped_value),
            "valid": self.valid,
            "vacuous": self.vacuous,
            "precondition_report": [[name, bool(holds)] for name, holds in self.precondition_report],
            "details": {k: _jsonable(v) for k, v in self.details.items()},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    def csv_row(self):
        buf = io.StringIO()
        d = self.to_dict()
        csv.writer(buf, lineterminator="").writerow([
            d["theorem"], repr(self.value), "" if d["clamped_value"] is None else repr(self.clamped_value),
            int(d["valid"]), json.dumps(d["inputs"], sort_keys=True), json.dumps(d["details"], sort_keys=True),
        ])
        return buf.getvalue()


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    return v


def _te_constant(mu, te_constant):
    c = mu.te_constant if te_constant is None else te_constant
    if c is None:
        raise UnknownTEConstant("the stationary law has no known transport-entropy constant")
    if not c > 0:
        raise InvalidParameter("transport-entropy constant must be positive")
    return float(c)


def _check_exponent(p):
    if not p > 2:
        raise InvalidExponent(f"exponent {p!r} must exceed 2")


def mult_op_norm_bound(mu, r, p, te_constant=None):
    """Bound on ``||e^r||_{L^p -> L^2}``: ``exp(mu(r) + p C L^2 / (p - 2))``.

    Hölder with exponents ``p/2`` and ``p/(p-2)`` followed by the sub-Gaussian
    moment bound implied by the transport-entropy inequality.
    """
    _check_exponent(p)
    c = _te_constant(mu, te_constant)
    lip = r.lipschitz_seminorm
    mean_r = stationary_expectation(r, mu)
    value = math.exp(mean_r + 2 * p * c * lip ** 2 / ((p - 2) * 2))
    inputs = {"p": p, "te_constant": c, "lipschitz": lip, "stationary_mean_r": mean_r}
    pre = [("p > 2", True), ("te constant known", True), ("observable Lipschitz", math.isfinite(lip))]
    return ConcentrationCertificate(Theorem.MULT_OP_NORM, inputs, value, pre)


def chernoff_exponent(s, p, c, lip, log_h, epsilon):
    """Per-step log of the Chernoff bound at tilt ``s``."""
    return log_h + (2 * p / (p - 2)) * s * s * c * lip ** 2 / 2 - s * epsilon


def optimal_tilt(p, c, lip, epsilon):
    """Closed-form minimizer ``s*`` of :func:`chernoff_exponent` over ``s >= 0``."""
    if lip == 0:
        return math.inf if epsilon > 0 else 0.0
    return max(epsilon, 0.0) * (p - 2) / (2 * p * c * lip ** 2)


def golden_tilt(p, c, lip, epsilon, log_h=0.0, tol=1e-13):
    """Minimizer of the Chernoff exponent over ``s >= 0`` by golden-section search.

    Independent of :func:`optimal_tilt`: the search interval is found by
    doubling until the exponent turns upward.
    """
    f = lambda s: chernoff_exponent(s, p, c, lip, log_h, epsilon)
    hi = 1.0
    while f(hi) < f(hi / 2) and hi < 1e12:
        hi *= 2
    lo = 0.0
    g = (math.sqrt(5) - 1) / 2
    a, b = lo + (1 - g) * (hi - lo), lo + g * (hi - lo)
    fa, fb = f(a), f(b)
    while hi - lo > tol * max(1.0, hi):
        if fa <= fb:
            hi, b, fb = b, a, fa
            a = lo + (1 - g) * (hi - lo)
            fa = f(a)
        else:
            lo, a, fa = a, b, fb
            b = lo + g * (hi - lo)
            fb = f(b)
    return 0.5 * (lo + hi)


def chernoff_fk_bound(mu, r, beta, p, hyper_norm, N, epsilon, te_constant=None):
    """Feynman-Kac Chernoff bound on ``P_beta(avg_N r - mu(r) >= epsilon)``.

    ``rho * exp(N (ln h - eps^2 (p - 2) / (4 p C L^2)))``, using
    ``||e^{sr} P|| <= ||P||_{2->p} ||e^{sr}||_{p->2}`` with the tilt
    optimized in closed form; a golden-section search of the same exponent
    is recorded alongside as an arithmetic cross-check.

    Raises
    ------
    DivergentRatio
        If ``||d beta / d mu||_2`` is infinite.
    """
    _check_exponent(p)
    if not hyper_norm > 0:
        raise InvalidParameter("hyper_norm must be positive")
    if N < 0 or epsilon < 0:
        raise InvalidParameter("N and epsilon must be nonnegative")
    c = _te_constant(mu, te_constant)
    lip = r.lipschitz_seminorm
    rho = density_ratio_l2(beta, mu)
    log_h = math.log(hyper_norm)
    if lip == 0:
        exponent = log_h if epsilon == 0 else -math.inf
        s_star = optimal_tilt(p, c, lip, epsilon)
        s_golden = s_star
        exponent_golden = exponent
    else:
        s_star = optimal_tilt(p, c, lip, epsilon)
        exponent = log_h - epsilon ** 2 * (p - 2) / (4 * p * c * lip ** 2)
        s_golden = golden_tilt(p, c, lip, epsilon, log_h)
        exponent_golden = chernoff_exponent(s_golden, p, c, lip, log_h, epsilon)
    value = rho * math.exp(N * exponent) if math.isfinite(exponent) else 0.0
    inputs = {"p": p, "te_constant": c, "lipschitz": lip, "density_ratio": rho,
              "hyper_norm": hyper_norm, "N": N, "epsilon": epsilon}
    details = {"s_star": s_star, "s_golden": s_golden, "exponent": exponent,
               "exponent_golden": exponent_golden, "vacuous": not value < 1}
    pre = [("p > 2", True), ("te constant known", True), ("density ratio finite", math.isfinite(rho)),
           ("hyper_norm > 0", True)]
    return ConcentrationCertificate(Theorem.CHERNOFF_FK, inputs, value, pre, details)


def norm_budget(q):
    """Largest admissible ``||P||_{2->q}``: ``exp((1/2)(1/2 - 1/q))``."""
    return math.exp(0.5 * (0.5 - 1.0 / q))


def sample_complexity_thm10(mu, r, beta, q, hyper_norm, n, delta, te_constant=None):
    """Minimal trajectory length for a deviation of ``sqrt(C) L / n``.

    ``N = ln(rho / (1 - delta)) * 4 n^2 q / ((q - 2) - 4 n^2 q ln h)``; beyond
    it the one-sided deviation probability is below ``1 - delta``. The
    length for the conventional ``<= delta`` target, ``ln(rho / delta)`` in
    place of ``ln(rho / (1 - delta))``, is recorded in ``details``.

    Raises
    ------
    NormConditionViolated
        If ``h >= exp((1/2)(1/2 - 1/q))``.
    NegativeDenominator
        If ``(q - 2) - 4 n^2 q ln h <= 0``, which can happen for large ``n``
        even when the norm condition holds.
    """
    _check_exponent(q)
    if n < 1 or int(n) != n:
        raise InvalidParameter("n must be a positive integer")
    if not 0 < delta < 1:
        raise InvalidParameter("delta must lie in (0, 1)")
    if not hyper_norm > 0:
        raise InvalidParameter("hyper_norm must be positive")
    c = _te_constant(mu, te_constant)
    lip = r.lipschitz_seminorm
    budget = norm_budget(q)
    if not hyper_norm < budget:
        raise NormConditionViolated(f"||P||_(2->{q}) = {hyper_norm} is not below {budget}")
    denominator = (q - 2) - 4 * n * n * q * math.log(hyper_norm)
    if not denominator > 0:
        raise NegativeDenominator(f"(q - 2) - 4 n^2 q ln||P|| = {denominator} <= 0 for n={n}")
    rho = density_ratio_l2(beta, mu)
    factor = 4 * n * n * q / denominator
    value = math.log(rho / (1 - delta)) * factor
    inputs = {"q": q, "te_constant": c, "lipschitz": lip, "density_ratio": rho,
              "hyper_norm": hyper_norm, "n": n, "delta": delta}
    details = {
        "epsilon_n": math.sqrt(c) * lip / n,
        "probability_target": 1 - delta,
        "n_steps_delta_reading": math.log(rho / delta) * factor,
        "denominator": denominator,
        "norm_budget": budget,
    }
    pre = [("q > 2", True), ("norm condition", True), ("denominator > 0", True),
           ("density ratio finite", math.isfinite(rho))]
    return ConcentrationCertificate(Theorem.HYPERBOUNDED_SAMPLE_COMPLEXITY, inputs, value, pre, details)


def hypercontractive_tail_cor11(mu, r, beta, p, N, epsilon, delta=None, te_constant=None):
    """Tail bound under hypercontractivity (``||P||_{2->p} <= 1``).

    ``rho * exp(-N eps^2 (p - 2) / (4 C L^2 p))``. With ``delta`` given, the
    companion length ``ln(rho / (1 - delta)) 4 C L^2 p / (eps^2 (p - 2))`` is
    recorded as ``details['min_N']``.
    """
    _check_exponent(p)
    if not epsilon > 0:
        raise InvalidParameter("epsilon must be positive")
    if N < 0:
        raise InvalidParameter("N must be nonnegative")
    c = _te_constant(mu, te_constant)
    lip = r.lipschitz_seminorm
    rho = density_ratio_l2(beta, mu)
    rate = epsilon ** 2 * (p - 2) / (4 * c * lip ** 2 * p) if lip > 0 else math.inf
    value = rho * math.exp(-N * rate) if math.isfinite(rate) or N == 0 else 0.0
    inputs = {"p": p, "te_constant": c, "lipschitz": lip, "density_ratio": rho, "N": N, "epsilon": epsilon}
    details = {"rate": rate, "vacuous": not value < 1}
    if delta is not None:
        if not 0 < delta < 1:
            raise InvalidParameter("delta must lie in (0, 1)")
        details["delta"] = delta
        details["min_N"] = math.log(rho / (1 - delta)) / rate
    pre = [("p > 2", True), ("te constant known", True), ("density ratio finite", math.isfinite(rho))]
    return ConcentrationCertificate(Theorem.HYPERCONTRACTIVE_TAIL, inputs, value, pre, details)


def gaussian_hyperbound_value(alpha, p):
    x = 1.0 - alpha * alpha * p / (1.0 + alpha * alpha)
    return (1 - alpha ** 4) ** -0.25 * x ** (-1.0 / (2 * p)) * math.exp(-(2.0 / p) * x)


def gaussian_hyperbound(alpha, p):
    """Closed-form bound on ``||P||_{2->p}`` for the AR(1) chain.

    ``(1 - a^4)^(-1/4) (1 - a^2 p/(1 + a^2))^(-1/(2p)) exp(-(2/p)(1 - a^2 p/(1 + a^2)))``,
    defined for ``2 < p < 1 + 1/a^2``. ``details['hypercontractive']`` is
    set when the value is at most 1.
    """
    if not abs(alpha) < 1:
        raise InvalidParameter("|alpha| < 1 required")
    _check_exponent(p)
    limit = math.inf if alpha == 0 else 1 + 1 / alpha ** 2
    if not p < limit:
        raise OutsideValidityRegion(f"p={p} outside (2, {limit})")
    value = gaussian_hyperbound_value(alpha, p)
    inputs = {"alpha": alpha, "p": p}
    details = {"hypercontractive": value <= 1, "p_limit": limit}
    pre = [("|alpha| < 1", True), ("p > 2", True), ("p < 1 + 1/alpha^2", True)]
    return ConcentrationCertificate(Theorem.GAUSSIAN_HYPERBOUND, inputs, value, pre, details)


def find_hypercontractive_p(alpha, p_max=P_MAX, tol=1e-9, grid=512):
    """Largest ``p`` in ``(2, min(1 + 1/alpha^2, p_max)]`` where the Gaussian
    hyperbound is at most 1, or ``None`` if there is none.

    A grid scan locates the last sign change of ``bound - 1``, then bisection
    refines it to ``tol`` in ``p`` (keeping the side where the bound is <= 1).
    """
    if not abs(alpha) < 1:
        raise InvalidParameter("|alpha| < 1 required")
    limit = math.inf if alpha == 0 else 1 + 1 / alpha ** 2
    top = min(limit, p_max)
    if top <= 2:
        return None
    f = lambda p: gaussian_hyperbound_value(alpha, p) - 1.0
    if top < limit and f(top) <= 0:
        return float(top)
    # just inside an open endpoint the bound is not defined
    hi_edge = top - 1e-12 * max(1.0, top) if top == limit else top
    lo_edge = 2.0 + 1e-12
    ps = [lo_edge + (hi_edge - lo_edge) * i / grid for i in range(grid + 1)]
    good = [i for i, p in enumerate(ps) if f(p) <= 0]
    if not good:
        return None
    i = good[-1]
    if i == grid:
        return float(ps[i])
    lo, hi = ps[i], ps[i + 1]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) <= 0:
            lo = mid
        else:
            hi = mid
    return lo


def max_admissible_n(q, hyper_norm):
    """Largest ``n`` keeping ``(q - 2) - 4 n^2 q ln h`` positive (``inf`` if ``h <= 1``)."""
    if hyper_norm <= 1:
        return math.inf
    bound = math.sqrt((q - 2) / (4 * q * math.log(hyper_norm)))
    n = math.floor(bound)
    return n - 1 if n == bound else n


def failed_certificate(theorem, inputs, exc):
    """Record for a certificate whose preconditions fail: ``valid`` is false,
    the value is ``inf`` and the exception class is kept in ``details``."""
    return ConcentrationCertificate(Theorem(theorem), dict(inputs), math.inf,
                                    [(str(exc), False)], {"error": type(exc).__name__})
