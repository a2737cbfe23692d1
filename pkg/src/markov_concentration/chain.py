"""Markov chain models, stationary laws, observables and initial laws.

The reference system is the scalar AR(1) chain ``x' = alpha * x + w`` with
``w ~ N(0, noise_std**2)``. Anything else is a :class:`TransitionKernel`
supplied by the caller.
"""
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, stats

from .errors import DivergentRatio, InvalidParameter, UnsupportedChain


# stationary variance would exceed ~5e11 noise variances beyond this
ALPHA_MARGIN = 1e-12


class ChainKind(str, enum.Enum):
    LINEAR_GAUSSIAN_1D = "LinearGaussian1D"
    CUSTOM_KERNEL = "CustomKernel"


@dataclass(frozen=True)
class TransitionKernel:
    """User-supplied 1-D transition law.

    ``sample(x, rng)`` draws one successor for every entry of the array ``x``;
    ``density(x, y)`` evaluates the transition density ``p(x, y)``
    elementwise (broadcasting). Both are needed by the Ulam discretization.
    """

    sample: Callable[[np.ndarray, np.random.Generator], np.ndarray]
    density: Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ChainSpec:
    kind: ChainKind
    alpha: Optional[float] = None
    noise_std: float = 1.0
    kernel: Optional[TransitionKernel] = None

    def __post_init__(self):
        kind = ChainKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is ChainKind.LINEAR_GAUSSIAN_1D:
            if self.alpha is None or not math.isfinite(self.alpha):
                raise InvalidParameter("LinearGaussian1D needs a finite alpha")
            if not abs(self.alpha) < 1:
                raise InvalidParameter(f"alpha={self.alpha!r} violates |alpha| < 1 (unstable chain)")
            if not 1 - abs(self.alpha) > ALPHA_MARGIN:
                raise InvalidParameter(f"alpha={self.alpha!r} is within {ALPHA_MARGIN} of the |alpha| < 1 boundary")
            if not (self.noise_std > 0 and math.isfinite(self.noise_std)):
                raise InvalidParameter(f"noise_std={self.noise_std!r} must be > 0")
            object.__setattr__(self, "alpha", float(self.alpha))
            object.__setattr__(self, "noise_std", float(self.noise_std))
        elif self.kernel is None:
            raise InvalidParameter("CustomKernel needs a TransitionKernel")

    @classmethod
    def linear_gaussian(cls, alpha, noise_std=1.0):
        return cls(ChainKind.LINEAR_GAUSSIAN_1D, alpha=alpha, noise_std=noise_std)

    @classmethod
    def custom(cls, kernel):
        return cls(ChainKind.CUSTOM_KERNEL, kernel=kernel)

    @property
    def is_gaussian(self):
        return self.kind is ChainKind.LINEAR_GAUSSIAN_1D

    def sample_next(self, x, rng):
        """One transition from every state in ``x``."""
        x = np.asarray(x, dtype=float)
        if self.is_gaussian:
            return self.alpha * x + self.noise_std * rng.standard_normal(x.shape)
        return np.asarray(self.kernel.sample(x, rng), dtype=float)

    def transition_density(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.is_gaussian:
            return stats.norm.pdf(y, loc=self.alpha * x, scale=self.noise_std)
        return np.asarray(self.kernel.density(x, y), dtype=float)


@dataclass(frozen=True)
class StationaryMeasure:
    """Gaussian invariant law ``N(mean, variance)``.

    ``te_constant`` is the transport-entropy constant ``C`` in
    ``W_1(mu, nu) <= sqrt(2 C Ent(nu | mu))``; ``None`` when unknown.
    """

    mean: float
    variance: float
    te_constant: Optional[float] = None

    def __post_init__(self):
        if not self.variance > 0:
            raise InvalidParameter("stationary variance must be positive")

    @property
    def std(self):
        return math.sqrt(self.variance)

    def sample(self, size, rng):
        return self.mean + self.std * rng.standard_normal(size)

    def pdf(self, x):
        return stats.norm.pdf(x, loc=self.mean, scale=self.std)

    def with_te_constant(self, c):
        return StationaryMeasure(self.mean, self.variance, c)


def stationary_measure(spec, te_constant=None):
    """Invariant law of the AR(1) chain: ``N(0, noise_std**2 / (1 - alpha**2))``.

    Any Gaussian satisfies the W_1 transport-entropy inequality with constant
    equal to its variance, which is the default ``te_constant``. Pass
    ``te_constant=1.0`` to force the unit-constant reading.
    """
    if not spec.is_gaussian:
        raise UnsupportedChain("no closed-form stationary law for a custom kernel")
    variance = spec.noise_std ** 2 / (1.0 - spec.alpha ** 2)
    return StationaryMeasure(0.0, variance, variance if te_constant is None else float(te_constant))


@dataclass(frozen=True)
class Observable:
    """A reward function together with its Lipschitz seminorm (Euclidean metric)."""

    name: str
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    lipschitz_seminorm: float
    params: tuple = ()
    metric: str = "Euclidean"

    def __post_init__(self):
        if not self.lipschitz_seminorm >= 0:
            raise InvalidParameter("Lipschitz seminorm must be nonnegative")

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))

    def describe(self):
        return {"name": self.name, **dict(self.params)}


def identity():
    return Observable("identity", lambda x: x * 1.0, 1.0)


def absolute():
    return Observable("abs", np.abs, 1.0)


def clipped_linear(scale=1.0):
    """``scale * tanh(x / scale)``: linear near 0, bounded by ``scale``, 1-Lipschitz."""
    if not scale > 0:
        raise InvalidParameter("clipped_linear scale must be positive")
    scale = float(scale)
    return Observable("clipped_linear", lambda x: scale * np.tanh(x / scale), 1.0,
                      params=(("scale", scale),))


def constant(c):
    c = float(c)
    return Observable("constant", lambda x: np.full(np.shape(x), c), 0.0, params=(("value", c),))


def scaled(r, s):
    """The observable ``s * r``."""
    s = float(s)
    return Observable(f"{s}*{r.name}", lambda x: s * r.func(x), abs(s) * r.lipschitz_seminorm,
                      params=r.params + (("scale_factor", s),))


BUILTIN_OBSERVABLES = {
    "identity": identity,
    "abs": absolute,
    "clipped_linear": clipped_linear,
}


def stationary_expectation(r, mu):
    """``mu(r)`` for a Gaussian ``mu``.

    Closed form for the identity, |x| and constants; adaptive quadrature
    (absolute tolerance 1e-13) otherwise.
    """
    m, s = mu.mean, mu.std
    if r.name == "identity":
        return m
    if r.name == "abs":
        return s * math.sqrt(2 / math.pi) * math.exp(-m * m / (2 * s * s)) + m * (1 - 2 * stats.norm.cdf(-m / s))
    if r.name == "constant":
        return dict(r.params)["value"]
    integrand = lambda z: float(r(m + s * z)) * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    value, _ = integrate.quad(integrand, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)
    return value


class InitialKind(str, enum.Enum):
    STATIONARY = "Stationary"
    GAUSSIAN = "Gaussian"
    DIRAC = "Dirac"


@dataclass(frozen=True)
class InitialDistribution:
    kind: InitialKind
    mean: float = 0.0
    variance: Optional[float] = None
    point: Optional[float] = None

    def __post_init__(self):
        kind = InitialKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is InitialKind.GAUSSIAN and not (self.variance is not None and self.variance > 0):
            raise InvalidParameter("Gaussian initial law needs variance > 0")
        if kind is InitialKind.DIRAC and self.point is None:
            raise InvalidParameter("Dirac initial law needs a point")

    @classmethod
    def stationary(cls):
        return cls(InitialKind.STATIONARY)

    @classmethod
    def gaussian(cls, mean, variance):
        return cls(InitialKind.GAUSSIAN, mean=float(mean), variance=float(variance))

    @classmethod
    def dirac(cls, point):
        return cls(InitialKind.DIRAC, point=float(point))

    def sample(self, rng, stationary=None):
        """Draw one initial state; ``stationary`` is the law used for ``Stationary``."""
        if self.kind is InitialKind.DIRAC:
            return self.point
        if self.kind is InitialKind.GAUSSIAN:
            return self.mean + math.sqrt(self.variance) * rng.standard_normal()
        if stationary is None:
            raise UnsupportedChain("stationary start requires a known stationary law")
        return stationary.mean + stationary.std * rng.standard_normal()

    def describe(self):
        if self.kind is InitialKind.GAUSSIAN:
            return {"kind": self.kind.value, "mean": self.mean, "variance": self.variance}
        if self.kind is InitialKind.DIRAC:
            return {"kind": self.kind.value, "point": self.point}
        return {"kind": self.kind.value}


def density_ratio_l2(beta, mu):
    """``||d beta / d mu||_{L^2(mu)}``.

    For ``beta = N(m1, a)`` and ``mu = N(m0, v)`` the chi-square integral
    ``int (d beta/d mu)^2 d mu`` converges iff ``k = 2/a - 1/v > 0`` and equals
    ``sqrt(v) / (a sqrt(k)) * exp(b^2 / (2k) - c / 2)`` with
    ``b = 2 m1/a - m0/v`` and ``c = 2 m1^2/a - m0^2/v``.

    Raises
    ------
    DivergentRatio
        For a Dirac start or a Gaussian too wide for the integral to converge.
    """
    if beta.kind is InitialKind.STATIONARY:
        return 1.0
    if beta.kind is InitialKind.DIRAC:
        raise DivergentRatio("a Dirac initial law is singular w.r.t. the stationary law")
    a, m1 = beta.variance, beta.mean
    v, m0 = mu.variance, mu.mean
    k = 2.0 / a - 1.0 / v
    if k <= 0:
        raise DivergentRatio(f"chi-square integral diverges: 2/var(beta) - 1/var(mu) = {k:.3g} <= 0")
    b = 2.0 * m1 / a - m0 / v
    c = 2.0 * m1 * m1 / a - m0 * m0 / v
    log_chi2 = 0.5 * math.log(v) - math.log(a) - 0.5 * math.log(k) + b * b / (2 * k) - c / 2
    return math.exp(0.5 * log_chi2)
