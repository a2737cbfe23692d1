"""Exception hierarchy.

Errors split in two families: ``ConcentrationError`` for violated
preconditions of a bound or a model, and ``NumericalFailure`` for
discretizations, quadratures and eigensolves that did not behave.
"""
import math


class ConcentrationError(Exception):
    """Base class for every error raised by the package."""


class InvalidParameter(ConcentrationError, ValueError):
    """A constructor or operation received an out-of-range argument."""


class UnsupportedChain(ConcentrationError):
    """The requested quantity has no closed form for this chain."""


class DivergentRatio(ConcentrationError):
    """``||d beta / d mu||_2`` is infinite; any certificate using it is vacuous."""

    value = math.inf


class LengthMismatch(ConcentrationError, ValueError):
    pass


class EmptyTrajectory(ConcentrationError, ValueError):
    pass


class InvalidExponent(ConcentrationError, ValueError):
    pass


class UnknownTEConstant(ConcentrationError):
    pass


class NormConditionViolated(ConcentrationError):
    pass


class NegativeDenominator(ConcentrationError):
    pass


class OutsideValidityRegion(ConcentrationError):
    pass


class NumericalFailure(ConcentrationError):
    """Base class for failures of the numerical machinery itself."""


class QuadratureFailure(NumericalFailure):
    pass


class EigensolveFailure(NumericalFailure):
    pass


class EmptyCell(NumericalFailure):
    pass


class MomentOverflow(NumericalFailure):
    pass
