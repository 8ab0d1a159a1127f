"""Exception types raised by the tippe top toolkit."""


class TippeTopError(Exception):
    """Base class for all toolkit errors."""


class RegimeError(TippeTopError, ValueError):
    """Parameters fall outside the regime an operation requires."""


# dynamics

class ModelBreakdown(TippeTopError, ArithmeticError):
    """The reduced equations of motion cannot be evaluated at a state."""


class NonPositiveDenominator(ModelBreakdown):
    pass


class NegativeNormalForce(ModelBreakdown):
    """The top would leave the supporting plane."""


class SinThetaUnderflow(ModelBreakdown):
    """The Euler-angle chart degenerates (sin(theta) too small)."""


class StepSizeUnderflow(TippeTopError, ArithmeticError):
    pass


# potential

class PoleAtBoundary(TippeTopError, ValueError):
    pass


class NotSquareFree(TippeTopError, ValueError):
    pass


class NoSignChange(TippeTopError, ValueError):
    pass


class NonPositiveRHS(TippeTopError, ValueError):
    pass


# nutation

class DegenerateB(TippeTopError, ValueError):
    pass


class BelowMinimum(TippeTopError, ValueError):
    pass


class ComplexRoots(TippeTopError, ValueError):
    pass


class OutOfDomain(TippeTopError, ValueError):
    pass


class QuadratureNonConvergence(TippeTopError, ArithmeticError):
    pass


class EpsilonTooLarge(TippeTopError, ValueError):
    pass


class WOutOfRange(TippeTopError, ValueError):
    pass


class DegenerateDenominator(TippeTopError, ValueError):
    pass
