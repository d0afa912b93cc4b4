"""Exception hierarchy.

``ConfigError`` subclasses map to CLI exit code 2, everything else deriving
from ``NumericalError`` maps to exit code 3.
"""


class CausticForgeError(Exception):
    pass


class ConfigError(CausticForgeError, ValueError):
    pass


class NumericalError(CausticForgeError, ArithmeticError):
    pass


# cylinder of lines
class NotClosed(NumericalError):
    pass


class TooFewSamples(NumericalError):
    pass


class DegenerateTangent(NumericalError):
    pass


class NoIntersection(NumericalError):
    pass


class Tangential(NumericalError):
    pass


# ovals
class NotConvex(ConfigError):
    pass


class SelfIntersecting(ConfigError):
    pass


class RadialSolveFailed(ConfigError):
    pass


# billiard
class TangentialReflection(Tangential):
    pass


class FieldTangent(NumericalError):
    pass


# beams
class NotContained(ConfigError):
    pass


class RefinementBudgetExceeded(NumericalError):
    pass


# caustics
class DegenerateFamily(NumericalError):
    pass


class NoisyIndicator(NumericalError):
    pass


# flow
class StabilityViolation(NumericalError):
    pass


class Pinch(NumericalError):
    pass


class MaxStepsExceeded(NumericalError):
    pass


class NotAGraph(NumericalError):
    pass
