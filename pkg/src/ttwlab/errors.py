"""Exception hierarchy shared by every ttwlab module."""


class TTWLabError(Exception):
    """Base class for all errors raised by ttwlab."""


class InvalidParams(TTWLabError, ValueError):
    pass


class ChartMismatch(TTWLabError, ValueError):
    pass


class DomainViolation(TTWLabError, ValueError):
    """A point or value lies outside the domain where a formula is defined."""


class SingularPoint(DomainViolation):
    pass


class OriginSingularity(SingularPoint):
    pass


class PolarSingularity(SingularPoint):
    pass


class NonpositiveAngularEnergy(DomainViolation):
    pass


class BranchUndefined(DomainViolation):
    pass


class ZeroInput(DomainViolation, ZeroDivisionError):
    pass


class NonFiniteGradient(TTWLabError, ArithmeticError):
    pass


class EmptyPointSet(TTWLabError, ValueError):
    pass


class EmptyTrajectory(TTWLabError, ValueError):
    pass


class NonRationalFrequency(TTWLabError, ValueError):
    pass


class UnboundedMotion(TTWLabError, ValueError):
    pass


class NoTurningPoints(TTWLabError, ValueError):
    pass


class NumericalFailure(TTWLabError, RuntimeError):
    """Base for integration failures (CLI exit code 3)."""


class WallProximity(NumericalFailure):
    pass


class NonConvergence(NumericalFailure):
    pass


class StepUnderflow(NumericalFailure):
    pass


class NoRecurrence(NumericalFailure):
    pass


class ConfigError(TTWLabError, ValueError):
    pass
