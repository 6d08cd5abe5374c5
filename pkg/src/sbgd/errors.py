"""Exception hierarchy shared by all sbgd modules."""


class SBGDError(Exception):
    """Base class for every error raised by the package."""


class CycleDetected(SBGDError):
    pass


class InvalidNode(SBGDError):
    pass


class Unreachable(SBGDError):
    pass


class CapExceeded(SBGDError):
    pass


class NoPositivePath(SBGDError):
    """No s-t path through the required edge exists in the positive support.

    For a genuine point of the path polytope this cannot happen, so seeing it
    means the input violated flow conservation beyond tolerance.
    """


class MuTooLarge(SBGDError):
    pass


class Infeasible(SBGDError):
    pass


class ProjectionDiverged(SBGDError):
    pass


class NotInPolytope(SBGDError):
    pass


class DecompositionStalled(SBGDError):
    pass


class DivideByZero(SBGDError):
    pass


class TooLarge(SBGDError):
    pass


class FeedbackMismatch(SBGDError):
    pass


class DegenerateSeries(SBGDError):
    pass


class ConfigError(SBGDError):
    """Invalid experiment configuration; ``line`` points into the source file when known."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line

    def __str__(self):
        msg = super().__str__()
        if self.line is not None:
            return f"line {self.line}: {msg}"
        return msg
