"""Exception and warning types raised across the package."""


class MetavizError(Exception):
    """Base class for every error raised by metaviz."""


class ValidationError(MetavizError, ValueError):
    """An input violates a documented invariant.

    ``violations`` lists every problem found, not only the first.
    """

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations) if violations else [message]


# core model
class MismatchedSampleCount(ValidationError):
    pass


class NonFiniteCoordinate(ValidationError):
    pass


class DuplicateName(ValidationError):
    pass


class EmptySet(ValidationError):
    pass


class TooFewSamples(ValidationError):
    pass


# geometry / spectral / fusion
class IndexOutOfRange(MetavizError, IndexError):
    pass


class NegativeEntry(ValidationError):
    pass


class NonFiniteEntry(ValidationError):
    pass


class MixedSampleIndex(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class NotConverged(MetavizError, ArithmeticError):
    """Eigensolver failed; ``best`` holds the last iterate and report."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class AlreadySymmetrized(MetavizError):
    pass


# embedders
class NotSymmetric(ValidationError):
    pass


class NonPositiveSigma(ValidationError):
    pass


class UnsupportedMethod(ValidationError):
    pass


# simulation
class InvalidConfig(ValidationError):
    pass


class InvalidModel(ValidationError):
    pass


class MalformedCloud(ValidationError):
    pass


# metrics
class DegenerateTruth(ValidationError):
    pass


class ZeroVector(ValidationError):
    pass


class AllDegenerate(ValidationError):
    pass


class SingletonCluster(ValidationError):
    pass


class SingleCluster(ValidationError):
    pass


class PointAtCenter(ValidationError):
    pass


class ModeMismatch(ValidationError):
    pass


class ZeroVariance(ValidationError):
    pass


# io
class ParseError(MetavizError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InconsistentColumnCount(ParseError):
    pass


class RankDeficientWarning(UserWarning):
    pass


class DisconnectedGraphWarning(UserWarning):
    pass


class DegenerateSampleWarning(UserWarning):
    pass


class WriteError(MetavizError, OSError):
    """An output file could not be written."""
