class RieszLabError(Exception):
    """Base class for every error raised by rieszlab."""


class InvalidParameter(RieszLabError, ValueError):
    pass


class LengthMismatch(RieszLabError, ValueError):
    pass


class NegativeTime(RieszLabError, ValueError):
    pass


class SizeMismatch(RieszLabError, ValueError):
    pass


class EmptySystem(RieszLabError):
    pass


class UnstableMode(RieszLabError):
    pass


class PoleHit(RieszLabError):
    """An evaluation point coincides with a pole of the truncated operator."""

    def __init__(self, index: int, pole: complex, point: complex):
        super().__init__('PoleHit index=%d pole=%r point=%r' % (index, pole, point))
        self.index = index
        self.pole = pole
        self.point = point


class SingularFeedbackDenominator(RieszLabError):
    """1 - H(z) vanishes, so z is an eigenvalue of the closed-loop operator."""

    def __init__(self, point: complex, denominator: complex):
        super().__init__('SingularFeedbackDenominator point=%r denominator=%r' % (point, denominator))
        self.point = point
        self.denominator = denominator


class UnavailableTailBound(RieszLabError):
    pass


class PoleOnCircle(RieszLabError):
    pass


class EmptyStableTail(RieszLabError):
    pass


class Uncontrollable(RieszLabError):
    pass


class SeriesDivergence(RieszLabError):
    pass


class InsufficientData(RieszLabError):
    pass


class ZeroNorms(InsufficientData):

    def __init__(self, message: str, excluded: int):
        super().__init__(message)
        self.excluded = excluded


class DivergentCoupling(RieszLabError):
    pass


class ConfigError(RieszLabError, ValueError):
    pass


class StageError(RieszLabError):
    """A pipeline stage failed; the original error is chained as __cause__."""

    def __init__(self, stage: str, error: Exception):
        super().__init__('StageFailed stage=%s error=%s' % (stage, error))
        self.stage = stage
        self.error = error


class UsageError(RieszLabError, ValueError):
    """The command line could not be parsed."""
