"""Exception types raised by the solvers."""


class PenalLabError(Exception):
    """Base class for every error raised by penal_lab."""


class InvalidPotential(PenalLabError, ValueError):
    pass


class UnclassifiablePotential(PenalLabError):
    pass


class NonPositivePhi(PenalLabError, ValueError):
    pass


class NonConvergedShooting(PenalLabError):
    pass


class NoSignChange(PenalLabError):
    """The bilateral derivative mismatch does not bracket zero."""


class UnknownFormula(PenalLabError, KeyError):
    pass


class UnstableScheme(PenalLabError):
    pass


class DomainTooNarrow(PenalLabError):
    pass


class TailNotCovered(PenalLabError):
    pass


class PoorFit(PenalLabError):
    pass


class SeriesNotConverged(PenalLabError):
    pass


class InadmissibleParams(PenalLabError, ValueError):
    pass


class UnsupportedPotential(PenalLabError, ValueError):
    pass


class DivergentH(PenalLabError):
    pass


class DivergentScale(PenalLabError):
    pass


class BracketingFailed(PenalLabError):
    pass


class InversionFailed(PenalLabError):
    pass


class NotConverged(PenalLabError):
    pass


class MonotoneDrift(PenalLabError):
    """Raised instead of returning a number in the degenerate eta -> infinity limit."""


class ConfigError(PenalLabError, ValueError):
    pass
