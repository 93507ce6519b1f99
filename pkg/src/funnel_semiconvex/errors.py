"""Exception hierarchy shared by all modules."""


class FunnelError(Exception):
    """Base class; ``exit_code`` is what the CLI returns when this escapes."""

    exit_code = 1


class ConfigError(FunnelError, ValueError):
    exit_code = 2


class DomainError(FunnelError, ValueError):
    """Argument outside the mathematical domain of a function."""

    exit_code = 2


class RangeError(FunnelError, ValueError):
    """Argument outside the sampled/tabulated range of a discrete object."""

    exit_code = 2


class DegenerateModulus(FunnelError, ValueError):
    exit_code = 2


class SubadditivityViolation(FunnelError):
    exit_code = 3


class GridTooFine(FunnelError):
    exit_code = 2


class InternalConsistency(FunnelError):
    exit_code = 1


class FlatEnvelope(FunnelError):
    exit_code = 3


class SamplerContractError(FunnelError):
    exit_code = 1


class DomainTruncation(FunnelError):
    exit_code = 3


class GeometryError(FunnelError):
    exit_code = 4


class UnsupportedDimension(GeometryError):
    pass


class ReductionNotApplicable(GeometryError):
    pass


class ProjectionInvalid(GeometryError):
    pass


class ExtractionFailed(GeometryError):
    pass


class HypothesisViolation(GeometryError):
    """The input set is bounded or contains a translated full-dimensional cone."""
