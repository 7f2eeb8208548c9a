"""Exception hierarchy shared by every module.

The CLI maps each family onto a distinct exit code (see ``eband.cli``).
"""


class EbandError(Exception):
    """Base class for all toolkit errors."""


class DomainError(EbandError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class OutOfBandError(DomainError):
    """A frequency lies outside the band in which a model is valid."""


class PolicyError(EbandError):
    """A regulatory or plan rule was violated (power ceiling, channel count)."""


class AggregationError(EbandError):
    """Requested channels cannot be merged into one contiguous span."""


class InconsistentNumerologyError(EbandError):
    """An OFDM numerology breaks one of its integer sample identities.

    ``identity`` names the failed identity so callers can report it.
    """

    def __init__(self, identity: str, message: str):
        super().__init__(f"{identity}: {message}")
        self.identity = identity


class NumericalError(EbandError, ArithmeticError):
    """An eigensolve or search failed to meet its accuracy contract."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class DegenerateGeometryError(NumericalError):
    """Antenna positions coincide or the link axis is undefined."""


class InfeasibleError(NumericalError):
    """The requested multiplexing order is unavailable even at the near bound."""


class RangeError(NumericalError):
    """A bracketing search ran past its configured range."""


class ConfigurationError(EbandError, ValueError):
    """A scenario or run configuration violates its invariants."""


class SchemaError(ConfigurationError):
    """An input document does not match its schema.

    ``problems`` lists ``(field path, message)`` pairs.
    """

    def __init__(self, problems: list[tuple[str, str]]):
        self.problems = problems
        lines = "; ".join(f"{path or '<root>'}: {msg}" for path, msg in problems)
        super().__init__(f"invalid document: {lines}")
