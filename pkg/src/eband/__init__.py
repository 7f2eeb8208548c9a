"""E-band wireless link toolkit.

Link budgets and attenuation, LoS-MIMO eigenmode analysis, EMB OFDM
numerology and channel plans, and a coverage simulator for relay-assisted
user cooperation.
"""

from eband.errors import (
    AggregationError,
    ConfigurationError,
    DegenerateGeometryError,
    DomainError,
    EbandError,
    InconsistentNumerologyError,
    InfeasibleError,
    NumericalError,
    OutOfBandError,
    PolicyError,
    RangeError,
    SchemaError,
)

__version__ = "0.1.0"

__all__ = [
    "AggregationError",
    "ConfigurationError",
    "DegenerateGeometryError",
    "DomainError",
    "EbandError",
    "InconsistentNumerologyError",
    "InfeasibleError",
    "NumericalError",
    "OutOfBandError",
    "PolicyError",
    "RangeError",
    "SchemaError",
]
