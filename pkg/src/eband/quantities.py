"""Scalar quantities and unit conversions.

Everything inside the toolkit works in SI units (Hz, m, s) with powers in
dBm and gains in dB or linear ratio.  The small wrapper types here exist for
call sites that want validation at the boundary; the functions accept plain
floats as well.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from eband.errors import DomainError

#: Speed of light used throughout the toolkit, m/s.  Deliberately the
#: 4-digit engineering value rather than the exact SI constant.
SPEED_OF_LIGHT = 2.998e8

GHZ = 1e9
MHZ = 1e6
KHZ = 1e3


@dataclass(frozen=True)
class Frequency:
    hz: float

    def __post_init__(self):
        if not self.hz > 0:
            raise DomainError(f"frequency must be positive, got {self.hz!r} Hz")

    @classmethod
    def ghz(cls, value: float) -> Frequency:
        return cls(value * GHZ)

    def __float__(self) -> float:
        return float(self.hz)


@dataclass(frozen=True)
class Wavelength:
    m: float

    def __post_init__(self):
        if not self.m > 0:
            raise DomainError(f"wavelength must be positive, got {self.m!r} m")

    def __float__(self) -> float:
        return float(self.m)


@dataclass(frozen=True)
class Distance:
    m: float

    def __post_init__(self):
        if not self.m > 0:
            raise DomainError(f"distance must be positive, got {self.m!r} m")

    def __float__(self) -> float:
        return float(self.m)


@dataclass(frozen=True)
class DbValue:
    db: float

    @classmethod
    def from_linear(cls, x: float) -> DbValue:
        return cls(db_from_linear(x))

    def linear(self) -> float:
        return linear_from_db(self.db)

    def __float__(self) -> float:
        return float(self.db)


def wavelength_of(f: Frequency | float) -> float:
    """Wavelength in metres for a frequency in Hz."""
    hz = float(f)
    if not hz > 0:
        raise DomainError(f"frequency must be positive, got {hz!r} Hz")
    return SPEED_OF_LIGHT / hz


def frequency_of(wavelength: Wavelength | float) -> float:
    lam = float(wavelength)
    if not lam > 0:
        raise DomainError(f"wavelength must be positive, got {lam!r} m")
    return SPEED_OF_LIGHT / lam


def db_from_linear(x):
    """10*log10(x); accepts scalars or arrays, all entries must be > 0."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("linear value must be positive to convert to dB")
    out = 10.0 * np.log10(arr)
    return float(out) if out.ndim == 0 else out


def linear_from_db(d):
    arr = np.asarray(d, dtype=float)
    out = 10.0 ** (arr / 10.0)
    return float(out) if out.ndim == 0 else out


def dbm_from_watts(p_w: float) -> float:
    return db_from_linear(p_w * 1e3)


def watts_from_dbm(p_dbm: float) -> float:
    return linear_from_db(p_dbm) / 1e3


def kmh_to_ms(v_kmh: float) -> float:
    return v_kmh / 3.6


def is_power_of_two(n: int) -> bool:
    return isinstance(n, (int, np.integer)) and n > 0 and (int(n) & (int(n) - 1)) == 0


def log2_exact(n: int) -> int:
    if not is_power_of_two(n):
        raise DomainError(f"{n} is not a power of two")
    return int(n).bit_length() - 1
