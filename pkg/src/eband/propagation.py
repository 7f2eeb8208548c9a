"""E-band link budget: free-space gain, NLoS path loss and weather losses.

All functions broadcast over numpy arrays so that the coverage simulator can
evaluate thousands of links in one call; scalar inputs return Python floats.

Attenuation models are fitted through the anchor values quoted for the
E-band and are only meant for that regime:

* rain: power law ``k * R**alpha`` through 10 dB/km at 25 mm/h and 30 dB/km
  at 100 mm/h,
* fog: linear, 4 dB/km per g/m^3,
* foliage: linear, 2.5 dB per metre of penetration,
* gases: a flat 0.5 dB/km anywhere in 71-86 GHz.

Ice, snow and dust are taken as loss-free.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from eband.errors import DomainError, OutOfBandError, PolicyError
from eband.keyed_rng import keyed_normal, pair_key
from eband.quantities import SPEED_OF_LIGHT, db_from_linear, wavelength_of

EBAND_MIN_HZ = 71e9
EBAND_MAX_HZ = 86e9

ATMOSPHERIC_DB_PER_KM = 0.5

RAIN_ANCHORS = ((25.0, 10.0), (100.0, 30.0))  # (mm/h, dB/km)
RAIN_ALPHA = math.log(3.0) / math.log(4.0)
RAIN_K = 10.0 / 25.0**RAIN_ALPHA

FOG_DB_PER_KM_PER_GM3 = 4.0
FOLIAGE_DB_PER_M = 2.5

NLOS_EXPONENT = 5.88
NLOS_SHADOW_SIGMA_DB = 14.19
NLOS_D0_M = 5.0

#: FCC E-band output power limit, 3 W.
TX_POWER_CEILING_DBM = 10.0 * math.log10(3000.0)


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def _require(cond, message: str, exc=DomainError):
    if not np.all(cond):
        raise exc(message)


@dataclass(frozen=True)
class AntennaGains:
    """Transmit and receive antenna gains, linear (scalars or broadcastable arrays)."""

    g_t: float = 1.0
    g_r: float = 1.0

    def __post_init__(self):
        if not (np.all(np.asarray(self.g_t) > 0) and np.all(np.asarray(self.g_r) > 0)):
            raise DomainError("antenna gains must be positive")

    @classmethod
    def from_dbi(cls, g_t_dbi, g_r_dbi) -> AntennaGains:
        return cls(_out(np.power(10.0, np.asarray(g_t_dbi, dtype=float) / 10.0)),
                   _out(np.power(10.0, np.asarray(g_r_dbi, dtype=float) / 10.0)))

    @property
    def total_db(self):
        return _out(10.0 * np.log10(np.multiply(self.g_t, self.g_r)))


@dataclass(frozen=True)
class WeatherState:
    rain_rate: float = 0.0  # mm/h
    fog_density: float = 0.0  # g/m^3
    foliage_depth: float = 0.0  # m

    def __post_init__(self):
        for name in ("rain_rate", "fog_density", "foliage_depth"):
            if not getattr(self, name) >= 0:
                raise DomainError(f"{name} must be non-negative")


CLEAR_SKY = WeatherState()


@dataclass(frozen=True)
class LinkBudgetReport:
    """Itemised link budget; every field in dB / dBm.

    ``free_space_gain`` is the distance-dependent path gain including both
    antenna gains.  On an NLoS link it holds the NLoS model's gain instead
    (``los`` tells which).
    """

    free_space_gain: float
    atmospheric_loss: float
    rain_loss: float
    fog_loss: float
    foliage_loss: float
    total_path_gain: float
    received_power: float
    snr: float
    los: bool = True
    shadowing: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


def free_space_path_gain(gains: AntennaGains, wavelength, distance):
    """Linear path gain ``G_T G_R lambda^2 / (4 pi D)^2`` of a LoS link."""
    lam = np.asarray(wavelength, dtype=float)
    d = np.asarray(distance, dtype=float)
    _require(lam > 0, "wavelength must be positive")
    _require(d > 0, "distance must be positive")
    return _out(gains.g_t * gains.g_r * lam**2 / (4.0 * np.pi * d) ** 2)


def free_space_path_loss_db(wavelength, distance):
    """Free-space loss between isotropic antennas, in dB (positive)."""
    lam = np.asarray(wavelength, dtype=float)
    d = np.asarray(distance, dtype=float)
    _require(lam > 0, "wavelength must be positive")
    _require(d > 0, "distance must be positive")
    return _out(20.0 * np.log10(4.0 * np.pi * d / lam))


def nlos_path_loss(distance, wavelength, d0: float = NLOS_D0_M, shadowing_db=0.0,
                   exponent: float = NLOS_EXPONENT):
    """Close-in NLoS path loss in dB.

    ``PL(d) = FSPL(d0) + 10 n log10(d / d0) + X`` with ``X`` the caller's
    shadowing sample (see :func:`link_shadowing`); ``X = 0`` disables it.
    """
    d = np.asarray(distance, dtype=float)
    if not d0 > 0:
        raise DomainError("reference distance d0 must be positive")
    _require(d >= d0, f"distance must be >= d0 = {d0} m")
    pl = free_space_path_loss_db(wavelength, d0) + 10.0 * exponent * np.log10(d / d0)
    return _out(pl + np.asarray(shadowing_db, dtype=float))


def link_shadowing(seed: int, a, b, sigma_db: float = NLOS_SHADOW_SIGMA_DB):
    """Log-normal shadowing sample in dB for the unordered endpoint pair (a, b).

    ``a`` and ``b`` are integer endpoint identifiers (arrays broadcast).  The
    draw is a pure function of ``(seed, {a, b})``.
    """
    lo, hi = pair_key(a, b)
    return _out(sigma_db * keyed_normal(seed, lo, hi))


def atmospheric_attenuation(frequency):
    """Gaseous absorption in dB/km; constant across the E-band."""
    f = np.asarray(frequency, dtype=float)
    _require((f >= EBAND_MIN_HZ) & (f <= EBAND_MAX_HZ),
             "atmospheric model is only valid for 71-86 GHz", OutOfBandError)
    return _out(np.full_like(f, ATMOSPHERIC_DB_PER_KM))


def rain_attenuation(rate):
    """Specific rain attenuation in dB/km for a rain rate in mm/h."""
    r = np.asarray(rate, dtype=float)
    _require(r >= 0, "rain rate must be non-negative")
    return _out(RAIN_K * r**RAIN_ALPHA)


def fog_attenuation(density):
    """Fog/cloud attenuation in dB/km for a liquid water density in g/m^3."""
    rho = np.asarray(density, dtype=float)
    _require(rho >= 0, "fog density must be non-negative")
    return _out(FOG_DB_PER_KM_PER_GM3 * rho)


def foliage_loss(depth):
    """Total foliage loss in dB for a penetration depth in metres."""
    x = np.asarray(depth, dtype=float)
    _require(x >= 0, "foliage depth must be non-negative")
    return _out(FOLIAGE_DB_PER_M * x)


def array_element_count(aperture_area: float, wavelength: float) -> int:
    """Elements that fit in an aperture at half-wavelength pitch.

    Doubling the frequency quarters the cell area, so the count grows four
    times (the fractional count scales exactly; the floor may not).
    """
    if not aperture_area > 0:
        raise DomainError("aperture area must be positive")
    if not wavelength > 0:
        raise DomainError("wavelength must be positive")
    ratio = aperture_area / (wavelength / 2.0) ** 2
    # absorb representation error so exact multiples are not floored down
    return int(math.floor(ratio * (1.0 + 1e-12)))


def array_gain_db(n_elements: int) -> float:
    """Coherent array gain ``10 log10 N`` of an ideally steered array."""
    if n_elements < 1:
        raise DomainError("element count must be >= 1")
    return 10.0 * math.log10(n_elements)


def check_tx_power(tx_power_dbm: float, allow_over_ceiling: bool = False) -> None:
    if tx_power_dbm > TX_POWER_CEILING_DBM:
        msg = (f"transmit power {tx_power_dbm:.2f} dBm exceeds the 3 W ceiling "
               f"({TX_POWER_CEILING_DBM:.2f} dBm)")
        if not allow_over_ceiling:
            raise PolicyError(msg)
        warnings.warn(msg + "; override in effect", stacklevel=3)


def weather_losses(frequency, distance, weather: WeatherState):
    """(atmospheric, rain, fog, foliage) losses in dB over ``distance`` metres."""
    d_km = np.asarray(distance, dtype=float) / 1000.0
    return (
        _out(atmospheric_attenuation(frequency) * d_km),
        _out(rain_attenuation(weather.rain_rate) * d_km),
        _out(fog_attenuation(weather.fog_density) * d_km),
        _out(foliage_loss(weather.foliage_depth) * np.ones_like(d_km)),
    )


def path_gain_db(gains: AntennaGains, frequency, distance, weather: WeatherState = CLEAR_SKY,
                 los=True, shadowing_db=0.0, d0: float = NLOS_D0_M, clamp_to_d0: bool = False):
    """Vectorised core of :func:`link_budget`.

    Returns ``(distance gain, atmospheric, rain, fog, foliage, total)`` in dB.
    ``los`` may be a boolean array; NLoS entries use the close-in model.
    With ``clamp_to_d0`` NLoS links shorter than ``d0`` are evaluated at
    ``d0`` instead of raising.
    """
    f = np.asarray(frequency, dtype=float)
    d = np.asarray(distance, dtype=float)
    los = np.asarray(los, dtype=bool)
    _require(d > 0, "distance must be positive")
    _require(f > 0, "frequency must be positive")
    lam = SPEED_OF_LIGHT / f
    g_ant = np.asarray(gains.total_db)
    fs = g_ant - free_space_path_loss_db(lam, d)
    if np.all(los):
        dist_gain = np.asarray(fs, dtype=float)
    else:
        # evaluate the NLoS branch only where used; d < d0 is rejected there
        d_nlos = np.maximum(d, d0) if clamp_to_d0 else np.where(los, np.maximum(d, d0), d)
        nl = g_ant - nlos_path_loss(d_nlos, lam, d0, shadowing_db)
        dist_gain = np.where(los, fs, nl)
    atm, rain, fog, fol = weather_losses(f, d, weather)
    total = dist_gain - (atm + rain + fog + fol)
    return tuple(_out(v) for v in (dist_gain, atm, rain, fog, fol, total))


def link_budget(tx_power: float, gains: AntennaGains, frequency: float, distance: float,
                weather: WeatherState = CLEAR_SKY, los: bool = True, noise_power: float = -83.0,
                shadowing_db: float = 0.0, d0: float = NLOS_D0_M,
                allow_over_ceiling: bool = False) -> LinkBudgetReport:
    """Received power and SNR of one link.

    ``tx_power`` and ``noise_power`` in dBm, ``frequency`` in Hz, ``distance``
    in metres.  The 3 W ceiling raises :class:`PolicyError` unless
    ``allow_over_ceiling`` is set, in which case a warning is emitted.
    """
    check_tx_power(tx_power, allow_over_ceiling)
    if not distance > 0:
        raise DomainError("distance must be positive")
    dist_gain, atm, rain, fog, fol, total = path_gain_db(
        gains, frequency, distance, weather, los, shadowing_db if not los else 0.0, d0)
    rx = tx_power + total
    return LinkBudgetReport(
        free_space_gain=dist_gain,
        atmospheric_loss=atm,
        rain_loss=rain,
        fog_loss=fog,
        foliage_loss=fol,
        total_path_gain=total,
        received_power=rx,
        snr=rx - noise_power,
        los=bool(los),
        shadowing=0.0 if los else float(shadowing_db),
    )


def fspl_gap_db(f_high: float, f_low: float) -> float:
    """Extra free-space loss at ``f_high`` relative to ``f_low``, same distance and gains."""
    g_lo = free_space_path_gain(AntennaGains(), wavelength_of(f_low), 1.0)
    g_hi = free_space_path_gain(AntennaGains(), wavelength_of(f_high), 1.0)
    return db_from_linear(g_lo / g_hi)
