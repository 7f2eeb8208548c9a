"""OFDM numerology and frame layout for the E-band mobile broadband air interface.

Sample accounting is done in integers throughout: a numerology is only
accepted when every duration is a whole number of samples.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, fields
from fractions import Fraction

from eband.errors import DomainError, InconsistentNumerologyError
from eband.quantities import SPEED_OF_LIGHT, is_power_of_two, kmh_to_ms

LTE_BASE_RATE_HZ = 30_720_000
SUBFRAME_S = Fraction(1, 1000)

# validator defaults
DOPPLER_MARGIN = 10  # Doppler must stay below spacing / DOPPLER_MARGIN
CLOCK_DRIFT_SPACINGS = 2
DEFAULT_MAX_SPEED_KMH = 120.0
DEFAULT_F_MAX_HZ = 86e9
DEFAULT_CLOCK_PPM = 10.0
DEFAULT_MAX_DELAY_SPREAD_S = 100e-9


@dataclass(frozen=True)
class Numerology:
    sampling_rate: int  # Hz
    subcarrier_spacing: int  # Hz
    fft_size: int
    symbols_per_slot: int
    cp_first: int  # samples
    cp_rest: int  # samples
    slots_per_subframe: int
    subframes_per_frame: int

    @classmethod
    def from_dict(cls, d: dict) -> Numerology:
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        missing = names - set(d)
        if unknown or missing:
            raise DomainError(f"numerology fields: unknown {sorted(unknown)}, "
                              f"missing {sorted(missing)}")
        values = {}
        for k, v in d.items():
            if isinstance(v, bool) or not isinstance(v, int) and not (
                    isinstance(v, float) and v.is_integer()):
                raise DomainError(f"numerology field {k} must be an integer, got {v!r}")
            values[k] = int(v)
        return cls(**values)

    def as_dict(self) -> dict:
        return asdict(self)

    @property
    def slot_samples(self) -> int:
        return (self.symbols_per_slot * self.fft_size + self.cp_first
                + (self.symbols_per_slot - 1) * self.cp_rest)

    @property
    def subframe_samples(self) -> int:
        return self.slots_per_subframe * self.slot_samples

    @property
    def frame_samples(self) -> int:
        return self.subframes_per_frame * self.subframe_samples

    @property
    def cp_samples_per_slot(self) -> int:
        return self.cp_first + (self.symbols_per_slot - 1) * self.cp_rest

    @property
    def cp_overhead(self) -> Fraction:
        return Fraction(self.cp_samples_per_slot, self.slot_samples)

    def seconds(self, samples: int) -> Fraction:
        return Fraction(samples, self.sampling_rate)

    @property
    def slot_duration(self) -> Fraction:
        return self.seconds(self.slot_samples)

    def check(self) -> None:
        """Raise :class:`InconsistentNumerologyError` naming the first broken identity."""
        for name, value in asdict(self).items():
            if value <= 0 and not (name.startswith("cp_") and value == 0):
                raise InconsistentNumerologyError(
                    "positive_fields", f"{name} must be positive, got {value}")
        if self.fft_size * self.subcarrier_spacing != self.sampling_rate:
            raise InconsistentNumerologyError(
                "fft_size == sampling_rate / subcarrier_spacing",
                f"{self.sampling_rate} / {self.subcarrier_spacing} != {self.fft_size}")
        per_ms = SUBFRAME_S * self.sampling_rate
        if per_ms.denominator != 1:
            raise InconsistentNumerologyError(
                "sampling_rate * 1 ms is an integer",
                f"{self.sampling_rate} Hz gives {float(per_ms)} samples per ms")
        if self.subframe_samples != per_ms:
            raise InconsistentNumerologyError(
                "slots_per_subframe * slot_samples == sampling_rate * 1 ms",
                f"{self.slots_per_subframe} * {self.slot_samples} = {self.subframe_samples}"
                f" != {int(per_ms)}")


def emb_default_numerology() -> Numerology:
    """245.76 MHz sampling, 480 kHz spacing, 512-point FFT, 14 symbols per slot."""
    return Numerology(
        sampling_rate=8 * LTE_BASE_RATE_HZ,
        subcarrier_spacing=480_000,
        fft_size=512,
        symbols_per_slot=14,
        cp_first=44,
        cp_rest=36,
        slots_per_subframe=32,
        subframes_per_frame=10,
    )


@dataclass(frozen=True)
class SymbolRecord:
    frame: int
    subframe: int
    slot: int
    symbol: int
    start_sample: int  # relative to the start of its frame
    cp_samples: int
    useful_samples: int

    @property
    def end_sample(self) -> int:
        """Last sample index occupied by this symbol (inclusive)."""
        return self.start_sample + self.cp_samples + self.useful_samples - 1


@dataclass
class FrameLayout:
    numerology: Numerology
    symbols: list[SymbolRecord]
    frames: int

    CSV_COLUMNS = ("frame", "subframe", "slot", "symbol", "start_sample", "cp_samples",
                   "useful_samples")

    @property
    def samples_per_slot(self) -> int:
        return self.numerology.slot_samples

    @property
    def samples_per_subframe(self) -> int:
        return self.numerology.subframe_samples

    @property
    def samples_per_frame(self) -> int:
        return self.numerology.frame_samples

    @property
    def total_cp_samples(self) -> int:
        return sum(s.cp_samples for s in self.symbols)

    @property
    def total_samples(self) -> int:
        return self.frames * self.samples_per_frame

    @property
    def cp_overhead(self) -> Fraction:
        return Fraction(self.total_cp_samples, self.total_samples)

    @property
    def frame_duration(self) -> Fraction:
        return self.numerology.seconds(self.samples_per_frame)

    def to_csv(self, fh=None) -> str | None:
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_COLUMNS)
        for s in self.symbols:
            w.writerow([s.frame, s.subframe, s.slot, s.symbol, s.start_sample, s.cp_samples,
                        s.useful_samples])
        return buf.getvalue() if fh is None else None

    def summary(self) -> dict:
        n = self.numerology
        return {
            "schema_version": 1,
            "numerology": n.as_dict(),
            "frames": self.frames,
            "symbols": len(self.symbols),
            "samples_per_slot": self.samples_per_slot,
            "samples_per_subframe": self.samples_per_subframe,
            "samples_per_frame": self.samples_per_frame,
            "cp_samples_per_slot": n.cp_samples_per_slot,
            "cp_overhead": float(self.cp_overhead),
            "cp_overhead_fraction": [self.cp_overhead.numerator, self.cp_overhead.denominator],
            "slot_duration_s": float(n.slot_duration),
            "subframe_duration_s": float(n.seconds(self.samples_per_subframe)),
            "frame_duration_s": float(self.frame_duration),
            "cp_first_s": float(n.seconds(n.cp_first)),
            "cp_rest_s": float(n.seconds(n.cp_rest)),
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2) + "\n"


def build_frame_layout(n: Numerology, frames: int = 1) -> FrameLayout:
    """Expand ``frames`` frames into per-symbol records with exact sample offsets."""
    n.check()
    if frames < 1:
        raise DomainError("need at least one frame")
    records = []
    for fr in range(frames):
        pos = 0
        for sf in range(n.subframes_per_frame):
            for sl in range(n.slots_per_subframe):
                for sym in range(n.symbols_per_slot):
                    cp = n.cp_first if sym == 0 else n.cp_rest
                    records.append(SymbolRecord(fr, sf, sl, sym, pos, cp, n.fft_size))
                    pos += cp + n.fft_size
        assert pos == n.frame_samples
    return FrameLayout(n, records, frames)


def doppler_shift(speed: float, frequency: float, c: float = SPEED_OF_LIGHT) -> float:
    """Maximum Doppler shift in Hz for ``speed`` m/s at ``frequency`` Hz."""
    if speed < 0:
        raise DomainError("speed must be non-negative")
    if not frequency > 0:
        raise DomainError("frequency must be positive")
    return speed * frequency / c


def coherence_time(f_d: float) -> float:
    """Rule-of-thumb coherence time ``1 / f_d`` in seconds."""
    if not f_d > 0:
        raise DomainError("Doppler shift must be positive")
    return 1.0 / f_d


@dataclass(frozen=True)
class ConstraintResult:
    key: str
    description: str
    passed: bool
    value: float
    limit: float
    unit: str = ""

    @property
    def margin(self) -> float:
        """Distance to the limit in the direction that keeps the check passing."""
        return self.limit - self.value


@dataclass
class ValidationReport:
    numerology: Numerology
    constraints: list[ConstraintResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.constraints)

    def __getitem__(self, key: str) -> ConstraintResult:
        for c in self.constraints:
            if c.key == key:
                return c
        raise KeyError(key)

    def as_dict(self) -> dict:
        return {
            "schema_version": 1,
            "passed": self.passed,
            "numerology": self.numerology.as_dict(),
            "constraints": [
                {**asdict(c), "margin": c.margin} for c in self.constraints
            ],
        }


def _spacing_on_grid(spacing: int) -> tuple[bool, int | None]:
    """Is ``spacing`` = 30.72 MHz * 2**k for an integer k?  Returns (ok, k)."""
    ratio = Fraction(spacing, LTE_BASE_RATE_HZ)
    num, den = ratio.numerator, ratio.denominator
    if den == 1 and is_power_of_two(num):
        return True, num.bit_length() - 1
    if num == 1 and is_power_of_two(den):
        return True, -(den.bit_length() - 1)
    return False, None


def validate_numerology(n: Numerology, max_speed: float = kmh_to_ms(DEFAULT_MAX_SPEED_KMH),
                        f_max: float = DEFAULT_F_MAX_HZ, clock_ppm: float = DEFAULT_CLOCK_PPM,
                        max_delay_spread: float = DEFAULT_MAX_DELAY_SPREAD_S,
                        doppler_margin: float = DOPPLER_MARGIN) -> ValidationReport:
    """Check the five numerology design rules; failures are report entries.

    ``max_speed`` in m/s, ``f_max`` in Hz, ``max_delay_spread`` in seconds.
    """
    if max_speed < 0 or not f_max > 0 or clock_ppm < 0 or max_delay_spread < 0:
        raise DomainError("validator inputs must be non-negative (f_max positive)")
    out = []
    out.append(ConstraintResult(
        "fft_power_of_two", "FFT size is a power of two",
        is_power_of_two(n.fft_size), float(n.fft_size), float(n.fft_size)))

    on_grid, k = _spacing_on_grid(n.subcarrier_spacing)
    quotient = Fraction(n.sampling_rate, n.subcarrier_spacing)
    grid_ok = on_grid and quotient.denominator == 1 and is_power_of_two(quotient.numerator)
    out.append(ConstraintResult(
        "spacing_grid",
        f"spacing = 30.72 MHz * 2^k (k={k}) and sampling_rate / spacing is a power of two",
        grid_ok, float(n.subcarrier_spacing),
        LTE_BASE_RATE_HZ * 2.0**k if on_grid else float("nan"), "Hz"))

    fd = doppler_shift(max_speed, f_max)
    doppler_limit = n.subcarrier_spacing / doppler_margin
    out.append(ConstraintResult(
        "doppler", f"Doppler shift below spacing / {doppler_margin:g}",
        fd < doppler_limit, fd, doppler_limit, "Hz"))

    drift = clock_ppm * f_max / 1e6
    drift_limit = CLOCK_DRIFT_SPACINGS * n.subcarrier_spacing
    out.append(ConstraintResult(
        "clock_drift", "clock drift below twice the spacing",
        drift < drift_limit, drift, drift_limit, "Hz"))

    cp_s = n.cp_rest / n.sampling_rate
    # for the CP check the "value" is the delay spread and the limit the CP
    out.append(ConstraintResult(
        "cyclic_prefix", "shortest CP longer than the maximum delay spread",
        cp_s > max_delay_spread, max_delay_spread, cp_s, "s"))
    return ValidationReport(n, out)
