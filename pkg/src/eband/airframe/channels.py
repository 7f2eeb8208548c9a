"""Regional E-band channel plans and channel aggregation.

Band edges are held in integer MHz so that containment and width sums are
exact; the public accessors report GHz.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from eband.errors import AggregationError, DomainError, PolicyError

BANDS_MHZ = ((71_000, 76_000), (81_000, 86_000))
US_SEGMENT_MHZ = 1_250
GUARD_MHZ = 125
EU_CHANNEL_MHZ = 250
EU_MAX_AGGREGATE = 19


class Region(str, Enum):
    US_CANADA = "US_CANADA"
    UK_AUSTRALIA = "UK_AUSTRALIA"
    EUROPE = "EUROPE"

    @classmethod
    def parse(cls, text: str) -> Region:
        aliases = {"us": cls.US_CANADA, "uk": cls.UK_AUSTRALIA, "eu": cls.EUROPE,
                   "ca": cls.US_CANADA, "au": cls.UK_AUSTRALIA}
        key = text.strip()
        if key.lower() in aliases:
            return aliases[key.lower()]
        try:
            return cls[key.upper()]
        except KeyError:
            raise DomainError(f"unknown region {text!r}") from None


@dataclass(frozen=True)
class Channel:
    index: int  # 1-based, counted across both bands
    band: int  # 0 = 71-76 GHz, 1 = 81-86 GHz
    start_mhz: int
    stop_mhz: int

    @property
    def width_mhz(self) -> int:
        return self.stop_mhz - self.start_mhz

    @property
    def start(self) -> float:
        return self.start_mhz / 1000

    @property
    def stop(self) -> float:
        return self.stop_mhz / 1000

    @property
    def width(self) -> float:
        return self.width_mhz / 1000


@dataclass(frozen=True)
class ChannelPlan:
    region: Region
    bands_mhz: tuple[tuple[int, int], ...]
    channels: tuple[Channel, ...]
    guard_bands_mhz: tuple[tuple[int, int], ...]
    duplex_modes: tuple[str, ...] = ("TDD", "FDD")
    max_aggregate: int | None = None  # None = unlimited

    @property
    def bands(self) -> list[tuple[float, float]]:
        return [(a / 1000, b / 1000) for a, b in self.bands_mhz]

    @property
    def guard_bands(self) -> list[tuple[float, float]]:
        return [(a / 1000, b / 1000) for a, b in self.guard_bands_mhz]

    @property
    def total_channel_mhz(self) -> int:
        return sum(c.width_mhz for c in self.channels)

    def channel(self, index: int) -> Channel:
        for c in self.channels:
            if c.index == index:
                return c
        raise AggregationError(f"{self.region.value} plan has no channel {index}")

    def as_dict(self) -> dict:
        return {
            "schema_version": 1,
            "region": self.region.value,
            "bands_ghz": self.bands,
            "guard_bands_ghz": self.guard_bands,
            "duplex_modes": list(self.duplex_modes),
            "max_aggregate": self.max_aggregate,
            "channels": [
                {"index": c.index, "band": c.band, "start_ghz": c.start, "stop_ghz": c.stop,
                 "width_ghz": c.width}
                for c in self.channels
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2) + "\n"


def _guards() -> tuple[tuple[int, int], ...]:
    out = []
    for lo, hi in BANDS_MHZ:
        out += [(lo, lo + GUARD_MHZ), (hi - GUARD_MHZ, hi)]
    return tuple(out)


def _tile(width: int, guard: int) -> tuple[Channel, ...]:
    chans, idx = [], 1
    for band, (lo, hi) in enumerate(BANDS_MHZ):
        start = lo + guard
        while start + width <= hi - guard:
            chans.append(Channel(idx, band, start, start + width))
            idx += 1
            start += width
    return tuple(chans)


def channel_plan(region: Region | str) -> ChannelPlan:
    """Channel plan for one regulatory region.

    US/Canada: four 1.25 GHz segments per 5 GHz band, unlimited aggregation.
    UK/Australia: 125 MHz guards at each band edge and no channel raster.
    Europe: the same guards plus nineteen 250 MHz channels per band.
    """
    region = Region.parse(region) if isinstance(region, str) else region
    if region is Region.US_CANADA:
        return ChannelPlan(region, BANDS_MHZ, _tile(US_SEGMENT_MHZ, 0), ())
    if region is Region.UK_AUSTRALIA:
        return ChannelPlan(region, BANDS_MHZ, (), _guards())
    return ChannelPlan(region, BANDS_MHZ, _tile(EU_CHANNEL_MHZ, GUARD_MHZ), _guards(),
                       max_aggregate=EU_MAX_AGGREGATE)


@dataclass(frozen=True)
class AggregatedSpan:
    indices: tuple[int, ...]
    start_mhz: int
    stop_mhz: int

    @property
    def start(self) -> float:
        return self.start_mhz / 1000

    @property
    def stop(self) -> float:
        return self.stop_mhz / 1000

    @property
    def width(self) -> float:
        return (self.stop_mhz - self.start_mhz) / 1000

    def as_dict(self) -> dict:
        return {"indices": list(self.indices), "start_ghz": self.start, "stop_ghz": self.stop,
                "width_ghz": self.width}


def aggregate_channels(plan: ChannelPlan, indices) -> AggregatedSpan:
    """Merge adjacent channels of one band into a single span.

    Raises :class:`PolicyError` when the plan's aggregation limit is
    exceeded and :class:`AggregationError` for unknown, repeated,
    non-adjacent or cross-band selections.
    """
    idx = sorted(int(i) for i in indices)
    if not idx:
        raise AggregationError("no channels selected")
    if len(set(idx)) != len(idx):
        raise AggregationError("channel selected more than once")
    if plan.max_aggregate is not None and len(idx) > plan.max_aggregate:
        raise PolicyError(f"{plan.region.value} allows at most {plan.max_aggregate} "
                          f"aggregated channels, got {len(idx)}")
    chans = [plan.channel(i) for i in idx]
    if len({c.band for c in chans}) > 1:
        raise AggregationError("channels span both 5 GHz bands")
    for a, b in zip(chans, chans[1:]):
        if a.stop_mhz != b.start_mhz:
            raise AggregationError(f"channels {a.index} and {b.index} are not contiguous")
    return AggregatedSpan(tuple(idx), chans[0].start_mhz, chans[-1].stop_mhz)


def parse_index_range(text: str) -> list[int]:
    """'3..7' -> [3, 4, 5, 6, 7]; '1,3' -> [1, 3]; '5' -> [5]."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise DomainError(f"empty range {text!r}")
            return list(range(lo, hi + 1))
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise DomainError(f"cannot parse channel selection {text!r}") from None
