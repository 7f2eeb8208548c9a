import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from eband.airframe import (
    Region,
    aggregate_channels,
    channel_plan,
    parse_index_range,
)
from eband.errors import AggregationError, DomainError, PolicyError

PLANS = {r: channel_plan(r) for r in Region}
EU = PLANS[Region.EUROPE]
US = PLANS[Region.US_CANADA]
UK = PLANS[Region.UK_AUSTRALIA]


def test_europe_counts():
    assert len(EU.channels) == 38
    assert all(c.width_mhz == 250 for c in EU.channels)
    assert EU.total_channel_mhz == 9500
    assert [sum(c.band == b for c in EU.channels) for b in (0, 1)] == [19, 19]
    assert [c.index for c in EU.channels] == list(range(1, 39))


def test_us_segments():
    assert len(US.channels) == 8
    assert all(c.width_mhz == 1250 for c in US.channels)
    assert US.total_channel_mhz == 10_000
    starts = [c.start for c in US.channels]
    assert starts == [71.0, 72.25, 73.5, 74.75, 81.0, 82.25, 83.5, 84.75]
    assert US.max_aggregate is None


def test_guards():
    want = [(71.0, 71.125), (75.875, 76.0), (81.0, 81.125), (85.875, 86.0)]
    assert EU.guard_bands == want
    assert UK.guard_bands == want
    assert UK.channels == ()
    assert all(hi - lo == 125 for lo, hi in EU.guard_bands_mhz)


@pytest.mark.parametrize("region", list(Region))
def test_plan_disjoint_ordered_contained(region):
    plan = PLANS[region]
    ch = plan.channels
    for a, b in zip(ch, ch[1:]):
        assert a.stop_mhz <= b.start_mhz
    for c in ch:
        lo, hi = plan.bands_mhz[c.band]
        assert lo <= c.start_mhz < c.stop_mhz <= hi
        for g_lo, g_hi in plan.guard_bands_mhz:
            assert c.stop_mhz <= g_lo or c.start_mhz >= g_hi
    for a, b in itertools.combinations(plan.guard_bands_mhz, 2):
        assert a[1] <= b[0] or b[1] <= a[0]
    doc = plan.as_dict()
    assert doc["schema_version"] == 1 and doc["duplex_modes"] == ["TDD", "FDD"]


def test_region_aliases():
    assert Region.parse("us") is Region.US_CANADA
    assert Region.parse("UK") is Region.UK_AUSTRALIA
    assert Region.parse("eu") is Region.EUROPE
    with pytest.raises(DomainError):
        Region.parse("mars")


def test_aggregate_lower_band():
    span = aggregate_channels(EU, range(1, 20))
    assert (span.start, span.stop) == (71.125, 75.875)
    assert span.width == pytest.approx(4.75)


def test_aggregate_single():
    c = EU.channel(7)
    span = aggregate_channels(EU, [7])
    assert (span.start_mhz, span.stop_mhz) == (c.start_mhz, c.stop_mhz)


def test_aggregate_errors():
    with pytest.raises(AggregationError):
        aggregate_channels(EU, [1, 3])
    with pytest.raises(PolicyError):
        aggregate_channels(EU, range(1, 21))
    with pytest.raises(AggregationError):
        aggregate_channels(EU, [19, 20])
    with pytest.raises(AggregationError):
        aggregate_channels(EU, [])
    with pytest.raises(AggregationError):
        aggregate_channels(EU, [2, 2])
    with pytest.raises(AggregationError):
        aggregate_channels(EU, [39])
    with pytest.raises(AggregationError):
        aggregate_channels(UK, [1])


def test_us_unlimited_within_band():
    assert aggregate_channels(US, [1, 2, 3, 4]).width == 5.0
    with pytest.raises(AggregationError):
        aggregate_channels(US, [4, 5])


@given(st.integers(1, 38), st.integers(0, 18))
def test_contiguous_runs_merge(start, extra):
    idx = list(range(start, start + extra + 1))
    same_band = all(EU.channel(i).band == EU.channel(start).band for i in idx if i <= 38)
    if idx[-1] > 38 or not same_band:
        with pytest.raises(AggregationError):
            aggregate_channels(EU, idx)
        return
    span = aggregate_channels(EU, idx)
    assert span.stop_mhz - span.start_mhz == 250 * len(idx)


def test_parse_index_range():
    assert parse_index_range("3..6") == [3, 4, 5, 6]
    assert parse_index_range("1,3") == [1, 3]
    assert parse_index_range("5") == [5]
    for bad in ("a..b", "6..3", "x"):
        with pytest.raises(DomainError):
            parse_index_range(bad)
