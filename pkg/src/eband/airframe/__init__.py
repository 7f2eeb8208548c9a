"""EMB air interface: OFDM numerology, frame layout and channel plans."""

from eband.airframe.channels import (
    AggregatedSpan,
    Channel,
    ChannelPlan,
    Region,
    aggregate_channels,
    channel_plan,
    parse_index_range,
)
from eband.airframe.numerology import (
    ConstraintResult,
    FrameLayout,
    Numerology,
    SymbolRecord,
    ValidationReport,
    build_frame_layout,
    coherence_time,
    doppler_shift,
    emb_default_numerology,
    validate_numerology,
)

__all__ = [
    "AggregatedSpan",
    "Channel",
    "ChannelPlan",
    "ConstraintResult",
    "FrameLayout",
    "Numerology",
    "Region",
    "SymbolRecord",
    "ValidationReport",
    "aggregate_channels",
    "build_frame_layout",
    "channel_plan",
    "coherence_time",
    "doppler_shift",
    "emb_default_numerology",
    "parse_index_range",
    "validate_numerology",
]
