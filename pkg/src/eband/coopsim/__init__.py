"""Coverage simulation of relay-assisted user cooperation in a dense E-band network."""

from eband.coopsim.engine import (
    Classification,
    CoverageResult,
    PilotAssignment,
    RoundRecord,
    ServiceClass,
    UserOutcome,
    bs_user_snr,
    classify_users,
    draw_placement,
    link_snr,
    relay_selection,
    run_round,
    simulate,
)
from eband.coopsim.geometry import Rect, los_blocked, segments_blocked
from eband.coopsim.scenario import (
    SCENARIO_SCHEMA,
    BaseStation,
    Scenario,
    User,
    example_scenario_dict,
    load_scenario,
)

__all__ = [
    "SCENARIO_SCHEMA",
    "BaseStation",
    "Classification",
    "CoverageResult",
    "PilotAssignment",
    "Rect",
    "RoundRecord",
    "Scenario",
    "ServiceClass",
    "User",
    "UserOutcome",
    "bs_user_snr",
    "classify_users",
    "draw_placement",
    "example_scenario_dict",
    "link_snr",
    "load_scenario",
    "los_blocked",
    "relay_selection",
    "run_round",
    "segments_blocked",
    "simulate",
]
