import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eband.coopsim import (
    SCENARIO_SCHEMA,
    BaseStation,
    PilotAssignment,
    Rect,
    Scenario,
    ServiceClass,
    User,
    classify_users,
    draw_placement,
    example_scenario_dict,
    link_snr,
    relay_selection,
    run_round,
    simulate,
)
from eband.errors import ConfigurationError, DomainError, PolicyError, SchemaError
from eband.propagation import (
    AntennaGains,
    WeatherState,
    free_space_path_loss_db,
    link_budget,
    nlos_path_loss,
)
from eband.quantities import SPEED_OF_LIGHT
from oracles import brute_round, direct, hand_snr, outcome_tuple, random_scenario

F = 73.5e9
AREA = Rect(0, 0, 400, 400)


def scen(bs, users, obstacles=(), **kw):
    base = dict(area=AREA, base_stations=bs, users=users, carrier=F, ds_threshold=10.0,
                noise_power=-83.0, seed=42, obstacles=obstacles)
    base.update(kw)
    return Scenario(**base)


def wall_scenario(shadowing=False):
    """BS at left, user 0 behind a wall, user 1 beside it with a clear view of both."""
    bs = [BaseStation(20, 200, gain_dbi=25, tx_power_dbm=30)]
    users = [User(300, 200, gain_dbi=10), User(300, 260, gain_dbi=10)]
    wall = Rect(150, 100, 160, 220)
    return scen(bs, users, [wall], shadowing=shadowing, ds_threshold=20.0)


# links --------------------------------------------------------------------

def test_unblocked_link_equals_link_budget_exactly():
    s = scen([BaseStation(10, 20, 25, 30)], [User(130, 70, 10)],
             weather=WeatherState(25.0, 0.05, 0.0))
    d = math.hypot(120, 50)
    rep = link_budget(30.0, AntennaGains.from_dbi(25, 10), F, d, s.weather, noise_power=-83.0)
    assert link_snr(("bs", 0), ("user", 0), s) == rep.snr
    assert rep.snr == pytest.approx(hand_snr(30, 25, 10, F, d, -83.0, rain=25, fog=0.05),
                                    abs=1e-9)


def test_blocked_link_uses_nlos_difference():
    s = wall_scenario()
    d = 280.0
    lam = SPEED_OF_LIGHT / F
    los = hand_snr(30, 25, 10, F, d, -83.0)
    gap = nlos_path_loss(d, lam) - free_space_path_loss_db(lam, d)
    assert link_snr(("bs", 0), ("user", 0), s) == pytest.approx(los - gap, abs=1e-9)


def test_link_symmetry_and_shadow_keying():
    s = wall_scenario(shadowing=True)
    a = link_snr(("user", 0), ("user", 1), s)
    assert a == link_snr(("user", 1), ("user", 0), s)
    assert link_snr(("bs", 0), ("user", 0), s) == link_snr(("user", 0), ("bs", 0), s)
    # shadowing only perturbs blocked links
    assert link_snr(("bs", 0), ("user", 1), s) == link_snr(
        ("bs", 0), ("user", 1), wall_scenario(False))
    assert link_snr(("bs", 0), ("user", 0), s) != link_snr(
        ("bs", 0), ("user", 0), wall_scenario(False))


def test_link_endpoint_errors():
    s = wall_scenario()
    with pytest.raises(DomainError):
        link_snr(("user", 0), ("user", 0), s)
    with pytest.raises(DomainError):
        link_snr(("bs", 0), ("bs", 0), s)
    with pytest.raises(DomainError):
        link_snr(("ue", 0), ("user", 1), s)
    with pytest.raises(DomainError):
        link_snr(("bs", 3), ("user", 1), s)


def test_co_located_nodes_stay_finite():
    s = scen([BaseStation(50, 50)], [User(50, 50), User(50.2, 50)])
    assert math.isfinite(link_snr(("bs", 0), ("user", 0), s))
    assert math.isfinite(link_snr(("user", 0), ("user", 1), s))


# classification -----------------------------------------------------------

def test_thresholds_at_infinity():
    s = wall_scenario()
    assert classify_users(s, -math.inf).is_ds.all()
    assert not classify_users(s, math.inf).is_ds.any()


def test_user_behind_wall_is_indirect():
    s = wall_scenario()
    snr = link_snr(("bs", 0), ("user", 0), s)
    assert snr < s.ds_threshold
    c = classify_users(s)
    assert c.is_users == [0] and c.ds_users == [1]


def test_ties_go_to_lowest_bs():
    s = scen([BaseStation(100, 200), BaseStation(300, 200)], [User(200, 200)])
    c = classify_users(s)
    assert c.snr[0, 0] == c.snr[0, 1]
    assert c.serving_bs[0] == 0


# relay selection ----------------------------------------------------------

def test_constructed_relay_scenario():
    s = wall_scenario()
    r = run_round(s)
    assert r.fractions == {"ds": 0.5, "is_served": 0.5, "unserved": 0.0}
    o = r.outcomes[0]
    assert o.cls is ServiceClass.IS_SERVED and o.relay == 1 and o.serving_bs == 0
    hop = hand_snr(23, 10, 10, F, 60.0, -83.0)
    relay_direct = hand_snr(30, 25, 10, F, math.hypot(280, 60), -83.0)
    assert o.bottleneck_snr == pytest.approx(min(hop, relay_direct), abs=1e-9)
    assert r.rounds[0].relay_links == [(0, 1, 0)]


def test_no_vacant_users_means_no_relay():
    s = wall_scenario()
    s = scen(s.base_stations, [s.users[0], User(300, 260, vacant=False, traffic=True)],
             s.obstacles, ds_threshold=20.0, shadowing=False)
    assert relay_selection(0, [], s) is None
    assert run_round(s).outcomes[0].cls is ServiceClass.IS_UNSERVED


def test_relay_candidates_must_be_ds():
    s = wall_scenario()
    with pytest.raises(DomainError):
        relay_selection(1, [1], s)
    with pytest.raises(DomainError):
        relay_selection(1, [0], s)


@pytest.mark.parametrize("seed", range(40))
def test_relay_selection_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    s = random_scenario(rng)
    cls = classify_users(s)
    vacant = [j for j in cls.ds_users if s.users[j].vacant]
    directs = [direct(s, j) for j in range(len(s.users))]
    for j in cls.is_users:
        got = relay_selection(j, vacant, s, classification=cls)
        best = None
        cands = [(min(link_snr(("user", j), ("user", r), s), directs[r][0]), -r) for r in vacant]
        if cands:
            b, neg_r = max(cands)
            if b >= s.ds_threshold:
                best = (-neg_r, b)
        assert got == best


@pytest.mark.parametrize("seed", range(40))
def test_round_matches_brute_force(seed):
    rng = np.random.default_rng(1000 + seed)
    s = random_scenario(rng, capacity=None if seed % 3 == 0 else 1)
    r = run_round(s)
    want, directs = brute_round(s)
    assert [outcome_tuple(o) for o in r.outcomes] == want
    assert [o.direct_snr for o in r.outcomes] == [d[0] for d in directs]


def test_relay_capacity_first_come():
    bs = [BaseStation(20, 200)]
    users = [User(300, 200), User(300, 230), User(300, 260)]
    s = scen(bs, users, [Rect(150, 100, 160, 220)], ds_threshold=20.0, shadowing=False)
    r = run_round(s)
    cls = [o.cls for o in r.outcomes]
    assert cls == [ServiceClass.IS_SERVED, ServiceClass.IS_UNSERVED, ServiceClass.DS]
    assert r.outcomes[1].bottleneck_snr is None
    r2 = run_round(Scenario(**{**s.__dict__, "relay_capacity": None}))
    assert [o.relay for o in r2.outcomes] == [2, 2, None]


# round bookkeeping --------------------------------------------------------

def test_dense_grid_without_obstacles_all_ds():
    bs = [BaseStation(x, y) for x in (100, 300) for y in (100, 300)]
    rng = np.random.default_rng(3)
    users = [User(*rng.uniform(0, 400, 2)) for _ in range(30)]
    assert run_round(scen(bs, users)).ds == 1.0


def test_pilots_and_channels():
    s = wall_scenario()
    s = scen(s.base_stations, [s.users[0], User(300, 260), User(30, 30, vacant=False,
                                                                     traffic=True)],
             s.obstacles, ds_threshold=20.0, shadowing=False)
    rec = run_round(s).rounds[0]
    assert rec.pilots.level1 == {0: 0}
    assert rec.pilots.level2 == {1: 1}
    assert rec.traffic_channels == {0: 1}
    assert rec.ds_registrations == {0: [1, 2]}
    with pytest.raises(ConfigurationError):
        PilotAssignment({0: 0}, {3: 0})


def test_is_user_traffic_goes_to_relay_bs():
    s = wall_scenario()
    s = scen(s.base_stations, [User(300, 200, vacant=False, traffic=True), s.users[1]],
             s.obstacles, ds_threshold=20.0, shadowing=False)
    assert run_round(s).rounds[0].traffic_channels == {0: 1}


def test_same_seed_bit_identical():
    s = Scenario.from_dict(example_scenario_dict())
    a, b = simulate(s, 3), simulate(s, 3)
    assert a.to_json() == b.to_json() and a.to_csv() == b.to_csv()


def test_drop_order_independent():
    s = Scenario.from_dict(example_scenario_dict())
    agg = simulate(s, 4)
    for k in (3, 1, 0, 2):
        r = run_round(draw_placement(s, k), drop=k)
        assert r.outcomes == [o for o in agg.outcomes if o.drop == k]


def test_single_drop_is_run_round():
    s = Scenario.from_dict(example_scenario_dict())
    a = simulate(s, 1)
    b = run_round(draw_placement(s, 0))
    assert a.outcomes == b.outcomes and a.fractions == b.fractions


def test_fractions_partition_and_stderr():
    s = Scenario.from_dict(example_scenario_dict())
    r = simulate(s, 6)
    assert sum(r.fractions.values()) == pytest.approx(1.0, abs=1e-12)
    for f in r.per_drop_fractions():
        assert sum(f.values()) == pytest.approx(1.0, abs=1e-12)
    per = np.array([f["ds"] for f in r.per_drop_fractions()])
    assert r.stderr["ds"] == pytest.approx(per.std(ddof=1) / math.sqrt(6))


def test_drops_must_be_positive():
    s = wall_scenario()
    with pytest.raises(DomainError):
        simulate(s, 0)


def test_placement_depends_on_seed_and_drop():
    s = wall_scenario()
    a, b = draw_placement(s, 0), draw_placement(s, 1)
    assert a.users != b.users
    assert draw_placement(s, 0) == a
    assert all(AREA.contains(u.x, u.y) for u in a.users)


def test_bs_addition_monotone():
    rng = np.random.default_rng(77)
    for _ in range(10):
        s = random_scenario(rng, n_users=(10, 20))
        s2 = s.with_base_station(BaseStation(*rng.uniform(0, 300, 2)))
        a, b = classify_users(s), classify_users(s2)
        np.testing.assert_array_equal(b.snr[:, :-1], a.snr)
        assert np.all(b.is_ds >= a.is_ds)


def test_outputs_format():
    r = run_round(wall_scenario())
    doc = json.loads(r.to_json())
    assert doc["schema_version"] == 1 and doc["seed"] == 42
    lines = r.to_csv().strip().split("\n")
    assert lines[0] == "drop,user_id,class,serving_bs,relay,direct_snr_db,bottleneck_snr_db"
    assert lines[1].startswith("0,0,IS_served,0,1,")
    assert lines[2].split(",")[4:5] == [""]


# scenario validation ------------------------------------------------------

def test_scenario_round_trip():
    s = Scenario.from_dict(example_scenario_dict())
    assert Scenario.from_dict(s.to_dict()) == s


def test_schema_errors_list_fields():
    doc = example_scenario_dict()
    doc["carrier_ghz"] = "fast"
    doc["bogus"] = 1
    del doc["seed"]
    with pytest.raises(SchemaError) as info:
        Scenario.from_dict(doc)
    paths = [p for p, _ in info.value.problems]
    assert "carrier_ghz" in paths
    assert len(info.value.problems) == 3


def test_invariant_violations():
    with pytest.raises(ConfigurationError):
        scen([], [User(1, 1)]).validate()
    with pytest.raises(ConfigurationError):
        scen([BaseStation(1, 1)], [User(500, 1)]).validate()
    with pytest.raises(ConfigurationError):
        scen([BaseStation(1, 1)], [User(1, 1, vacant=True, traffic=True)]).validate()
    with pytest.raises(ConfigurationError):
        scen([BaseStation(1, 1)], [User(1, 1)], ds_threshold=math.nan).validate()
    with pytest.raises(PolicyError):
        scen([BaseStation(1, 1, tx_power_dbm=40)], [User(1, 1)]).validate()
    with pytest.raises(ConfigurationError):
        run_round(scen([BaseStation(1, 1)], []))


def test_schema_is_closed():
    assert SCENARIO_SCHEMA["additionalProperties"] is False
    for key in ("area", "base_stations", "users", "obstacles", "carrier_ghz",
                "ds_threshold_db", "noise_dbm", "weather", "seed"):
        assert key in SCENARIO_SCHEMA["properties"]


@given(st.integers(0, 2**32), st.integers(0, 5))
def test_round_consistency_property(seed, drop):
    s = random_scenario(np.random.default_rng(seed), n_users=(2, 6))
    r = run_round(s, drop)
    thr = s.ds_threshold
    for o in r.outcomes:
        if o.cls is ServiceClass.DS:
            assert o.direct_snr >= thr and o.serving_bs is not None
        elif o.cls is ServiceClass.IS_SERVED:
            assert o.bottleneck_snr >= thr and o.relay is not None
        else:
            assert o.direct_snr < thr
            assert o.bottleneck_snr is None or o.bottleneck_snr < thr
    assert sum(r.fractions.values()) == pytest.approx(1.0, abs=1e-12)
