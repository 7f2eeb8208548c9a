"""Scenario description for the coverage simulator and its JSON form."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from eband.coopsim.geometry import Rect
from eband.errors import ConfigurationError, SchemaError
from eband.propagation import (
    NLOS_D0_M,
    NLOS_SHADOW_SIGMA_DB,
    WeatherState,
    check_tx_power,
)
from eband.quantities import GHZ

DEFAULT_USER_TX_DBM = 23.0
SCHEMA_VERSION = 1

_num = {"type": "number"}
_rect = {"type": "array", "items": _num, "minItems": 4, "maxItems": 4}

SCENARIO_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "additionalProperties": False,
    "required": ["area", "base_stations", "users", "carrier_ghz", "ds_threshold_db",
                 "noise_dbm", "seed"],
    "properties": {
        "schema_version": {"type": "integer"},
        "area": _rect,
        "base_stations": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["x", "y"],
                "properties": {"x": _num, "y": _num, "gain_dbi": _num, "tx_power_dbm": _num},
            },
        },
        "users": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["x", "y"],
                "properties": {"x": _num, "y": _num, "gain_dbi": _num,
                               "vacant": {"type": "boolean"}, "traffic": {"type": "boolean"}},
            },
        },
        "obstacles": {"type": "array", "items": _rect},
        "carrier_ghz": {"type": "number", "exclusiveMinimum": 0},
        "ds_threshold_db": _num,
        "noise_dbm": _num,
        "weather": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rain_mmh": {"type": "number", "minimum": 0},
                "fog_gm3": {"type": "number", "minimum": 0},
                "foliage_m": {"type": "number", "minimum": 0},
            },
        },
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "user_tx_power_dbm": _num,
        "relay_capacity": {"type": ["integer", "null"], "minimum": 1},
        "nlos_d0_m": {"type": "number", "exclusiveMinimum": 0},
        "shadowing": {"type": "boolean"},
        "shadow_sigma_db": {"type": "number", "minimum": 0},
    },
}


@dataclass(frozen=True)
class BaseStation:
    x: float
    y: float
    gain_dbi: float = 25.0
    tx_power_dbm: float = 30.0


@dataclass(frozen=True)
class User:
    x: float
    y: float
    gain_dbi: float = 10.0
    vacant: bool = True
    traffic: bool = False


@dataclass(frozen=True)
class Scenario:
    area: Rect
    base_stations: tuple[BaseStation, ...]
    users: tuple[User, ...]
    carrier: float  # Hz
    ds_threshold: float  # dB
    noise_power: float  # dBm
    seed: int
    obstacles: tuple[Rect, ...] = ()
    weather: WeatherState = field(default_factory=WeatherState)
    user_tx_power_dbm: float = DEFAULT_USER_TX_DBM
    relay_capacity: int | None = 1  # IS users per relay per round; None = unlimited
    nlos_d0: float = NLOS_D0_M
    shadowing: bool = True
    shadow_sigma_db: float = NLOS_SHADOW_SIGMA_DB

    def __post_init__(self):
        object.__setattr__(self, "base_stations", tuple(self.base_stations))
        object.__setattr__(self, "users", tuple(self.users))
        object.__setattr__(self, "obstacles", tuple(self.obstacles))

    def validate(self) -> None:
        """Raise :class:`ConfigurationError` if an invariant is broken."""
        if not self.base_stations:
            raise ConfigurationError("scenario needs at least one base station")
        if not math.isfinite(self.ds_threshold):
            raise ConfigurationError("ds_threshold must be finite")
        if not (isinstance(self.seed, (int, np.integer)) and 0 <= self.seed < 2**64):
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        if self.relay_capacity is not None and self.relay_capacity < 1:
            raise ConfigurationError("relay_capacity must be >= 1 or None")
        for kind, nodes in (("base station", self.base_stations), ("user", self.users)):
            for i, n in enumerate(nodes):
                if not self.area.contains(n.x, n.y):
                    raise ConfigurationError(f"{kind} {i} at ({n.x}, {n.y}) lies outside the area")
        for i, u in enumerate(self.users):
            if u.vacant and u.traffic:
                raise ConfigurationError(f"user {i} is flagged both vacant and with traffic")
        for bs in self.base_stations:
            check_tx_power(bs.tx_power_dbm)
        check_tx_power(self.user_tx_power_dbm)

    def with_base_station(self, bs: BaseStation) -> Scenario:
        """Copy with ``bs`` appended (existing ids unchanged)."""
        return replace(self, base_stations=self.base_stations + (bs,))

    def with_user_positions(self, xy: np.ndarray) -> Scenario:
        xy = np.asarray(xy, dtype=float)
        users = tuple(replace(u, x=float(x), y=float(y)) for u, (x, y) in zip(self.users, xy))
        return replace(self, users=users)

    @classmethod
    def from_dict(cls, doc: dict) -> Scenario:
        validator = jsonschema.Draft7Validator(SCENARIO_SCHEMA)
        problems = sorted(
            (("/".join(str(p) for p in err.absolute_path), err.message)
             for err in validator.iter_errors(doc)),
        )
        if problems:
            raise SchemaError(problems)
        try:
            area = Rect.from_seq(doc["area"])
            obstacles = tuple(Rect.from_seq(o) for o in doc.get("obstacles", ()))
        except ValueError as exc:
            raise SchemaError([("area/obstacles", str(exc))]) from None
        users = []
        for u in doc["users"]:
            traffic = bool(u.get("traffic", False))
            users.append(User(u["x"], u["y"], u.get("gain_dbi", User.gain_dbi),
                              bool(u.get("vacant", not traffic)), traffic))
        w = doc.get("weather", {})
        s = cls(
            area=area,
            base_stations=tuple(
                BaseStation(b["x"], b["y"], b.get("gain_dbi", BaseStation.gain_dbi),
                            b.get("tx_power_dbm", BaseStation.tx_power_dbm))
                for b in doc["base_stations"]),
            users=tuple(users),
            carrier=doc["carrier_ghz"] * GHZ,
            ds_threshold=doc["ds_threshold_db"],
            noise_power=doc["noise_dbm"],
            seed=doc["seed"],
            obstacles=obstacles,
            weather=WeatherState(w.get("rain_mmh", 0.0), w.get("fog_gm3", 0.0),
                                 w.get("foliage_m", 0.0)),
            user_tx_power_dbm=doc.get("user_tx_power_dbm", DEFAULT_USER_TX_DBM),
            relay_capacity=doc.get("relay_capacity", 1),
            nlos_d0=doc.get("nlos_d0_m", NLOS_D0_M),
            shadowing=doc.get("shadowing", True),
            shadow_sigma_db=doc.get("shadow_sigma_db", NLOS_SHADOW_SIGMA_DB),
        )
        s.validate()
        return s

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "area": self.area.as_list(),
            "base_stations": [
                {"x": b.x, "y": b.y, "gain_dbi": b.gain_dbi, "tx_power_dbm": b.tx_power_dbm}
                for b in self.base_stations],
            "users": [
                {"x": u.x, "y": u.y, "gain_dbi": u.gain_dbi, "vacant": u.vacant,
                 "traffic": u.traffic}
                for u in self.users],
            "obstacles": [o.as_list() for o in self.obstacles],
            "carrier_ghz": self.carrier / GHZ,
            "ds_threshold_db": self.ds_threshold,
            "noise_dbm": self.noise_power,
            "weather": {"rain_mmh": self.weather.rain_rate, "fog_gm3": self.weather.fog_density,
                        "foliage_m": self.weather.foliage_depth},
            "seed": int(self.seed),
            "user_tx_power_dbm": self.user_tx_power_dbm,
            "relay_capacity": self.relay_capacity,
            "nlos_d0_m": self.nlos_d0,
            "shadowing": self.shadowing,
            "shadow_sigma_db": self.shadow_sigma_db,
        }


def load_scenario(path: str | Path) -> Scenario:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError([("", f"not valid JSON: {exc}")]) from None
    return Scenario.from_dict(doc)


def example_scenario_dict() -> dict:
    """The bundled example scenario as a plain dict."""
    text = resources.files("eband").joinpath("data/example_scenario.json").read_text()
    return json.loads(text)
