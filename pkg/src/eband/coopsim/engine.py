"""Round-based coverage simulation of BS-assisted user cooperation.

One round (a static snapshot) runs these phases:

1. every BS broadcasts a level-1 pilot; users measure the link SNR to each BS;
2. users whose best BS clears the threshold become directly served (DS) and
   register with that BS (ties go to the lowest BS id);
3. vacant DS users broadcast a level-2 pilot, offering to relay;
4. indirectly served (IS) users, in ascending id order, pick the free vacant
   DS user with the best two-hop quality ``min(SNR(IS, relay), SNR(relay,
   BS))``; if that clears the threshold the relay registers them with its BS;
5. BSs count the traffic channels they must assign.

Link SNRs are deterministic: blocked links use the NLoS model with a
log-normal shadowing draw keyed on the unordered node pair, the scenario
seed and the drop index.  Adding a node never changes an existing draw.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from eband.coopsim.geometry import segments_blocked
from eband.coopsim.scenario import SCHEMA_VERSION, Scenario
from eband.errors import ConfigurationError, DomainError
from eband.keyed_rng import keyed_hash
from eband.propagation import AntennaGains, link_shadowing, path_gain_db

#: links shorter than this are evaluated at this range (co-located nodes)
MIN_LINK_DISTANCE_M = 1.0

_SHADOW_STREAM = 0x5AD0
_PLACEMENT_STREAM = 0x91AC


class ServiceClass(str, Enum):
    DS = "DS"
    IS_SERVED = "IS_served"
    IS_UNSERVED = "IS_unserved"


def bs_code(i):
    return 2 * np.asarray(i, dtype=np.int64)


def user_code(j):
    return 2 * np.asarray(j, dtype=np.int64) + 1


def shadow_seed(seed: int, drop: int) -> int:
    return int(keyed_hash(seed, _SHADOW_STREAM, drop))


@dataclass(frozen=True)
class _Nodes:
    xy: np.ndarray
    gain: np.ndarray  # linear
    tx_dbm: np.ndarray
    codes: np.ndarray


def _bs_nodes(s: Scenario, idx=None) -> _Nodes:
    idx = np.arange(len(s.base_stations)) if idx is None else np.asarray(idx, dtype=int)
    bs = [s.base_stations[i] for i in idx]
    return _Nodes(
        np.array([[b.x, b.y] for b in bs], dtype=float).reshape(-1, 2),
        np.power(10.0, np.array([b.gain_dbi for b in bs], dtype=float) / 10.0),
        np.array([b.tx_power_dbm for b in bs], dtype=float),
        bs_code(idx),
    )


def _user_nodes(s: Scenario, idx=None) -> _Nodes:
    idx = np.arange(len(s.users)) if idx is None else np.asarray(idx, dtype=int)
    us = [s.users[j] for j in idx]
    return _Nodes(
        np.array([[u.x, u.y] for u in us], dtype=float).reshape(-1, 2),
        np.power(10.0, np.array([u.gain_dbi for u in us], dtype=float) / 10.0),
        np.full(len(us), s.user_tx_power_dbm, dtype=float),
        user_code(idx),
    )


@dataclass
class LinkMatrix:
    snr: np.ndarray  # dB, (na, nb)
    blocked: np.ndarray
    distance: np.ndarray


def _link_matrix(s: Scenario, a: _Nodes, b: _Nodes, drop: int) -> LinkMatrix:
    """SNR from every node of ``a`` (transmitting) to every node of ``b``."""
    pa = a.xy[:, None, :]
    pb = b.xy[None, :, :]
    ca = a.codes[:, None]
    cb = b.codes[None, :]
    dist = np.maximum(np.hypot(pb[..., 0] - pa[..., 0], pb[..., 1] - pa[..., 1]),
                      MIN_LINK_DISTANCE_M)
    # orient every segment from the lower node code so the test is symmetric
    first = (ca < cb)[..., None]
    p = np.where(first, pa, pb)
    q = np.where(first, pb, pa)
    blocked = segments_blocked(p, q, s.obstacles)
    if s.shadowing and blocked.any():
        shadow = np.where(blocked, link_shadowing(shadow_seed(s.seed, drop), ca, cb,
                                                  s.shadow_sigma_db), 0.0)
    else:
        shadow = np.zeros_like(dist)
    gains = AntennaGains(a.gain[:, None], b.gain[None, :])
    *_, total = path_gain_db(gains, s.carrier, dist, s.weather, ~blocked, shadow,
                             d0=s.nlos_d0, clamp_to_d0=True)
    snr = (a.tx_dbm[:, None] + total) - s.noise_power
    return LinkMatrix(np.asarray(snr, dtype=float).reshape(dist.shape), blocked, dist)


def _node(s: Scenario, ref) -> tuple[str, int]:
    kind, idx = ref
    if kind not in ("bs", "user"):
        raise DomainError(f"node kind must be 'bs' or 'user', got {kind!r}")
    pool = s.base_stations if kind == "bs" else s.users
    if not 0 <= idx < len(pool):
        raise DomainError(f"no {kind} with id {idx}")
    return kind, int(idx)


def link_snr(a, b, s: Scenario, drop: int = 0) -> float:
    """SNR in dB of the link between nodes ``a`` and ``b``.

    Nodes are ``("bs", i)`` or ``("user", j)``.  A BS-user link is evaluated
    with the BS transmitting; user-user links use the common user power, so
    the result is symmetric in its endpoints.
    """
    a, b = _node(s, a), _node(s, b)
    if a == b:
        raise DomainError("link endpoints must differ")
    if a[0] == "user" and b[0] == "bs":
        a, b = b, a
    if a[0] == "bs" and b[0] == "bs":
        raise DomainError("BS-BS links are not modelled")
    na = _bs_nodes(s, [a[1]]) if a[0] == "bs" else _user_nodes(s, [a[1]])
    nb = _user_nodes(s, [b[1]])
    return float(_link_matrix(s, na, nb, drop).snr[0, 0])


def bs_user_snr(s: Scenario, drop: int = 0) -> np.ndarray:
    """SNR matrix of shape (users, BSs)."""
    return _link_matrix(s, _bs_nodes(s), _user_nodes(s), drop).snr.T


@dataclass
class Classification:
    snr: np.ndarray  # (users, BSs)
    best_snr: np.ndarray
    serving_bs: np.ndarray  # argmax, lowest id on ties
    is_ds: np.ndarray
    threshold: float

    @property
    def ds_users(self) -> list[int]:
        return [int(j) for j in np.flatnonzero(self.is_ds)]

    @property
    def is_users(self) -> list[int]:
        return [int(j) for j in np.flatnonzero(~self.is_ds)]


def classify_users(s: Scenario, threshold: float | None = None, drop: int = 0) -> Classification:
    """Split users into DS (best BS link >= threshold) and IS.

    ``threshold`` overrides the scenario's and may be infinite.
    """
    thr = s.ds_threshold if threshold is None else float(threshold)
    n_users = len(s.users)
    if n_users == 0:
        empty = np.zeros(0)
        return Classification(np.zeros((0, len(s.base_stations))), empty,
                              np.zeros(0, dtype=int), np.zeros(0, dtype=bool), thr)
    snr = bs_user_snr(s, drop)
    serving = np.argmax(snr, axis=1)
    best = snr[np.arange(n_users), serving]
    return Classification(snr, best, serving, best >= thr, thr)


def _pick_relay(hop: np.ndarray, relay_direct: np.ndarray, cand: np.ndarray, threshold: float):
    if cand.size == 0:
        return None
    bottleneck = np.minimum(hop, relay_direct)
    k = int(np.argmax(bottleneck))  # candidates are in ascending id order
    if bottleneck[k] >= threshold:
        return int(cand[k]), float(bottleneck[k])
    return None


def relay_selection(is_user: int, vacant_ds_users, s: Scenario, drop: int = 0,
                    classification: Classification | None = None):
    """Best relay for ``is_user`` among ``vacant_ds_users``.

    Returns ``(relay id, bottleneck SNR)`` when the best two-hop bottleneck
    reaches the threshold, otherwise ``None``.  Ties go to the lowest id.
    """
    cls = classification or classify_users(s, drop=drop)
    cand = np.array(sorted(int(v) for v in vacant_ds_users), dtype=int)
    if cand.size == 0:
        return None
    if not cls.is_ds[cand].all():
        raise DomainError("relay candidates must be DS users")
    if cls.is_ds[is_user]:
        raise DomainError(f"user {is_user} is directly served")
    hop = _link_matrix(s, _user_nodes(s, [is_user]), _user_nodes(s, cand), drop).snr[0]
    return _pick_relay(hop, cls.best_snr[cand], cand, cls.threshold)


@dataclass(frozen=True)
class PilotAssignment:
    level1: dict[int, int]  # BS id -> pilot id
    level2: dict[int, int]  # vacant DS user id -> pilot id

    def __post_init__(self):
        ids = list(self.level1.values()) + list(self.level2.values())
        if len(set(ids)) != len(ids):
            raise ConfigurationError("pilot ids must be unique across both pilot sets")


@dataclass(frozen=True)
class UserOutcome:
    user_id: int
    cls: ServiceClass
    serving_bs: int | None  # for IS_served: the relay's BS
    relay: int | None
    direct_snr: float
    bottleneck_snr: float | None  # best available two-hop bottleneck for IS users
    drop: int = 0


@dataclass
class RoundRecord:
    drop: int
    pilots: PilotAssignment
    ds_registrations: dict[int, list[int]]
    relay_links: list[tuple[int, int, int]]  # (IS user, relay, BS)
    traffic_channels: dict[int, int]
    counts: dict[str, int]


@dataclass
class CoverageResult:
    seed: int
    drops: int
    ds: float
    is_served: float
    unserved: float
    outcomes: list[UserOutcome]
    rounds: list[RoundRecord]
    stderr: dict[str, float] = field(default_factory=dict)

    @property
    def fractions(self) -> dict[str, float]:
        return {"ds": self.ds, "is_served": self.is_served, "unserved": self.unserved}

    def per_drop_fractions(self) -> list[dict[str, float]]:
        out = []
        for r in self.rounds:
            n = sum(r.counts.values())
            out.append({k: r.counts[k] / n for k in ("ds", "is_served", "unserved")})
        return out

    def to_json(self) -> str:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "seed": int(self.seed),
            "drops": self.drops,
            "fractions": self.fractions,
            "stderr": self.stderr,
            "per_drop": [
                {"drop": r.drop, **{k: r.counts[k] for k in ("ds", "is_served", "unserved")},
                 "relay_links": len(r.relay_links),
                 "traffic_channels": {str(k): v for k, v in sorted(r.traffic_channels.items())}}
                for r in self.rounds
            ],
        }
        return json.dumps(doc, indent=2) + "\n"

    CSV_COLUMNS = ("drop", "user_id", "class", "serving_bs", "relay", "direct_snr_db",
                   "bottleneck_snr_db")

    def to_csv(self, fh=None) -> str | None:
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_COLUMNS)

        def opt(v, fmt="{}"):
            return "" if v is None else fmt.format(v)

        for o in self.outcomes:
            w.writerow([o.drop, o.user_id, o.cls.value, opt(o.serving_bs), opt(o.relay),
                        f"{o.direct_snr:.6f}", opt(o.bottleneck_snr, "{:.6f}")])
        return buf.getvalue() if fh is None else None


def run_round(s: Scenario, drop: int = 0) -> CoverageResult:
    """Run the five protocol phases once on the scenario as placed."""
    s.validate()
    n_users = len(s.users)
    if n_users == 0:
        raise ConfigurationError("scenario has no users")
    n_bs = len(s.base_stations)

    # phases 1-2: level-1 pilots, classification, DS registration
    cls = classify_users(s, drop=drop)
    pilots1 = {i: i for i in range(n_bs)}
    registrations: dict[int, list[int]] = {i: [] for i in range(n_bs)}
    for j in cls.ds_users:
        registrations[int(cls.serving_bs[j])].append(j)

    # phase 3: vacant DS users advertise level-2 pilots
    vacant = np.array([j for j in cls.ds_users if s.users[j].vacant], dtype=int)
    pilots = PilotAssignment(pilots1, {int(j): n_bs + k for k, j in enumerate(vacant)})

    # phase 4: relay selection in ascending IS id, first come first served
    is_users = np.array(cls.is_users, dtype=int)
    load = {int(j): 0 for j in vacant}
    outcomes: dict[int, UserOutcome] = {}
    relay_links = []
    if is_users.size and vacant.size:
        hop = _link_matrix(s, _user_nodes(s, is_users), _user_nodes(s, vacant), drop).snr
    else:
        hop = np.zeros((is_users.size, vacant.size))
    relay_direct = cls.best_snr[vacant] if vacant.size else np.zeros(0)
    for row, j in enumerate(is_users):
        j = int(j)
        if s.relay_capacity is None:
            free = np.ones(vacant.size, dtype=bool)
        else:
            free = np.array([load[int(v)] < s.relay_capacity for v in vacant], dtype=bool)
        cand = vacant[free]
        bn = np.minimum(hop[row, free], relay_direct[free]) if cand.size else np.zeros(0)
        best = float(bn.max()) if cand.size else None
        pick = _pick_relay(hop[row, free], relay_direct[free], cand, cls.threshold)
        if pick is None:
            outcomes[j] = UserOutcome(j, ServiceClass.IS_UNSERVED, None, None,
                                      float(cls.best_snr[j]), best, drop)
            continue
        relay, bottleneck = pick
        load[relay] += 1
        relay_bs = int(cls.serving_bs[relay])
        relay_links.append((j, relay, relay_bs))
        outcomes[j] = UserOutcome(j, ServiceClass.IS_SERVED, relay_bs, relay,
                                  float(cls.best_snr[j]), bottleneck, drop)
    for j in cls.ds_users:
        outcomes[j] = UserOutcome(j, ServiceClass.DS, int(cls.serving_bs[j]), None,
                                  float(cls.best_snr[j]), None, drop)

    # phase 5: traffic channels, assigned by the (possibly indirect) serving BS
    channels = {i: 0 for i in range(n_bs)}
    for j, o in outcomes.items():
        if s.users[j].traffic and o.serving_bs is not None:
            channels[o.serving_bs] += 1

    ordered = [outcomes[j] for j in range(n_users)]
    counts = {
        "ds": sum(o.cls is ServiceClass.DS for o in ordered),
        "is_served": sum(o.cls is ServiceClass.IS_SERVED for o in ordered),
        "unserved": sum(o.cls is ServiceClass.IS_UNSERVED for o in ordered),
    }
    record = RoundRecord(drop, pilots, registrations, relay_links, channels, counts)
    return CoverageResult(
        seed=s.seed, drops=1,
        ds=counts["ds"] / n_users, is_served=counts["is_served"] / n_users,
        unserved=counts["unserved"] / n_users,
        outcomes=ordered, rounds=[record],
        stderr={"ds": 0.0, "is_served": 0.0, "unserved": 0.0},
    )


def draw_placement(s: Scenario, drop: int) -> Scenario:
    """Scenario with user positions redrawn uniformly in the area for ``drop``.

    The draw depends only on the seed, the drop index and the user count.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(s.seed), _PLACEMENT_STREAM, drop]))
    a = s.area
    xy = np.column_stack([
        rng.uniform(a.x_min, a.x_max, len(s.users)),
        rng.uniform(a.y_min, a.y_max, len(s.users)),
    ])
    return s.with_user_positions(xy)


def simulate(s: Scenario, drops: int) -> CoverageResult:
    """Monte-Carlo over ``drops`` independent user placements.

    Fractions are averaged over drops; ``stderr`` holds their standard
    errors.  Outcomes of every drop are kept, tagged with the drop index.
    """
    if int(drops) != drops or drops < 1:
        raise DomainError("drops must be a positive integer")
    s.validate()
    results = [run_round(draw_placement(s, k), drop=k) for k in range(drops)]
    keys = ("ds", "is_served", "unserved")
    table = np.array([[getattr(r, k) for k in keys] for r in results])
    mean = table.mean(axis=0)
    if drops > 1:
        se = table.std(axis=0, ddof=1) / math.sqrt(drops)
    else:
        se = np.zeros(3)
    return CoverageResult(
        seed=s.seed, drops=drops,
        ds=float(mean[0]), is_served=float(mean[1]), unserved=float(mean[2]),
        outcomes=[o for r in results for o in r.outcomes],
        rounds=[r.rounds[0] for r in results],
        stderr={k: float(v) for k, v in zip(keys, se)},
    )
