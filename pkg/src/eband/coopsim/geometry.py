"""2-D line-of-sight blockage by axis-aligned rectangular obstacles.

A link is blocked when its segment passes through the *open* interior of an
obstacle.  Grazing an edge or touching a corner does not block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from eband.errors import DomainError


@dataclass(frozen=True)
class Rect:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise DomainError(f"degenerate rectangle {self}")

    @classmethod
    def from_seq(cls, seq) -> Rect:
        vals = [float(v) for v in seq]
        if len(vals) != 4:
            raise DomainError("rectangle needs [x_min, y_min, x_max, y_max]")
        return cls(*vals)

    def as_list(self) -> list[float]:
        return [self.x_min, self.y_min, self.x_max, self.y_max]

    def contains(self, x, y):
        """Closed containment test (boundary counts as inside)."""
        return ((x >= self.x_min) & (x <= self.x_max) & (y >= self.y_min) & (y <= self.y_max))


def obstacle_array(obstacles) -> np.ndarray:
    """(k, 4) array ``[x_min, y_min, x_max, y_max]`` from Rects or sequences."""
    rows = [o.as_list() if isinstance(o, Rect) else list(o) for o in obstacles]
    return np.asarray(rows, dtype=float).reshape(-1, 4)


def _slab(p, d, lo, hi):
    # open parameter interval where lo < p + t d < hi; (inf, -inf) when empty
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (lo - p) / d
        t2 = (hi - p) / d
    moving = d != 0
    inside = (p > lo) & (p < hi)
    t_lo = np.where(moving, np.minimum(t1, t2), np.where(inside, -np.inf, np.inf))
    t_hi = np.where(moving, np.maximum(t1, t2), np.where(inside, np.inf, -np.inf))
    return t_lo, t_hi


def segments_blocked(p, q, obstacles) -> np.ndarray:
    """Blockage flags for segments ``p[i] -> q[i]``.

    ``p`` and ``q`` are broadcastable ``(..., 2)`` arrays.  Returns a boolean
    array of the broadcast shape.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    shape = np.broadcast_shapes(p.shape, q.shape)[:-1]
    obs = obstacle_array(obstacles)
    if len(obs) == 0:
        return np.zeros(shape, dtype=bool)
    p = np.broadcast_to(p, shape + (2,))[..., None, :]
    q = np.broadcast_to(q, shape + (2,))[..., None, :]
    d = q - p
    xl, xh = _slab(p[..., 0], d[..., 0], obs[:, 0], obs[:, 2])
    yl, yh = _slab(p[..., 1], d[..., 1], obs[:, 1], obs[:, 3])
    lo = np.maximum(xl, yl)
    hi = np.minimum(xh, yh)
    hit = (lo < hi) & (lo < 1.0) & (hi > 0.0)
    return hit.any(axis=-1)


def los_blocked(p, q, obstacles) -> bool:
    """True iff segment pq crosses the interior of any obstacle."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.array_equal(p, q):
        raise DomainError("segment endpoints coincide")
    return bool(segments_blocked(p, q, obstacles))
