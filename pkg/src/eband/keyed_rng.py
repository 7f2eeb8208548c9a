"""Counter-based random draws keyed by integer tuples.

A draw depends only on ``(seed, *key)``, never on how many other draws were
made before it.  Link shadowing uses this so that adding a node to a
scenario leaves every existing link untouched, and so that drops can be
evaluated in any order.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(z: np.ndarray) -> np.ndarray:
    # splitmix64 finaliser; uint64 arithmetic wraps modulo 2**64
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def keyed_hash(seed: int, *key) -> np.ndarray:
    """64-bit hash of ``(seed, *key)``; key entries may be int arrays (broadcast)."""
    with np.errstate(over="ignore"):
        h = _mix(np.asarray(np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)) + _GOLDEN)
        for part in key:
            p = np.asarray(part).astype(np.int64).astype(np.uint64)
            h = _mix(h ^ (p + _GOLDEN + (h << np.uint64(6)) + (h >> np.uint64(2))))
    return h


def keyed_uniform(seed: int, *key) -> np.ndarray:
    """Uniform draw strictly inside (0, 1)."""
    h = keyed_hash(seed, *key)
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def keyed_normal(seed: int, *key) -> np.ndarray:
    """Standard normal draw by inverse CDF of :func:`keyed_uniform`."""
    return ndtri(keyed_uniform(seed, *key))


def pair_key(a, b) -> tuple[np.ndarray, np.ndarray]:
    """Order-free key for an unordered node pair (integer node codes)."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    return np.minimum(a, b), np.maximum(a, b)
