"""Line-of-sight MIMO between two uniform linear arrays.

Channel entries have unit amplitude and phase ``exp(-j 2 pi d / lambda)``
where ``d`` is the antenna-to-antenna path length.  Two path-length models
are offered:

``exact``
    Euclidean distance.  Works for any placement and orientation.
``paraxial``
    Second-order (Fresnel) expansion about the axis joining the two array
    centres: ``d = l + |w|^2 / (2 l)`` with ``l`` the longitudinal and ``w``
    the lateral separation.  For aligned broadside arrays this makes the
    eigenmodes exactly equal at the Rayleigh distance.

Eigenvalues are those of the Gram matrix (``H H^H`` or ``H^H H``, whichever
is smaller), sorted in descending order.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Literal, Sequence

import numpy as np

from eband.errors import (
    DegenerateGeometryError,
    DomainError,
    InfeasibleError,
    NumericalError,
    RangeError,
)

PhaseModel = Literal["exact", "paraxial"]
PHASE_MODELS = ("exact", "paraxial")

DEFAULT_GAMMA = 0.1
EDOF_RTOL = 1e-9
RESIDUAL_TOL = 1e-8


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        raise DomainError("direction vector must be non-zero")
    return v / n


@dataclass(frozen=True)
class UlaGeometry:
    """A uniform linear array: ``n`` elements ``spacing`` metres apart."""

    n: int
    spacing: float
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    axis: tuple[float, float, float] = (0.0, 1.0, 0.0)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("antenna count must be an integer >= 1")
        if not self.spacing > 0:
            raise DomainError("antenna spacing must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "axis", tuple(float(a) for a in self.axis))
        if len(self.center) != 3 or len(self.axis) != 3:
            raise DomainError("center and axis must be 3-vectors")
        if abs(math.hypot(*self.axis) - 1.0) > 1e-12:
            raise DomainError("array axis must be a unit vector")

    @classmethod
    def along(cls, n: int, spacing: float, center=(0.0, 0.0, 0.0), direction=(0.0, 1.0, 0.0)):
        """Build with ``direction`` normalised to unit length."""
        return cls(n, spacing, tuple(center), tuple(_unit(direction)))

    @property
    def aperture(self) -> float:
        return (self.n - 1) * self.spacing

    def offsets(self) -> np.ndarray:
        """Element positions relative to the centre, shape (n, 3)."""
        idx = np.arange(self.n) - (self.n - 1) / 2.0
        return idx[:, None] * self.spacing * np.asarray(self.axis)[None, :]

    def scaled(self, s: float) -> UlaGeometry:
        return replace(self, spacing=self.spacing * s, center=tuple(np.asarray(self.center) * s))


def antenna_positions(g: UlaGeometry) -> np.ndarray:
    """Absolute element positions, shape (n, 3)."""
    return np.asarray(g.center)[None, :] + g.offsets()


@dataclass(frozen=True)
class LosMimoLink:
    tx: UlaGeometry
    rx: UlaGeometry
    wavelength: float
    phase_model: PhaseModel = "exact"

    def __post_init__(self):
        if not self.wavelength > 0:
            raise DomainError("wavelength must be positive")
        if self.phase_model not in PHASE_MODELS:
            raise DomainError(f"unknown phase model {self.phase_model!r}")
        if self.distance == 0:
            raise DegenerateGeometryError("transmit and receive arrays share a centre")

    @property
    def separation(self) -> np.ndarray:
        return np.asarray(self.rx.center) - np.asarray(self.tx.center)

    @property
    def distance(self) -> float:
        return float(np.linalg.norm(self.separation))

    @property
    def far_field(self) -> bool:
        return self.distance >= 10.0 * max(self.tx.aperture, self.rx.aperture)

    @property
    def rayleigh_distance(self) -> float:
        return rayleigh_distance(self.tx.n, self.rx.n, self.tx.spacing, self.rx.spacing,
                                 self.wavelength)

    def at_distance(self, d: float) -> LosMimoLink:
        """Same arrays, receiver moved along the current link axis to range ``d``."""
        u = self.separation / self.distance
        center = np.asarray(self.tx.center) + d * u
        return replace(self, rx=replace(self.rx, center=tuple(center)))

    def scaled(self, s: float) -> LosMimoLink:
        return replace(self, tx=self.tx.scaled(s), rx=self.rx.scaled(s),
                       wavelength=self.wavelength * s)


def aligned_link(nt: int, nr: int, dt: float, dr: float, wavelength: float, distance: float,
                 phase_model: PhaseModel = "exact") -> LosMimoLink:
    """Parallel broadside ULAs facing each other across ``distance`` metres on x."""
    tx = UlaGeometry(nt, dt)
    rx = UlaGeometry(nr, dr, center=(distance, 0.0, 0.0))
    return LosMimoLink(tx, rx, wavelength, phase_model)


def excess_path(link: LosMimoLink) -> np.ndarray:
    """Path length minus centre distance for every (rx, tx) pair, shape (Nr, Nt)."""
    big_d = link.distance
    if big_d == 0:
        raise DegenerateGeometryError("transmit and receive arrays share a centre")
    u = link.separation / big_d
    # delta = offset of rx element minus offset of tx element
    delta = link.rx.offsets()[:, None, :] - link.tx.offsets()[None, :, :]
    along = delta @ u
    if link.phase_model == "exact":
        # d - D = (2 D u.delta + |delta|^2) / (d + D), free of cancellation
        num = 2.0 * big_d * along + np.einsum("rtk,rtk->rt", delta, delta)
        dist = np.sqrt(np.maximum(big_d * big_d + num, 0.0))
        if np.any(dist == 0):
            raise DegenerateGeometryError("a transmit and a receive antenna coincide")
        return num / (dist + big_d)
    lateral = delta - along[..., None] * u
    longitudinal = big_d + along
    if np.any(longitudinal <= 0):
        raise DegenerateGeometryError(
            "paraxial model needs every receive element ahead of every transmit element",
            {"min_longitudinal_m": float(longitudinal.min())})
    return along + np.einsum("rtk,rtk->rt", lateral, lateral) / (2.0 * longitudinal)


def los_channel_matrix(link: LosMimoLink) -> np.ndarray:
    """Unit-modulus LoS channel, shape (Nr, Nt), entry ``exp(-j 2 pi d / lambda)``."""
    ref_cycles = math.fmod(link.distance / link.wavelength, 1.0)
    cycles = ref_cycles + excess_path(link) / link.wavelength
    return np.exp(-2j * np.pi * cycles)


@dataclass(frozen=True)
class EigenSpectrum:
    """Gram-matrix eigenvalues in descending order."""

    values: np.ndarray
    residuals: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if len(self.values) == 0:
            raise DomainError("empty spectrum")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def ratios(self) -> np.ndarray:
        return self.values / self.values[0]

    def edof(self, gamma: float = DEFAULT_GAMMA) -> int:
        return edof(self, gamma)


def gram_matrix(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h)
    nr, nt = h.shape
    return h @ h.conj().T if nr <= nt else h.conj().T @ h


def gram_eigenvalues(h: np.ndarray, tol: float = RESIDUAL_TOL) -> EigenSpectrum:
    """Eigenvalues of the Gram matrix of ``h`` with a residual check per pair.

    Raises :class:`NumericalError` when the solver fails or any pair has
    ``||G v - mu v|| > tol * ||G||``.
    """
    h = np.asarray(h)
    if h.ndim != 2 or h.size == 0:
        raise DomainError("channel matrix must be a non-empty 2-D array")
    g = gram_matrix(h)
    try:
        mu, v = np.linalg.eigh(g)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Hermitian eigensolve failed: {exc}",
                             {"shape": g.shape}) from exc
    g_norm = np.linalg.norm(g)
    residuals = np.linalg.norm(g @ v - v * mu[None, :], axis=0)
    worst = int(np.argmax(residuals))
    if residuals[worst] > tol * max(g_norm, np.finfo(float).tiny):
        raise NumericalError(
            "eigenpair residual exceeds tolerance",
            {"pair": worst, "residual": float(residuals[worst]), "norm": float(g_norm),
             "tolerance": tol})
    order = np.argsort(mu)[::-1]
    values = np.clip(mu[order], 0.0, None)
    return EigenSpectrum(values, residuals[order])


def link_spectrum(link: LosMimoLink) -> EigenSpectrum:
    return gram_eigenvalues(los_channel_matrix(link))


def rayleigh_distance(nt: int, nr: int, dt: float, dr: float, wavelength: float) -> float:
    """Range at which aligned ULAs reach ``min(nt, nr)`` equal-gain eigenmodes."""
    if nt < 1 or nr < 1:
        raise DomainError("antenna counts must be >= 1")
    if not (dt > 0 and dr > 0 and wavelength > 0):
        raise DomainError("spacings and wavelength must be positive")
    return max(nt, nr) * dt * dr / wavelength


def edof(spectrum: EigenSpectrum | Sequence[float], gamma: float = DEFAULT_GAMMA,
         rtol: float = EDOF_RTOL) -> int:
    """Number of eigenmodes with ``mu_m / mu_1 >= gamma``.

    Ratios within ``rtol`` below ``gamma`` still count, so that modes that are
    equal in exact arithmetic are not lost to rounding.
    """
    if not 0 < gamma <= 1:
        raise DomainError("gamma must lie in (0, 1]")
    values = np.asarray(spectrum.values if isinstance(spectrum, EigenSpectrum) else spectrum,
                        dtype=float)
    if values.size == 0:
        raise DomainError("empty spectrum")
    values = np.sort(values)[::-1]
    if values[0] <= 0:
        return 0
    return int(np.count_nonzero(values / values[0] >= gamma * (1.0 - rtol)))


@dataclass
class SweepTable:
    """Eigenvalues against range; one row per distance."""

    distances: np.ndarray
    eigenvalues: np.ndarray  # (rows, k)
    edof: np.ndarray
    gamma: float
    rayleigh_distance: float

    @property
    def ratios(self) -> np.ndarray:
        return self.eigenvalues / self.eigenvalues[:, :1]

    @property
    def k(self) -> int:
        return self.eigenvalues.shape[1]

    def header(self) -> list[str]:
        k = self.k
        return (["D_m"] + [f"mu_{i}" for i in range(1, k + 1)] + ["edof"]
                + [f"ratio_{i}" for i in range(1, k + 1)])

    def rows(self):
        ratios = self.ratios
        for d, mu, e, r in zip(self.distances, self.eigenvalues, self.edof, ratios):
            yield [repr(float(d))] + [repr(float(x)) for x in mu] + [str(int(e))] + [
                repr(float(x)) for x in r]

    def to_csv(self, fh=None) -> str | None:
        """Write CSV to ``fh``; return it as a string when ``fh`` is None."""
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        w.writerows(self.rows())
        return buf.getvalue() if fh is None else None


def distance_grid(d_min: float, d_max: float, points: int, spacing: str = "log",
                  snap_to: float | None = None) -> np.ndarray:
    """Sorted sample ranges; the point nearest ``snap_to`` is replaced by it."""
    if points < 1:
        raise DomainError("need at least one point")
    if not (0 < d_min <= d_max):
        raise DomainError("need 0 < d_min <= d_max")
    if points == 1:
        grid = np.array([d_min])
    elif spacing == "log":
        grid = np.geomspace(d_min, d_max, points)
    elif spacing == "linear":
        grid = np.linspace(d_min, d_max, points)
    else:
        raise DomainError(f"unknown grid spacing {spacing!r}")
    if snap_to is not None:
        grid[int(np.argmin(np.abs(np.log(grid / snap_to))))] = snap_to
        grid = np.sort(grid)
    return grid


def eigen_curve_sweep(template: LosMimoLink, d_values: Iterable[float],
                      gamma: float = DEFAULT_GAMMA) -> SweepTable:
    """Spectrum and EDOF of ``template`` re-placed at each range in ``d_values``."""
    d_values = np.asarray(list(d_values), dtype=float)
    if d_values.size == 0 or np.any(d_values <= 0):
        raise DomainError("distances must be positive")
    if np.any(np.diff(d_values) < 0):
        raise DomainError("distances must be sorted ascending")
    rows = [link_spectrum(template.at_distance(d)).values for d in d_values]
    mu = np.vstack(rows)
    e = np.array([edof(r, gamma) for r in rows])
    return SweepTable(d_values, mu, e, gamma, template.rayleigh_distance)


def _check_order(m: int, gamma: float, nt: int, nr: int):
    if not 2 <= m <= min(nt, nr):
        raise DomainError(f"multiplexing order must lie in [2, {min(nt, nr)}]")
    if not 0 < gamma < 1:
        raise DomainError("gamma must lie in (0, 1)")


def effective_multiplexing_distance(m: int, gamma: float, nt: int, nr: int, dt: float, dr: float,
                                    wavelength: float, phase_model: PhaseModel = "exact",
                                    rtol: float = 1e-4, max_expansions: int = 60) -> float:
    """Farthest range at which aligned ULAs still offer ``m`` effective eigenmodes.

    The near bound is ten apertures, or the Rayleigh distance when that is
    farther.  The far bound doubles until EDOF drops below ``m``, then the
    crossing is bisected to relative width ``rtol``.
    """
    _check_order(m, gamma, nt, nr)
    d_ray = rayleigh_distance(nt, nr, dt, dr, wavelength)
    base = aligned_link(nt, nr, dt, dr, wavelength, 1.0, phase_model)

    def order_at(d: float) -> int:
        return edof(link_spectrum(base.at_distance(d)), gamma)

    lo = max(10.0 * max(base.tx.aperture, base.rx.aperture), d_ray)
    e_lo = order_at(lo)
    if e_lo < m:
        raise InfeasibleError(f"EDOF at the near bound is {e_lo} < {m}",
                              {"near_bound_m": lo, "edof": e_lo})
    hi = lo
    for _ in range(max_expansions):
        hi *= 2.0
        if order_at(hi) < m:
            break
        lo = hi
    else:
        raise RangeError("EDOF stayed above the target over the whole search range",
                         {"far_bound_m": hi})
    while (hi - lo) > rtol * lo:
        mid = 0.5 * (lo + hi)
        if order_at(mid) >= m:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class ArrayPair:
    nt: int
    nr: int
    dt: float
    dr: float
    wavelength: float

    @property
    def aperture_product(self) -> float:
        return (self.nt - 1) * self.dt * (self.nr - 1) * self.dr


def square_family(ns: Iterable[int], spacing: float, wavelength: float) -> list[ArrayPair]:
    return [ArrayPair(n, n, spacing, spacing, wavelength) for n in ns]


@dataclass
class CmEstimate:
    m: int
    gamma: float
    geometries: list[ArrayPair]
    distances: list[float]
    values: list[float]

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def spread(self) -> float:
        """(max - min) / mean across the family."""
        return float((max(self.values) - min(self.values)) / self.mean)


def estimate_cm(m: int, gamma: float, family: Sequence[ArrayPair],
                phase_model: PhaseModel = "paraxial", rtol: float = 1e-4) -> CmEstimate:
    """Normalised multiplexing distance ``D_max * lambda / (D_t D_r)`` per geometry."""
    dists, values = [], []
    for g in family:
        d = effective_multiplexing_distance(m, gamma, g.nt, g.nr, g.dt, g.dr, g.wavelength,
                                            phase_model, rtol)
        dists.append(d)
        values.append(d * g.wavelength / g.aperture_product)
    return CmEstimate(m, gamma, list(family), dists, values)
