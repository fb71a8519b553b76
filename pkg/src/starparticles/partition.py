"""Equal-area partitions of the sphere and the circle.

The sphere partition is the recursive zonal scheme: two polar caps of the
target area, then latitude collars whose boundaries are placed so that
every collar holds a whole number of equal-area cells, each collar being
cut into equal longitude sectors.  Because the cells are colatitude x
longitude rectangles their areas are known exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "EqualAreaPartition",
    "partition_sphere",
    "partition_circle",
    "region_centers",
    "cap_colatitude",
]

TWO_PI = 2.0 * math.pi


def cap_colatitude(cells: float, n: int) -> float:
    """Colatitude of the polar cap holding ``cells`` of ``n`` equal-area cells."""
    # 2 pi (1 - cos t) = cells * 4 pi / n  <=>  sin^2(t/2) = cells / n
    return 2.0 * math.asin(math.sqrt(min(max(cells / n, 0.0), 1.0)))


@dataclass(frozen=True)
class EqualAreaPartition:
    """N cells stored as [theta_lo, theta_hi) x [phi_lo, phi_hi) rectangles.

    ``zone_edges`` are the colatitudes separating caps and collars, and
    ``zone_counts`` the number of cells in each zone (north cap first).
    For the circle the colatitude bounds are both pi/2 and only the
    longitude arcs matter.
    """

    domain: str
    theta_lo: np.ndarray
    theta_hi: np.ndarray
    phi_lo: np.ndarray
    phi_hi: np.ndarray
    zone_edges: np.ndarray
    zone_counts: np.ndarray

    @property
    def n(self) -> int:
        return int(self.phi_lo.size)

    @property
    def target_area(self) -> float:
        return (4.0 * math.pi if self.domain == "sphere" else TWO_PI) / self.n

    def areas(self) -> np.ndarray:
        """Cell areas (arc lengths on the circle) from the stored bounds."""
        width = self.phi_hi - self.phi_lo
        if self.domain == "circle":
            return width
        return (np.cos(self.theta_lo) - np.cos(self.theta_hi)) * width

    @property
    def centers(self) -> np.ndarray:
        return region_centers(self)

    def locate(self, directions: np.ndarray) -> np.ndarray:
        """Index of the cell containing each unit vector (half-open cells)."""
        d = np.atleast_2d(np.asarray(directions, dtype=float))
        phi = np.mod(np.arctan2(d[:, 1], d[:, 0]), TWO_PI)
        offsets = np.concatenate([[0], np.cumsum(self.zone_counts)[:-1]])
        if self.domain == "circle":
            zone = np.zeros(len(d), dtype=int)
        else:
            theta = np.arctan2(np.hypot(d[:, 0], d[:, 1]), d[:, 2])
            zone = np.searchsorted(self.zone_edges, theta, side="right") - 1
            zone = np.clip(zone, 0, self.zone_counts.size - 1)
        counts = self.zone_counts[zone]
        sector = np.minimum((phi * counts / TWO_PI).astype(int), counts - 1)
        return offsets[zone] + sector

    def contains(self, index: int, directions: np.ndarray) -> np.ndarray:
        d = np.atleast_2d(np.asarray(directions, dtype=float))
        phi = np.mod(np.arctan2(d[:, 1], d[:, 0]), TWO_PI)
        ok = (phi >= self.phi_lo[index]) & (phi < self.phi_hi[index])
        if self.domain == "sphere":
            theta = np.arctan2(np.hypot(d[:, 0], d[:, 1]), d[:, 2])
            upper = theta < self.theta_hi[index] if self.theta_hi[index] < math.pi else theta <= math.pi
            ok &= (theta >= self.theta_lo[index]) & upper
        return ok

    def max_diameter(self) -> float:
        """Largest great-circle diameter over all cells."""
        if self.domain == "circle":
            return float(np.max(self.phi_hi - self.phi_lo))
        best = 0.0
        for z, count in enumerate(self.zone_counts):
            lo, hi = self.zone_edges[z], self.zone_edges[z + 1]
            if count == 1:
                # whole zone: a cap, or the full sphere when N = 1
                best = max(best, min(2.0 * max(hi if lo == 0 else math.pi - lo, 0.0), math.pi))
                continue
            best = max(best, _rectangle_diameter(lo, hi, TWO_PI / count))
        return best

    def to_csv(self) -> str:
        c = self.centers
        rows = ["index,theta_lo,theta_hi,phi_lo,phi_hi,cx,cy,cz"]
        for i in range(self.n):
            cz = c[i, 2] if c.shape[1] == 3 else 0.0
            rows.append(
                f"{i},{self.theta_lo[i]:.17g},{self.theta_hi[i]:.17g},{self.phi_lo[i]:.17g},"
                f"{self.phi_hi[i]:.17g},{c[i, 0]:.17g},{c[i, 1]:.17g},{cz:.17g}"
            )
        return "\n".join(rows) + "\n"


def _rectangle_diameter(lo: float, hi: float, width: float, samples: int = 24) -> float:
    # sample the boundary of one representative cell; all cells in a collar are congruent
    t = np.linspace(0.0, 1.0, samples)
    th = np.concatenate([lo + (hi - lo) * t, lo + (hi - lo) * t, np.full(samples, lo), np.full(samples, hi)])
    ph = np.concatenate([np.zeros(samples), np.full(samples, width), width * t, width * t])
    p = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1)
    dots = np.clip(p @ p.T, -1.0, 1.0)
    return float(np.arccos(dots.min()))


def _largest_remainder(ideal: np.ndarray, total: int) -> np.ndarray:
    counts = np.floor(ideal).astype(int)
    short = total - int(counts.sum())
    if short > 0:
        order = np.argsort(-(ideal - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def _collar_counts(n: int) -> np.ndarray:
    """Cells per zone, north cap first, for n >= 2."""
    if n == 2:
        return np.array([1, 1])
    area = 4.0 * math.pi / n
    polar = cap_colatitude(1, n)
    ideal_size = math.sqrt(area)
    n_collars = max(1, int(round((math.pi - 2.0 * polar) / ideal_size)))
    while True:
        fit = (math.pi - 2.0 * polar) / n_collars
        tops = polar + fit * np.arange(n_collars)
        bots = tops + fit
        ideal = 2.0 * math.pi * (np.cos(tops) - np.cos(bots)) / area
        ideal *= (n - 2) / ideal.sum()
        counts = _largest_remainder(ideal, n - 2)
        if np.all(counts >= 1) or n_collars == 1:
            break
        n_collars -= 1
    return np.concatenate([[1], counts, [1]])


def partition_sphere(n: int) -> EqualAreaPartition:
    """Equal-area partition of the unit sphere into ``n`` cells."""
    n = int(n)
    if n < 1:
        raise DomainError("partition needs N >= 1")
    if n == 1:
        counts = np.array([1])
        edges = np.array([0.0, math.pi])
    else:
        counts = _collar_counts(n)
        cum = np.cumsum(counts)
        edges = np.array([0.0] + [cap_colatitude(c, n) for c in cum[:-1]] + [math.pi])
    tlo, thi, plo, phi = [], [], [], []
    for z, c in enumerate(counts):
        j = np.arange(c)
        tlo.append(np.full(c, edges[z]))
        thi.append(np.full(c, edges[z + 1]))
        plo.append(TWO_PI * j / c)
        phi.append(TWO_PI * (j + 1) / c)
    return EqualAreaPartition(
        "sphere",
        np.concatenate(tlo),
        np.concatenate(thi),
        np.concatenate(plo),
        np.concatenate(phi),
        edges,
        counts,
    )


def partition_circle(n: int) -> EqualAreaPartition:
    """``n`` equal arcs of the unit circle starting at angle 0."""
    n = int(n)
    if n < 1:
        raise DomainError("partition needs N >= 1")
    j = np.arange(n)
    half = np.full(n, math.pi / 2)
    return EqualAreaPartition(
        "circle", half, half.copy(), TWO_PI * j / n, TWO_PI * (j + 1) / n,
        np.array([0.0, math.pi]), np.array([n]),
    )


def region_centers(p: EqualAreaPartition) -> np.ndarray:
    """Representative direction of each cell: mid-range colatitude and longitude.

    Polar caps are represented by their pole.  Circle partitions return
    2-vectors.
    """
    ph = 0.5 * (p.phi_lo + p.phi_hi)
    if p.domain == "circle":
        return np.stack([np.cos(ph), np.sin(ph)], axis=1)
    th = 0.5 * (p.theta_lo + p.theta_hi)
    th = np.where(p.theta_lo == 0.0, 0.0, th)
    th = np.where(p.theta_hi == math.pi, math.pi, th)
    if p.n == 1:
        th = np.array([0.0])
    ph = np.where((th == 0.0) | (th == math.pi), 0.0, ph)
    st = np.sin(th)
    return np.stack([st * np.cos(ph), st * np.sin(ph), np.cos(th)], axis=1)
