"""Empirical variograms of simulated fields and the fitted fractal index.

The variogram at lag theta is half the mean squared increment between
directions theta apart.  Divided by the field variance it estimates
``1 - C(theta)``, so its small-lag log-log slope is the fractal index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import EstimationError
from .fractal import FractalProfile, hausdorff_dimension
from .numerics import fit_loglog
from .simulate import resolution_scale

__all__ = [
    "VariogramEstimate",
    "MAX_PAIRS_PER_BIN",
    "unique_directions",
    "log_bins",
    "empirical_variogram",
    "pooled_variance",
    "estimate_dimension",
    "estimate_from_fields",
    "DimensionEstimate",
    "fit_window",
]

MAX_PAIRS_PER_BIN = 1_000_000
# increments are accumulated this many pairs at a time
_PAIR_CHUNK = 1 << 16


@dataclass(frozen=True)
class VariogramEstimate:
    bin_centers: np.ndarray
    gamma_hat: np.ndarray
    pair_counts: np.ndarray
    bin_edges: np.ndarray
    empty_bins: tuple[int, ...] = ()
    # mean angle of the pairs used in each bin; on coarse grids it can sit
    # well away from the geometric bin center
    mean_angles: np.ndarray = None

    def to_csv(self) -> str:
        rows = ["theta,gamma_hat,count"]
        rows += [f"{t:.17g},{g:.17g},{int(c)}"
                 for t, g, c in zip(self.bin_centers, self.gamma_hat, self.pair_counts)]
        return "\n".join(rows) + "\n"


def _values_matrix(fields) -> tuple[np.ndarray, np.ndarray]:
    if len(fields) == 0:
        raise EstimationError("need at least one field")
    dirs = np.asarray(fields[0].directions, dtype=float)
    vals = np.stack([np.asarray(f.values, dtype=float) for f in fields])
    if vals.shape[1] != len(dirs):
        raise EstimationError("all fields must share one grid")
    return dirs, vals


def unique_directions(dirs: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Indices of the first occurrence of each distinct direction (the grid repeats the pole)."""
    key = np.round(np.asarray(dirs) / tol).astype(np.int64)
    _, first = np.unique(key, axis=0, return_index=True)
    return np.sort(first)


def log_bins(lo: float, hi: float, per_decade: int = 10) -> np.ndarray:
    if not 0 < lo < hi <= math.pi:
        raise EstimationError("bins need 0 < lo < hi <= pi")
    n = max(1, int(math.ceil(per_decade * math.log10(hi / lo))))
    return np.geomspace(lo, hi, n + 1)


def _pair_angles(dirs: np.ndarray, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    chord = np.linalg.norm(dirs[i] - dirs[j], axis=1)
    return 2.0 * np.arcsin(np.minimum(0.5 * chord, 1.0))


def empirical_variogram(fields: Sequence, bins, seed: int = 0,
                        max_pairs: int = MAX_PAIRS_PER_BIN) -> VariogramEstimate:
    """Binned half mean squared increments, pooled over fields on a common grid.

    Pairs are found with a KD-tree on the unit vectors.  Bins with more
    than ``max_pairs`` pairs keep a seeded uniform subsample of them.  Bins
    without pairs are dropped and their indices reported in ``empty_bins``.
    """
    edges = np.asarray(bins, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise EstimationError("bin edges must be strictly increasing")
    if edges[0] < 0 or edges[-1] > math.pi + 1e-12:
        raise EstimationError("bin edges must lie in [0, pi]")
    dirs, vals = _values_matrix(fields)
    keep = unique_directions(dirs)
    dirs, vals = dirs[keep], vals[:, keep]
    tree = cKDTree(dirs)
    pairs = tree.query_pairs(2.0 * math.sin(0.5 * min(edges[-1], math.pi)) + 1e-12, output_type="ndarray")
    ang = _pair_angles(dirs, pairs[:, 0], pairs[:, 1])
    which = np.searchsorted(edges, ang, side="right") - 1
    ok = (which >= 0) & (which < edges.size - 1) & (ang > 0)
    pairs, which, ang = pairs[ok], which[ok], ang[ok]
    order = np.argsort(which, kind="stable")
    pairs, which, ang = pairs[order], which[order], ang[order]
    bounds = np.searchsorted(which, np.arange(edges.size))
    rng = np.random.default_rng(seed)
    centers, gam, counts, empty, means = [], [], [], [], []
    for b in range(edges.size - 1):
        sel = pairs[bounds[b]:bounds[b + 1]]
        if len(sel) == 0:
            empty.append(b)
            continue
        sel_ang = ang[bounds[b]:bounds[b + 1]]
        if len(sel) > max_pairs:
            pick = np.sort(rng.choice(len(sel), max_pairs, replace=False))
            sel, sel_ang = sel[pick], sel_ang[pick]
        total = 0.0
        for s in range(0, len(sel), _PAIR_CHUNK):
            p = sel[s:s + _PAIR_CHUNK]
            d = vals[:, p[:, 0]] - vals[:, p[:, 1]]
            total += float(np.einsum("ij,ij->", d, d))
        centers.append(math.sqrt(edges[b] * edges[b + 1]) if edges[b] > 0 else 0.5 * edges[b + 1])
        gam.append(0.5 * total / (len(sel) * vals.shape[0]))
        counts.append(len(sel))
        means.append(float(sel_ang.mean()))
    return VariogramEstimate(np.array(centers), np.array(gam), np.array(counts, dtype=np.int64),
                             edges, tuple(empty), np.array(means))


def pooled_variance(fields: Sequence) -> float:
    """Per-direction variance across fields, averaged over directions."""
    _, vals = _values_matrix(fields)
    if vals.shape[0] < 2:
        raise EstimationError("variance needs at least two fields")
    return float(np.mean(np.var(vals, axis=0, ddof=1)))


def estimate_dimension(v: VariogramEstimate, sigma2_hat: float, domain: str,
                       min_lag: float = 0.0, min_bins: int = 5,
                       decade: float = 10.0) -> FractalProfile:
    """Fit ln(gamma_hat / sigma2_hat) against ln theta over the smallest populated decade above ``min_lag``.

    ``min_lag`` should be the larger of the kernel clamp and the partition's
    resolution scale: below it the discrete field is smoother than the
    continuous one.
    """
    if not sigma2_hat > 0:
        raise EstimationError("sigma2_hat must be positive")
    t, g = v.bin_centers, v.gamma_hat
    usable = (t >= min_lag) & (g > 0) & (t > 0)
    if np.count_nonzero(usable) < min_bins:
        raise EstimationError(f"need at least {min_bins} populated bins above lag {min_lag:g}")
    start = t[usable].min()
    window = usable & (t <= decade * start * (1 + 1e-12))
    if np.count_nonzero(window) < min_bins:
        raise EstimationError(f"only {np.count_nonzero(window)} bins in the fit window, need {min_bins}")
    fit = fit_loglog(t[window], g[window] / sigma2_hat)
    alpha = fit.slope
    dim = hausdorff_dimension(min(max(alpha, 1e-12), 2.0), domain)
    return FractalProfile(alpha, math.exp(fit.intercept), "fitted", domain, dim, fit.r_squared)


def fit_window(v: VariogramEstimate, min_lag: float = 0.0, decade: float = 10.0) -> Optional[tuple[float, float]]:
    t = v.bin_centers[(v.bin_centers >= min_lag) & (v.gamma_hat > 0)]
    if t.size == 0:
        return None
    return float(t.min()), float(min(t.max(), decade * t.min()))


@dataclass(frozen=True)
class DimensionEstimate:
    profile: FractalProfile
    variogram: VariogramEstimate
    sigma2_hat: float
    min_lag: float
    window: Optional[tuple[float, float]]


def estimate_from_fields(fields: Sequence, per_decade: int = 10, seed: int = 0) -> DimensionEstimate:
    """Variogram over one decade above the resolution scale, then the fitted dimension."""
    f0 = fields[0]
    lag = max(float(f0.config.clamp_delta or 0.0), resolution_scale(f0.domain, f0.config.N))
    v = empirical_variogram(fields, log_bins(lag, min(10.0 * lag * (1 + 1e-9), math.pi), per_decade), seed)
    s2 = pooled_variance(fields)
    prof = estimate_dimension(v, s2, f0.domain, min_lag=lag)
    return DimensionEstimate(prof, v, s2, lag, fit_window(v, lag))
