"""Discrete simulation of kernel-smoothed radial functions.

The field at grid direction u_m is ``x(u_m) = sum_n k(angle(v_n, u_m)) L_n``
with v_n the cell centers of an equal-area partition and L_n the basis
draws at cell area.  An optional floor c gives ``max(c, x)``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DomainError
from .kernels import Kernel, kernel_constants
from .levy_basis import LevyBasisSpec, field_moments, sample_basis
from .partition import EqualAreaPartition, partition_circle, partition_sphere

__all__ = [
    "ParticleSpec",
    "SimulationConfig",
    "RadialField",
    "build_grid_sphere",
    "build_grid_circle",
    "cached_partition",
    "default_clamp",
    "resolution_scale",
    "kernel_block",
    "simulate_field",
    "simulate_field_circle",
    "simulate_ensemble",
]

# kernel entries per elementwise pass (cache sized) and per matrix-product block
_CACHE_ENTRIES = 1 << 16
_CHUNK_ENTRIES = 1 << 22


@dataclass(frozen=True)
class ParticleSpec:
    kernel: Kernel
    basis: LevyBasisSpec
    truncation_c: Optional[float] = None

    def __post_init__(self):
        c = self.truncation_c
        if c is not None and not (math.isfinite(c) and c > 0):
            raise DomainError("truncation level c must be a positive number")

    @property
    def domain(self) -> str:
        return self.kernel.domain


@dataclass(frozen=True)
class SimulationConfig:
    """Grid and partition sizes, with the seed and the power-kernel clamp.

    ``clamp_delta = None`` selects ``default_clamp`` for the kernel.
    On the circle only ``M1`` is used.
    """

    M1: int
    M2: int = 1
    N: int = 10_000
    seed: int = 0
    clamp_delta: Optional[float] = None

    def __post_init__(self):
        for name in ("M1", "M2", "N"):
            if int(getattr(self, name)) < 1:
                raise DomainError(f"{name} must be >= 1")
        if self.clamp_delta is not None and not self.clamp_delta >= 0:
            raise DomainError("clamp_delta must be >= 0")


@dataclass
class RadialField:
    directions: np.ndarray
    values: np.ndarray
    spec: ParticleSpec
    config: SimulationConfig
    thetas: np.ndarray
    phis: np.ndarray

    def __post_init__(self):
        if len(self.values) != len(self.directions):
            raise DomainError("values and directions differ in length")

    @property
    def domain(self) -> str:
        return self.spec.domain

    def to_csv(self) -> str:
        rows = ["theta,phi,x"]
        rows += [f"{t:.17g},{p:.17g},{x:.17g}" for t, p, x in zip(self.thetas, self.phis, self.values)]
        return "\n".join(rows) + "\n"


def build_grid_sphere(M1: int, M2: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Directions at theta = i pi / M1 (i < M1), phi = 2 pi j / M2 (j = 1..M2), row m = i M2 + j - 1."""
    if M1 < 1 or M2 < 1:
        raise DomainError("grid sizes must be >= 1")
    th = np.repeat(np.arange(M1) * math.pi / M1, M2)
    ph = np.tile(2.0 * math.pi * np.arange(1, M2 + 1) / M2, M1)
    st = np.sin(th)
    dirs = np.stack([st * np.cos(ph), st * np.sin(ph), np.cos(th)], axis=1)
    return dirs, th, ph


def build_grid_circle(M: int) -> tuple[np.ndarray, np.ndarray]:
    """Directions at u_m = 2 pi m / M for m = 1..M."""
    if M < 1:
        raise DomainError("grid size must be >= 1")
    ph = 2.0 * math.pi * np.arange(1, M + 1) / M
    return np.stack([np.cos(ph), np.sin(ph)], axis=1), ph


@lru_cache(maxsize=8)
def cached_partition(domain: str, n: int) -> EqualAreaPartition:
    p = partition_sphere(n) if domain == "sphere" else partition_circle(n)
    return p


@lru_cache(maxsize=8)
def _cached_centers(domain: str, n: int) -> np.ndarray:
    c = cached_partition(domain, n).centers
    c.setflags(write=False)
    return c


def resolution_scale(domain: str, n: int) -> float:
    """Half the largest cell diameter: below this lag the discrete field is not resolved."""
    return 0.5 * cached_partition(domain, n).max_diameter()


def default_clamp(spec: ParticleSpec, n: int) -> float:
    """Smallest power-kernel clamp that keeps every summand's RMS within one field sd.

    Solves ``k(delta)^2 E[L_n^2] = sigma2_X`` for draws at the cell area, so
    a grid point sitting on a cell center gets a term no larger, in mean
    square, than the field's own variance.  Capped at ``resolution_scale``;
    smooth kernels need no clamp.
    """
    k = spec.kernel
    if not k.is_singular:
        return 0.0
    part = cached_partition(k.domain, n)
    area = part.target_area
    consts = kernel_constants(k)
    b = spec.basis
    if b.kind == "gaussian":
        mean, var = b.mu * area, b.sigma2 * area
    else:
        mean, var = b.kappa * area / b.tau, b.kappa * area / b.tau ** 2
    sigma2_x = field_moments(b, consts).sigma2_X
    k_max = math.sqrt(sigma2_x / (var + mean * mean))
    delta = math.pi * (1.0 + k_max) ** (-1.0 / k.parameter)
    return min(delta, resolution_scale(k.domain, n))


def _resolve_clamp(spec: ParticleSpec, config: SimulationConfig) -> float:
    if config.clamp_delta is not None:
        return float(config.clamp_delta)
    return default_clamp(spec, config.N)


# points within a few ulps of the uniform kernel's jump count one half
_TIE = 8 * np.finfo(float).eps


def _indicator(inside: np.ndarray, tie: np.ndarray) -> np.ndarray:
    out = inside.astype(float)
    out[tie] = 0.5
    return out


def kernel_block(k: Kernel, u: np.ndarray, v: np.ndarray, clamp: float = 0.0,
                 out: Optional[np.ndarray] = None) -> np.ndarray:
    """Matrix k(angle(u_i, v_n)) for rows of grid directions u and centers v.

    The power kernel's angle is floored at ``clamp``.  A center lying on the
    uniform kernel's cut-off, up to rounding, gets the midpoint value 1/2;
    zonal partitions put whole collars exactly on the cut-off of caps
    centered at the poles.  Everything is elementwise, so each row depends
    only on its own direction.  ``out`` is an optional (len(u), len(v))
    buffer to fill.
    """
    p = k.parameter
    shape = (len(u), len(v))
    buf = np.empty(shape) if out is None else out
    if u.shape[1] == 2:
        # arc distance from the polar angles, exact for the circle
        np.subtract(np.arctan2(u[:, 1], u[:, 0])[:, None], np.arctan2(v[:, 1], v[:, 0])[None, :], out=buf)
        buf += math.pi
        np.mod(buf, 2.0 * math.pi, out=buf)
        buf -= math.pi
        ang = np.abs(buf, out=buf)
        if k.family == "vmf":
            np.cos(ang, out=ang)
            ang *= p
            return np.exp(ang, out=ang)
        if k.family == "uniform":
            tie = np.abs(ang - p) <= _TIE * math.pi
            inside = ang <= p
            buf[...] = inside
            buf[tie] = 0.5
            return buf
    else:
        tmp = np.empty(shape)
        cos = np.multiply(u[:, 0:1], v[:, 0], out=buf)
        cos += np.multiply(u[:, 1:2], v[:, 1], out=tmp)
        cos += np.multiply(u[:, 2:3], v[:, 2], out=tmp)
        np.clip(cos, -1.0, 1.0, out=cos)
        if k.family == "vmf":
            cos *= p
            return np.exp(cos, out=cos)
        if k.family == "uniform":
            cr = math.cos(p)
            tie = np.abs(np.subtract(cos, cr, out=tmp), out=tmp) <= _TIE
            inside = cos >= cr
            buf[...] = inside
            buf[tie] = 0.5
            return buf
        ang = np.arccos(cos, out=cos)
    np.maximum(ang, clamp, out=ang)
    ang *= 1.0 / math.pi
    if p == 0.5:
        np.sqrt(ang, out=ang)
        res = np.divide(1.0, ang, out=ang)
    else:
        res = np.power(ang, -p, out=ang)
    res -= 1.0
    return res


def _row_chunks(m: int, n: int, entries: int) -> list[slice]:
    rows = max(1, entries // max(n, 1))
    return [slice(s, min(s + rows, m)) for s in range(0, m, rows)]


def _sum_rows(k: Kernel, dirs: np.ndarray, centers: np.ndarray, weights: np.ndarray,
              clamp: float, threads: int) -> np.ndarray:
    """Kernel sums against one or several weight vectors (columns of ``weights``).

    Chunk boundaries depend only on the problem size, never on ``threads``.
    """
    single = weights.ndim == 1
    out = np.empty((len(dirs),) if single else (len(dirs), weights.shape[1]))
    n = len(centers)

    def work(sl: slice) -> None:
        if single:
            kb = kernel_block(k, dirs[sl], centers, clamp)
            # pairwise reduction along each row; the same whatever rows share the chunk
            kb *= weights
            out[sl] = kb.sum(axis=1)
            return
        block = np.empty((sl.stop - sl.start, n))
        for sub in _row_chunks(sl.stop - sl.start, n, _CACHE_ENTRIES):
            rows = slice(sl.start + sub.start, sl.start + sub.stop)
            kernel_block(k, dirs[rows], centers, clamp, out=block[sub])
        out[sl] = block @ weights

    chunks = _row_chunks(len(dirs), n, _CACHE_ENTRIES if single else _CHUNK_ENTRIES)
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, chunks))
    else:
        for sl in chunks:
            work(sl)
    return out


def _grid(spec: ParticleSpec, config: SimulationConfig):
    if spec.domain == "sphere":
        return build_grid_sphere(config.M1, config.M2)
    dirs, ph = build_grid_circle(config.M1)
    return dirs, np.full(config.M1, math.pi / 2), ph


def _finish(values: np.ndarray, spec: ParticleSpec) -> np.ndarray:
    if spec.truncation_c is not None:
        values = np.maximum(values, spec.truncation_c)
    return values


def simulate_field(spec: ParticleSpec, config: SimulationConfig, threads: int = 1) -> RadialField:
    """Simulate one realisation on the grid of the kernel's domain."""
    part = cached_partition(spec.domain, config.N)
    centers = _cached_centers(spec.domain, config.N)
    clamp = _resolve_clamp(spec, config)
    config = replace(config, clamp_delta=clamp)
    L = sample_basis(spec.basis, np.full(part.n, part.target_area), config.seed, threads)
    dirs, th, ph = _grid(spec, config)
    values = _finish(_sum_rows(spec.kernel, dirs, centers, L, clamp, threads), spec)
    return RadialField(dirs, values, spec, config, th, ph)


def simulate_field_circle(spec: ParticleSpec, config: SimulationConfig, threads: int = 1) -> RadialField:
    if spec.domain != "circle":
        raise DomainError("simulate_field_circle needs a circle kernel")
    return simulate_field(spec, config, threads)


def simulate_ensemble(spec: ParticleSpec, config: SimulationConfig, seeds: Iterable[int],
                      threads: int = 1) -> list[RadialField]:
    """Fields for several seeds sharing one kernel matrix pass.

    Values match ``simulate_field`` per seed up to the floating-point
    reduction order of the matrix product.
    """
    seeds: Sequence[int] = list(seeds)
    if not seeds:
        return []
    part = cached_partition(spec.domain, config.N)
    centers = _cached_centers(spec.domain, config.N)
    clamp = _resolve_clamp(spec, config)
    areas = np.full(part.n, part.target_area)
    L = np.stack([sample_basis(spec.basis, areas, s, threads) for s in seeds], axis=1)
    dirs, th, ph = _grid(spec, config)
    vals = _sum_rows(spec.kernel, dirs, centers, L, clamp, threads)
    return [
        RadialField(dirs, _finish(vals[:, i].copy(), spec), spec,
                    replace(config, seed=int(s), clamp_delta=clamp), th, ph)
        for i, s in enumerate(seeds)
    ]
