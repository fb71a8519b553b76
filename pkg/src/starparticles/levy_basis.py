"""Independently scattered Gaussian and gamma measures on a partition.

Random draws come from counter-style substreams: cell n belongs to block
``n // BLOCK_SIZE`` and every block has its own Philox generator keyed by
``(seed, block)``.  Output is therefore the same whatever order or thread
fills the blocks.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .kernels import KernelConstants

__all__ = [
    "BASIS_KINDS",
    "BLOCK_SIZE",
    "LevyBasisSpec",
    "FieldMoments",
    "block_generator",
    "sample_basis",
    "field_moments",
    "invert_parameters",
]

BASIS_KINDS = ("gaussian", "gamma")
BLOCK_SIZE = 4096
_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class LevyBasisSpec:
    """Gaussian (mu, sigma2) or gamma (kappa = shape, tau = rate) basis."""

    kind: str
    mu: float = 0.0
    sigma2: float = 1.0
    kappa: float = 1.0
    tau: float = 1.0

    def __post_init__(self):
        if self.kind not in BASIS_KINDS:
            raise DomainError(f"basis kind must be one of {BASIS_KINDS}, got {self.kind!r}")
        vals = (self.mu, self.sigma2, self.kappa, self.tau)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("basis parameters must be finite")
        if self.kind == "gaussian" and not self.sigma2 > 0:
            raise DomainError("gaussian basis needs sigma2 > 0")
        if self.kind == "gamma" and not (self.kappa > 0 and self.tau > 0):
            raise DomainError("gamma basis needs kappa > 0 and tau > 0")

    @classmethod
    def gaussian(cls, mu: float, sigma2: float) -> "LevyBasisSpec":
        return cls("gaussian", mu=float(mu), sigma2=float(sigma2))

    @classmethod
    def gamma(cls, kappa: float, tau: float) -> "LevyBasisSpec":
        return cls("gamma", kappa=float(kappa), tau=float(tau))

    def to_dict(self) -> dict:
        if self.kind == "gaussian":
            return {"kind": self.kind, "mu": self.mu, "sigma2": self.sigma2}
        return {"kind": self.kind, "kappa": self.kappa, "tau": self.tau}


@dataclass(frozen=True)
class FieldMoments:
    mu_X: float
    sigma2_X: float


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Independent generator for one block of cells."""
    ss = np.random.SeedSequence(int(seed) & _U64, spawn_key=(int(block),))
    return np.random.Generator(np.random.Philox(ss))


def _fill_block(spec: LevyBasisSpec, areas: np.ndarray, seed: int, block: int) -> np.ndarray:
    rng = block_generator(seed, block)
    if spec.kind == "gaussian":
        return spec.mu * areas + math.sqrt(spec.sigma2) * np.sqrt(areas) * rng.standard_normal(areas.size)
    # numpy's gamma sampler handles shape < 1 through the boosted Marsaglia-Tsang method
    return rng.gamma(spec.kappa * areas) / spec.tau


def sample_basis(spec: LevyBasisSpec, areas, seed: int, threads: int = 1) -> np.ndarray:
    """One draw L_n per cell with L_n ~ N(mu a_n, sigma2 a_n) or Gamma(kappa a_n, rate tau)."""
    a = np.atleast_1d(np.asarray(areas, dtype=float))
    if np.any(~(a > 0)):
        raise DomainError("cell areas must be positive")
    starts = range(0, a.size, BLOCK_SIZE)
    work = lambda s: _fill_block(spec, a[s:s + BLOCK_SIZE], seed, s // BLOCK_SIZE)
    if threads > 1 and a.size > BLOCK_SIZE:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, starts))
    else:
        parts = [work(s) for s in starts]
    return np.concatenate(parts)


def field_moments(spec: LevyBasisSpec, consts: KernelConstants) -> FieldMoments:
    """Mean and variance of the kernel-smoothed field."""
    if spec.kind == "gaussian":
        return FieldMoments(spec.mu * consts.c1, spec.sigma2 * consts.c2)
    return FieldMoments(spec.kappa * consts.c1 / spec.tau, spec.kappa * consts.c2 / spec.tau ** 2)


def invert_parameters(target: FieldMoments, consts: KernelConstants, kind: str) -> LevyBasisSpec:
    """Basis parameters whose field has the requested mean and variance."""
    if not target.sigma2_X > 0:
        raise DomainError("target variance must be positive")
    if kind == "gaussian":
        return LevyBasisSpec.gaussian(target.mu_X / consts.c1, target.sigma2_X / consts.c2)
    if kind == "gamma":
        if not target.mu_X > 0:
            raise DomainError("a gamma basis needs a positive target mean")
        tau = target.mu_X * consts.c2 / (target.sigma2_X * consts.c1)
        return LevyBasisSpec.gamma(target.mu_X * tau / consts.c1, tau)
    raise DomainError(f"basis kind must be one of {BASIS_KINDS}, got {kind!r}")
