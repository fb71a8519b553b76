"""Celestial body presets: mean radius and topographic range in kilometres."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .kernels import Kernel, kernel_constants
from .levy_basis import FieldMoments, LevyBasisSpec, invert_parameters
from .simulate import ParticleSpec, SimulationConfig

__all__ = ["CelestialPreset", "PRESETS", "get_preset", "DESK_SCALE", "FULL_SCALE"]

DESK_SCALE = {"M1": 200, "M2": 400, "N": 100_000}
FULL_SCALE = {"M1": 200, "M2": 400, "N": 1_000_000}


@dataclass(frozen=True)
class CelestialPreset:
    name: str
    r0: float
    d_plus: float
    d_minus: float
    q: float = 0.5
    truncation_c: Optional[float] = None

    @property
    def kernel(self) -> Kernel:
        return Kernel("power", self.q, "sphere")

    @property
    def target(self) -> FieldMoments:
        # mu_X = r0 and sigma_X = d+ - d-, i.e. mu = r0 / c1, sigma2 = (d+ - d-)^2 / c2
        return FieldMoments(self.r0, (self.d_plus - self.d_minus) ** 2)

    def basis(self) -> LevyBasisSpec:
        return invert_parameters(self.target, kernel_constants(self.kernel), "gaussian")

    def particle(self) -> ParticleSpec:
        return ParticleSpec(self.kernel, self.basis(), self.truncation_c)

    def config(self, seed: int, full_scale: bool = False, **overrides) -> SimulationConfig:
        sizes = dict(FULL_SCALE if full_scale else DESK_SCALE)
        sizes.update({k: v for k, v in overrides.items() if v is not None})
        return SimulationConfig(seed=seed, **sizes)


PRESETS = {
    "venus": CelestialPreset("venus", 6051.8, 11.0, -3.0),
    "dry_earth": CelestialPreset("dry_earth", 6367.2, 8.8, -11.0),
    "wet_earth": CelestialPreset("wet_earth", 6367.2, 8.8, -11.0, truncation_c=6371.0),
    "moon": CelestialPreset("moon", 1737.1, 5.5, -12.0),
    "mars": CelestialPreset("mars", 3389.5, 21.2, -8.2),
}


def get_preset(name: str) -> CelestialPreset:
    key = name.strip().lower().replace("-", "_")
    if key == "earth":
        key = "dry_earth"
    try:
        return PRESETS[key]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
