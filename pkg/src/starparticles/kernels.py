"""Isotropic kernel families and their moment constants c1, c2.

A kernel is a function of the angular distance between two directions.
Three one-parameter families are supported on the circle and the sphere:

* ``vmf``     : ``exp(a cos t)``, a > 0
* ``uniform`` : ``1(t <= r)``, r in (0, pi/2]
* ``power``   : ``(t/pi)**(-q) - 1``, q in (0, 1) on the sphere and
  q in (-1/2, 0) U (0, 1/2) on the circle
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError
from .numerics import QuadratureSpec, bessel_i0, integrate_1d

__all__ = [
    "FAMILIES",
    "DOMAINS",
    "Kernel",
    "KernelConstants",
    "eval_kernel",
    "kernel_constants",
    "constants_by_quadrature",
    "power_c2_series",
]

FAMILIES = ("vmf", "uniform", "power")
DOMAINS = ("circle", "sphere")

_FAMILY_ALIASES = {
    "vmf": "vmf",
    "vonmisesfisher": "vmf",
    "von_mises_fisher": "vmf",
    "uniform": "uniform",
    "power": "power",
}


def normalize_family(name: str) -> str:
    try:
        return _FAMILY_ALIASES[name.strip().lower().replace("-", "_")]
    except KeyError:
        raise DomainError(f"unknown kernel family {name!r}") from None


@dataclass(frozen=True)
class Kernel:
    """An isotropic kernel: family, its single parameter, and the domain."""

    family: str
    parameter: float
    domain: str = "sphere"

    def __post_init__(self):
        object.__setattr__(self, "family", normalize_family(self.family))
        object.__setattr__(self, "parameter", float(self.parameter))
        if self.domain not in DOMAINS:
            raise DomainError(f"domain must be one of {DOMAINS}, got {self.domain!r}")
        p = self.parameter
        if not math.isfinite(p):
            raise DomainError("kernel parameter must be finite")
        if self.family == "vmf" and not p > 0:
            raise DomainError("von Mises-Fisher precision a must be > 0")
        if self.family == "uniform" and not 0 < p <= math.pi / 2:
            raise DomainError("uniform cut-off r must lie in (0, pi/2]")
        if self.family == "power":
            if self.domain == "sphere" and not 0 < p < 1:
                raise DomainError("power kernel on the sphere needs q in (0, 1)")
            if self.domain == "circle" and not (-0.5 < p < 0.5 and p != 0):
                raise DomainError("power kernel on the circle needs q in (-1/2, 0) U (0, 1/2)")

    @property
    def parameter_name(self) -> str:
        return {"vmf": "a", "uniform": "r", "power": "q"}[self.family]

    @property
    def is_singular(self) -> bool:
        """True when k is unbounded at zero angle."""
        return self.family == "power" and self.parameter > 0

    def __call__(self, theta):
        return eval_kernel(self, theta)


@dataclass(frozen=True)
class KernelConstants:
    c1: float
    c2: float
    method: str


def _kernel_values(k: Kernel, theta: np.ndarray) -> np.ndarray:
    p = k.parameter
    if k.family == "vmf":
        return np.exp(p * np.cos(theta))
    if k.family == "uniform":
        return (theta <= p).astype(float)
    with np.errstate(divide="ignore"):
        return (theta / math.pi) ** (-p) - 1.0


def eval_kernel(k: Kernel, theta):
    """Evaluate k at angles in [0, pi]; the power kernel is +inf at 0 for q > 0."""
    t = np.asarray(theta, dtype=float)
    if np.any(~(t >= 0.0)) or np.any(t > math.pi * (1 + 1e-15)):
        raise DomainError("kernel angle must lie in [0, pi]")
    out = _kernel_values(k, np.minimum(t, math.pi))
    if out.ndim == 0:
        return float(out)
    return out


def power_c2_series(q: float, max_terms: int = 500) -> float:
    """c2 of the sphere power kernel by termwise integration of sin's Maclaurin series.

    c2 = 2 pi int_0^pi ((l/pi)^-q - 1)^2 sin(l) dl
       = 4 pi q^2 sum_j (-1)^j pi^(2j+2) / ((2j+2)! (2j+2-q) (2j+2-2q)).
    """
    q = float(q)
    if not 0.0 < q < 1.0:
        raise DomainError("power_c2_series needs q in (0, 1)")
    pi2 = math.pi * math.pi
    # ratio pi^(2j+2)/(2j+2)! carried along as `base`
    base = pi2 / 2.0
    total = 0.0
    for j in range(max_terms):
        m = 2 * j + 2
        term = base / ((m - q) * (m - 2.0 * q))
        total += term if j % 2 == 0 else -term
        if abs(term) < 1e-14 * abs(total):
            return 4.0 * math.pi * q * q * total
        base *= pi2 / ((m + 1) * (m + 2))
    raise NumericError(f"c2 series did not converge within {max_terms} terms")


def _sphere_power_c1(q: float, quad: QuadratureSpec) -> float:
    f = lambda t: ((t / math.pi) ** (-q) - 1.0) * np.sin(t)
    return 2.0 * math.pi * integrate_1d(f, 0.0, math.pi, quad, singularity=q)


def kernel_constants(k: Kernel, quad: QuadratureSpec | None = None) -> KernelConstants:
    """Moment constants c_n = integral of k(angle)^n over the circle or sphere."""
    quad = quad or QuadratureSpec()
    p = k.parameter
    if k.domain == "circle":
        if k.family == "vmf":
            return KernelConstants(2 * math.pi * bessel_i0(p), 2 * math.pi * bessel_i0(2 * p), "closed_form")
        if k.family == "uniform":
            return KernelConstants(2 * p, 2 * p, "closed_form")
        return KernelConstants(
            2 * math.pi * p / (1 - p),
            4 * math.pi * p * p / (1 - 3 * p + 2 * p * p),
            "closed_form",
        )
    if k.family == "vmf":
        return KernelConstants(
            4 * math.pi * math.sinh(p) / p, 2 * math.pi * math.sinh(2 * p) / p, "closed_form"
        )
    if k.family == "uniform":
        c = 2 * math.pi * (1 - math.cos(p))
        return KernelConstants(c, c, "closed_form")
    return KernelConstants(_sphere_power_c1(p, quad), power_c2_series(p), "series")


def constants_by_quadrature(k: Kernel, quad: QuadratureSpec | None = None) -> KernelConstants:
    """Direct Gauss-Legendre evaluation of c1, c2; a cross-check for the closed forms."""
    quad = quad or QuadratureSpec()
    weight = (lambda t: 2.0 * np.ones_like(t)) if k.domain == "circle" else (
        lambda t: 2.0 * math.pi * np.sin(t))
    breaks = [k.parameter] if k.family == "uniform" else []
    edges = [0.0] + [b for b in breaks if 0 < b < math.pi] + [math.pi]
    c = []
    for n in (1, 2):
        sing = None
        if k.family == "power":
            # k^n grows like t^(-n q); the sphere's sin(t) factor softens it by one power
            strength = n * k.parameter - (1.0 if k.domain == "sphere" else 0.0)
            sing = min(max(strength, 0.0), 0.95)
        f = lambda t, n=n: _kernel_values(k, t) ** n * weight(t)
        total = 0.0
        for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
            s = sing if i == 0 else None
            total += integrate_1d(f, a, b, quad, singularity=s, panels=4)
        c.append(total)
    return KernelConstants(c[0], c[1], "quadrature")
