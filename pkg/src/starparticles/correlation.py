"""Isotropic correlation functions C(theta) on the circle and the sphere.

Closed forms exist for the von Mises-Fisher and uniform kernels; the power
kernel is evaluated by quadrature only.  The quadrature routines compute
``1 - C(theta)`` from the difference ``k(eta) - k(angle)`` rather than
subtracting two nearly equal integrals, so small-angle increments keep
their relative accuracy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, IntegrationError
from .kernels import Kernel, _kernel_values, kernel_constants
from .numerics import (
    QuadratureSpec,
    bessel_i0e,
    gauss_legendre,
    graded_rule,
    panel_rule,
    sinh_ratio,
)

__all__ = [
    "CorrelationCurve",
    "corr_closed_form",
    "has_closed_form",
    "corr_quadrature_sphere",
    "corr_quadrature_circle",
    "one_minus_corr_sphere",
    "sample_curve",
    "great_circle_angle",
]


@dataclass
class CorrelationCurve:
    thetas: np.ndarray
    values: np.ndarray
    kernel: Kernel
    method: str
    # 1 - C(theta) evaluated directly; avoids cancellation for tiny angles
    increments: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.thetas = np.asarray(self.thetas, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.increments is None:
            self.increments = 1.0 - self.values
        else:
            self.increments = np.asarray(self.increments, dtype=float)

    def to_csv(self) -> str:
        lines = ["theta,C"]
        lines += [f"{t:.17g},{c:.17g}" for t, c in zip(self.thetas, self.values)]
        return "\n".join(lines) + "\n"


def _check_theta(theta) -> np.ndarray:
    t = np.asarray(theta, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < 0.0) or np.any(t > math.pi * (1 + 1e-15)):
        raise DomainError("theta must lie in [0, pi]")
    return np.minimum(t, math.pi)


def great_circle_angle(theta, eta, phi):
    """Angle between directions at colatitudes theta, eta and azimuth gap phi.

    Equivalent to ``arccos(sin theta sin eta cos phi + cos theta cos eta)``
    but written as ``2 atan2(sqrt(h), sqrt(1 - h))`` with both haversine
    terms formed as sums of nonnegative parts, so no clamping is needed and
    small angles are accurate.
    """
    st_se = np.sin(theta) * np.sin(eta)
    h = np.sin(0.5 * (eta - theta)) ** 2 + st_se * np.sin(0.5 * phi) ** 2
    hc = np.cos(0.5 * (eta + theta)) ** 2 + st_se * np.cos(0.5 * phi) ** 2
    return 2.0 * np.arctan2(np.sqrt(h), np.sqrt(hc))


# ---------------------------------------------------------------------------
# closed forms


def has_closed_form(k: Kernel) -> bool:
    return k.family in ("vmf", "uniform")


def _sphere_vmf(a: float, t: np.ndarray) -> np.ndarray:
    s = 2.0 * np.cos(0.5 * t)  # sqrt(2 (1 + cos t)), accurate near pi
    s = np.maximum(s, 0.0)
    if 2.0 * a < 700.0:
        return 2.0 / math.sinh(2.0 * a) * sinh_ratio(a, s)
    # large precision: sinh(a s) / sinh(2a) in log space
    with np.errstate(over="ignore", divide="ignore"):
        ratio = np.exp(a * (s - 2.0)) * (-np.expm1(-2.0 * a * s)) / (-math.expm1(-4.0 * a))
        out = 2.0 * ratio / s
    return np.where(s > 0, out, 4.0 * a * math.exp(-2.0 * a))


def _sphere_uniform(r: float, t: np.ndarray) -> np.ndarray:
    cr = math.cos(r)
    arg1 = (np.cos(t) - cr * cr) / (1.0 - cr * cr)
    # (1 - cos t)/sin t = tan(t/2) stays finite at t = 0
    cot_r = cr / math.sin(r)
    arg2 = cot_r * np.tan(0.5 * t)
    arg1 = np.clip(arg1, -1.0, 1.0)
    arg2 = np.clip(arg2, -1.0, 1.0)
    val = (math.pi - np.arccos(arg1) - 2.0 * cr * np.arccos(arg2)) / (math.pi * (1.0 - cr))
    return np.where(t <= 2.0 * r, val, 0.0)


def _circle_vmf(a: float, t: np.ndarray) -> np.ndarray:
    s = np.maximum(2.0 * np.cos(0.5 * t), 0.0)
    return bessel_i0e(a * s) / bessel_i0e(2.0 * a) * np.exp(a * (s - 2.0))


def _circle_uniform(r: float, t: np.ndarray) -> np.ndarray:
    return np.where(t <= 2.0 * r, 1.0 - t / (2.0 * r), 0.0)


def corr_closed_form(k: Kernel, theta):
    """Closed-form correlation, or ``None`` when the family has none (power)."""
    t = _check_theta(theta)
    if not has_closed_form(k):
        return None
    if k.domain == "sphere":
        fn = _sphere_vmf if k.family == "vmf" else _sphere_uniform
    else:
        fn = _circle_vmf if k.family == "vmf" else _circle_uniform
    out = np.asarray(fn(k.parameter, t), dtype=float)
    if out.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# sphere quadrature


def _uniform_cap_azimuth(r: float, theta: float, eta: np.ndarray) -> np.ndarray:
    """Half-width in azimuth of the set {phi : angle(theta, eta, phi) <= r}."""
    denom = math.sin(theta) * np.sin(eta)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = (math.cos(r) - math.cos(theta) * np.cos(eta)) / denom
    # denom == 0 means the angle does not depend on phi
    g = np.where(denom > 0, g, np.where(np.abs(theta - eta) <= r, -2.0, 2.0))
    return np.arccos(np.clip(g, -1.0, 1.0))


def _sphere_increment_uniform(k: Kernel, theta: float, quad: QuadratureSpec) -> float:
    r = k.parameter
    # integrand is 1(angle > r) on eta < r; the azimuth cut makes it piecewise constant
    feats = [b for b in (theta - r, r - theta) if 0.0 < b < r]
    eta, w_eta = panel_rule(0.0, r, quad, order=quad.node_count_outer, singular=feats)
    cut = _uniform_cap_azimuth(r, theta, eta)
    return float(np.dot(w_eta, np.sin(eta) * (math.pi - cut)))


def _sphere_increment_generic(k: Kernel, theta: float, quad: QuadratureSpec) -> float:
    singular = k.family == "power"
    if singular:
        feats = [0.0, theta, math.pi - theta]
        eta, w_eta = panel_rule(0.0, math.pi, quad, order=quad.node_count_outer, singular=feats)
        phi, w_phi = graded_rule(0.0, math.pi, "both", quad)
    else:
        eta, w_eta = gauss_legendre(quad.node_count_outer, 0.0, math.pi)
        phi, w_phi = gauss_legendre(quad.node_count_inner, 0.0, math.pi)
    total = 0.0
    # chunk over eta to bound memory
    step = max(1, 400_000 // max(phi.size, 1))
    p = k.parameter
    for i in range(0, eta.size, step):
        e = eta[i:i + step, None]
        ang = great_circle_angle(theta, e, phi[None, :])
        if singular:
            # the -1 terms cancel: k(e) - k(ang) = pi^q (e^-q - ang^-q)
            with np.errstate(divide="ignore"):
                diff = math.pi ** p * (e ** (-p) - ang ** (-p))
            diff = np.where(ang > 0.0, diff, 0.0)
        else:
            diff = _kernel_values(k, e) - _kernel_values(k, ang)
        inner = diff @ w_phi
        outer = _kernel_values(k, eta[i:i + step]) * np.sin(eta[i:i + step]) * inner
        total += float(np.dot(w_eta[i:i + step], outer))
    if not math.isfinite(total):
        raise IntegrationError("non-finite accumulation in sphere correlation quadrature")
    return total


def one_minus_corr_sphere(k: Kernel, theta, quad: QuadratureSpec | None = None,
                          c2: float | None = None):
    """``1 - C(theta)`` on the sphere by tensor-product quadrature.

    Uses ``c2 (1 - C)/2 = int_0^pi k(eta) sin(eta) int_0^pi (k(eta) - k(a)) dphi deta``
    with ``a`` the great-circle angle, which is the correlation integral
    with the normalisation term moved inside.
    """
    if k.domain != "sphere":
        raise DomainError("one_minus_corr_sphere needs a sphere kernel")
    quad = quad or QuadratureSpec()
    t = _check_theta(theta)
    if c2 is None:
        c2 = kernel_constants(k, quad).c2
    fn = _sphere_increment_uniform if k.family == "uniform" else _sphere_increment_generic
    out = np.array([2.0 / c2 * fn(k, float(x), quad) if x > 0 else 0.0 for x in np.ravel(t)])
    if np.ndim(theta) == 0:
        return float(out[0])
    return out.reshape(np.shape(t))


def corr_quadrature_sphere(k: Kernel, theta, quad: QuadratureSpec | None = None):
    """Correlation C(theta) of the smoothed field on the sphere, by quadrature."""
    d = one_minus_corr_sphere(k, theta, quad)
    return 1.0 - d


# ---------------------------------------------------------------------------
# circle quadrature


def corr_quadrature_circle(k: Kernel, theta, quad: QuadratureSpec | None = None):
    """Correlation on the circle from the four-piece convolution integral.

    C(theta) = (1/c2) [ int_{pi-theta}^{pi} k(p) k(2pi-p-theta)
                      + int_0^{pi-theta} k(p) k(theta+p)
                      + int_0^{theta} k(p) k(theta-p)
                      + int_theta^{pi} k(p) k(p-theta) ]
    """
    if k.domain != "circle":
        raise DomainError("corr_quadrature_circle needs a circle kernel")
    quad = quad or QuadratureSpec()
    t = _check_theta(theta)
    c2 = kernel_constants(k, quad).c2
    out = np.array([_circle_sum(k, float(x), quad) / c2 for x in np.ravel(t)])
    if np.ndim(theta) == 0:
        return float(out[0])
    return out.reshape(np.shape(t))


def _circle_sum(k: Kernel, th: float, quad: QuadratureSpec) -> float:
    pi = math.pi
    nonsmooth = k.family == "power"
    r = k.parameter if k.family == "uniform" else None
    # (lo, hi, second argument as a function of p, points where it vanishes,
    #  points where it equals r)
    pieces = [
        (pi - th, pi, lambda p: 2 * pi - p - th, [2 * pi - th], [2 * pi - th - (r or 0)]),
        (0.0, pi - th, lambda p: th + p, [-th], [(r or 0) - th]),
        (0.0, th, lambda p: th - p, [th], [th - (r or 0)]),
        (th, pi, lambda p: p - th, [th], [th + (r or 0)]),
    ]
    total = 0.0
    for lo, hi, arg, zeros, hits in pieces:
        if hi - lo <= 0.0:
            continue
        singular = [0.0] + zeros if nonsmooth else []
        breaks = ([r] + hits) if r is not None else []
        x, w = panel_rule(lo, hi, quad, order=quad.node_count_outer, breaks=breaks, singular=singular)
        second = np.clip(arg(x), 0.0, pi)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = _kernel_values(k, x) * _kernel_values(k, second)
        vals = np.where(np.isfinite(vals), vals, 0.0)
        total += float(np.dot(w, vals))
    if not math.isfinite(total):
        raise IntegrationError("non-finite accumulation in circle correlation quadrature")
    return total


# ---------------------------------------------------------------------------


def sample_curve(k: Kernel, thetas, quad: QuadratureSpec | None = None) -> CorrelationCurve:
    """C(theta) on a grid, closed form when available and quadrature otherwise."""
    t = _check_theta(np.atleast_1d(thetas))
    if t.ndim != 1 or np.any(np.diff(t) <= 0):
        raise DomainError("thetas must be strictly increasing")
    if has_closed_form(k):
        vals = np.asarray(corr_closed_form(k, t), dtype=float)
        return CorrelationCurve(t, vals, k, "closed_form")
    quad = quad or QuadratureSpec()
    if k.domain == "sphere":
        inc = one_minus_corr_sphere(k, t, quad)
        return CorrelationCurve(t, 1.0 - inc, k, "quadrature", increments=inc)
    vals = corr_quadrature_circle(k, t, quad)
    return CorrelationCurve(t, vals, k, "quadrature")
