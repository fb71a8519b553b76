"""Fractal index, the small-angle constant b and the Hausdorff dimension map.

A correlation function has fractal index alpha with constant b when
``(1 - C(theta)) / theta**alpha -> b`` as theta -> 0.  The surface of the
associated Gaussian particle then has Hausdorff dimension ``3 - alpha/2``
on the sphere and ``2 - alpha/2`` on the circle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .correlation import CorrelationCurve
from .errors import DomainError, FitError, IntegrationError
from .kernels import Kernel, power_c2_series
from .numerics import QuadratureSpec, composite_rule, fit_loglog, graded_rule, log_gamma

__all__ = [
    "FractalProfile",
    "hausdorff_dimension",
    "fractal_index_closed",
    "bq_closed",
    "bq_numeric",
    "fit_fractal_index",
    "DEFAULT_FIT_WINDOW",
]

DEFAULT_FIT_WINDOW = (1e-3, 5e-2)


@dataclass(frozen=True)
class FractalProfile:
    alpha: float
    b: Optional[float]
    source: str
    domain: str
    hausdorff_dim: float
    r_squared: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "b": self.b,
            "dimension": self.hausdorff_dim,
            "source": self.source,
        }


def hausdorff_dimension(alpha: float, domain: str) -> float:
    if not 0.0 < alpha <= 2.0:
        raise DomainError(f"fractal index must lie in (0, 2], got {alpha}")
    if domain == "sphere":
        return 3.0 - alpha / 2.0
    if domain == "circle":
        return 2.0 - alpha / 2.0
    raise DomainError(f"unknown domain {domain!r}")


def fractal_index_closed(k: Kernel) -> FractalProfile:
    """Theoretical fractal index of each kernel family.

    vMF kernels are smooth (alpha = 2) and uniform kernels are linear at the
    origin (alpha = 1).  The power kernel gives alpha = 2 - 2q on the sphere,
    with b known in closed form, and alpha = 1 - 2q on the circle.
    """
    b = None
    if k.family == "vmf":
        alpha = 2.0
    elif k.family == "uniform":
        alpha = 1.0
    elif k.domain == "sphere":
        alpha = 2.0 - 2.0 * k.parameter
        b = bq_closed(k.parameter)
    else:
        # negative q gives a smooth correlation on the circle
        alpha = 1.0 - 2.0 * k.parameter if k.parameter > 0 else 2.0
    return FractalProfile(alpha, b, "closed_form", k.domain, hausdorff_dimension(alpha, k.domain))


def _check_q(q: float) -> float:
    q = float(q)
    if not 0.0 < q < 1.0:
        raise DomainError("q must lie in (0, 1)")
    return q


def bq_closed(q: float, c2: float | None = None) -> float:
    """Limit of (1 - C(theta)) / theta**(2-2q) for the sphere power kernel, gamma-function form."""
    q = _check_q(q)
    c2 = power_c2_series(q) if c2 is None else c2
    log_ratio = (2.0 * log_gamma(1.0 - 0.5 * q) + log_gamma(q)
                 - 2.0 * log_gamma(0.5 * q) - log_gamma(1.0 - q))
    return math.pi ** (2.0 * q + 1.0) / (c2 * (1.0 - q) ** 2) * math.exp(log_ratio)


def _azimuthal_increment(q: float, x: np.ndarray, phi: np.ndarray, w_phi: np.ndarray) -> np.ndarray:
    """f(x) = int_0^pi (x^-q - (x^2 + 1 - 2x cos phi)^(-q/2)) dphi, for a vector of x."""
    xx = x[:, None]
    s2 = np.sin(0.5 * phi)[None, :] ** 2
    out = np.empty((x.size, phi.size))
    near = xx[:, 0] <= 2.0
    # (x-1)^2 + 4x sin^2(phi/2) keeps the distance accurate around x = 1, phi = 0
    rho2 = (xx[near] - 1.0) ** 2 + 4.0 * xx[near] * s2
    with np.errstate(divide="ignore"):
        out[near] = xx[near] ** (-q) - rho2 ** (-0.5 * q)
    # far from the unit circle: x^-q (1 - (1 + eps)^(-q/2)) without cancellation
    xf = xx[~near]
    eps = (1.0 - 2.0 * xf * np.cos(phi)[None, :]) / (xf * xf)
    out[~near] = -(xf ** (-q)) * np.expm1(-0.5 * q * np.log1p(eps))
    out = np.where(np.isfinite(out), out, 0.0)
    return out @ w_phi


def _tail(q: float, x_max: float) -> float:
    """int_{x_max}^inf x^(1-q) f(x) dx from the large-x expansion of f."""
    c = -math.pi * q * q
    t1 = x_max ** (-2 * q) / (8 * q)
    t2 = (q + 2) ** 2 / (64 * (2 + 2 * q)) * x_max ** (-2 - 2 * q)
    t3 = (q + 2) ** 2 * (q + 4) ** 2 / (2304 * (4 + 2 * q)) * x_max ** (-4 - 2 * q)
    return c * (t1 + t2 + t3)


def bq_numeric(q: float, quad: QuadratureSpec | None = None, x_max: float = 64.0,
               c2: float | None = None) -> float:
    """The same constant as ``bq_closed`` from its defining double integral.

    b_q = (2 pi^(2q) / c2) int_0^inf x^(1-q) int_0^pi (x^-q - (x^2+1-2x cos phi)^(-q/2)) dphi dx

    The x-range is split at 1/2, 1 and 2 with panels graded toward 0 and 1.
    [2, x_max] uses geometric panels, and the part beyond x_max is integrated
    analytically from the large-x expansion (the integrand decays like
    x^(-1-2q), far too slowly for plain truncation when q is small).
    """
    q = _check_q(q)
    quad = quad or QuadratureSpec()
    c2 = power_c2_series(q) if c2 is None else c2
    phi, w_phi = graded_rule(0.0, math.pi, "lo", quad, order=2 * quad.graded_order)
    # the innermost panel [0, x0] is integrated from f(x) ~ pi x^-q - pi and
    # skipped by the graded rule; x^(1-2q) is too singular there when q -> 1
    x0 = 0.5 * quad.grading_ratio ** quad.grading_levels
    head = math.pi * x0 ** (2 - 2 * q) / (2 - 2 * q) - math.pi * x0 ** (2 - q) / (2 - q)
    xg, wg = graded_rule(0.0, 0.5, "lo", quad)
    keep = xg > x0
    parts = [
        (xg[keep], wg[keep]),
        graded_rule(0.5, 1.0, "hi", quad, order=2 * quad.graded_order),
        graded_rule(1.0, 2.0, "lo", quad, order=2 * quad.graded_order),
    ]
    n_log = max(1, int(math.ceil(math.log2(x_max / 2.0))))
    parts.append(composite_rule(2.0 * (x_max / 2.0) ** (np.arange(n_log + 1) / n_log), 2 * quad.graded_order))
    total = 0.0
    for x, w in parts:
        f = _azimuthal_increment(q, x, phi, w_phi)
        total += float(np.dot(w, x ** (1.0 - q) * f))
    total += head + _tail(q, x_max)
    if not math.isfinite(total):
        raise IntegrationError("b_q double integral did not converge")
    return 2.0 * math.pi ** (2.0 * q) / c2 * total


def fit_fractal_index(curve: CorrelationCurve, window: tuple[float, float] = DEFAULT_FIT_WINDOW,
                      min_points: int = 8) -> FractalProfile:
    """Regress ln(1 - C) on ln(theta) over small angles to recover (alpha, b)."""
    lo, hi = window
    t = curve.thetas
    sel = (t >= lo) & (t <= hi) & (t > 0)
    if np.count_nonzero(sel) < min_points:
        raise FitError(f"need at least {min_points} curve points in {window}")
    inc = curve.increments[sel]
    if np.any(~(inc > 0)):
        raise FitError("1 - C(theta) must be positive on the fit window")
    fit = fit_loglog(t[sel], inc)
    alpha = fit.slope
    dim = hausdorff_dimension(min(max(alpha, 1e-12), 2.0), curve.kernel.domain)
    return FractalProfile(alpha, math.exp(fit.intercept), "fitted", curve.kernel.domain, dim,
                          fit.r_squared)
