"""Special functions and Gauss-Legendre quadrature, plus the log-log regression used by the fits.

Everything here is pure and vectorised over numpy arrays.  The special
functions are implemented in-repo (series plus asymptotics) so that the
numeric core is reproducible bit-for-bit across platforms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, FitError, IntegrationError

__all__ = [
    "QuadratureSpec",
    "LogLogFit",
    "bessel_i0",
    "bessel_i0e",
    "log_gamma",
    "sinh_ratio",
    "gauss_legendre",
    "panel_rule",
    "graded_rule",
    "composite_rule",
    "integrate_1d",
    "fit_loglog",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Discretisation settings for one- and two-dimensional quadrature.

    ``node_count_outer`` / ``node_count_inner`` are Gauss-Legendre orders per
    smooth segment of the outer and inner integration variable.  Graded
    panels near singular points use ``graded_order`` nodes each and shrink
    geometrically by ``grading_ratio`` over ``grading_levels`` levels.
    """

    node_count_outer: int = 256
    node_count_inner: int = 256
    singularity_split: float = 0.5
    graded_order: int = 16
    grading_levels: int = 24
    grading_ratio: float = 0.2

    def __post_init__(self):
        if self.node_count_outer < 8 or self.node_count_inner < 8:
            raise DomainError("node counts must be >= 8")
        if not 0.0 < self.singularity_split <= math.pi:
            raise DomainError("singularity_split must lie in (0, pi]")
        if self.graded_order < 2 or self.grading_levels < 1:
            raise DomainError("graded rule needs order >= 2 and >= 1 level")
        if not 0.0 < self.grading_ratio < 1.0:
            raise DomainError("grading_ratio must lie in (0, 1)")

    def to_dict(self) -> dict:
        return {
            "node_count_outer": self.node_count_outer,
            "node_count_inner": self.node_count_inner,
            "singularity_split": self.singularity_split,
            "graded_order": self.graded_order,
            "grading_levels": self.grading_levels,
            "grading_ratio": self.grading_ratio,
        }


@dataclass(frozen=True)
class LogLogFit:
    """Least-squares line through (ln theta, ln y)."""

    slope: float
    intercept: float
    r_squared: float
    theta_range: tuple[float, float]


def _scalar_or_array(out: np.ndarray, like) -> float | np.ndarray:
    if np.ndim(like) == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# special functions

_I0_SERIES_MAX = 25.0


def _i0e_asymptotic(x: np.ndarray) -> np.ndarray:
    # e^{-x} I0(x) ~ (2 pi x)^{-1/2} sum ((2k-1)!!)^2 / (k! 8^k x^k); for
    # x >= 25 the smallest term is below 1e-20 well before k = 40
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, 41):
        term = term * (2 * k - 1) ** 2 / (8.0 * k * x)
        total = total + term
    return total / np.sqrt(2.0 * np.pi * x)


def _i0_series(x: np.ndarray) -> np.ndarray:
    y = 0.25 * x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, 200):
        term = term * y / (k * k)
        total = total + term
        if np.all(term <= 1e-17 * total):
            break
    return total


def bessel_i0e(x) -> float | np.ndarray:
    """Exponentially scaled modified Bessel function ``exp(-x) * I0(x)``."""
    xa = np.abs(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(xa)):
        raise DomainError("bessel_i0e needs finite arguments")
    out = np.empty_like(xa)
    small = xa < _I0_SERIES_MAX
    if np.any(small):
        xs = xa[small]
        out[small] = _i0_series(xs) * np.exp(-xs)
    if np.any(~small):
        out[~small] = _i0e_asymptotic(xa[~small])
    return _scalar_or_array(out, x)


def bessel_i0(x) -> float | np.ndarray:
    """Modified Bessel function of the first kind of order zero.

    Power series below 25, Hankel asymptotic expansion above; both branches
    reach about 1e-15 relative accuracy.
    """
    xa = np.abs(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(xa)):
        raise DomainError("bessel_i0 needs finite arguments")
    out = np.empty_like(xa)
    small = xa < _I0_SERIES_MAX
    if np.any(small):
        out[small] = _i0_series(xa[small])
    if np.any(~small):
        xl = xa[~small]
        out[~small] = _i0e_asymptotic(xl) * np.exp(xl)
    return _scalar_or_array(out, x)


_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
# Stirling correction coefficients B_{2k} / (2k (2k-1))
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _lgamma_lanczos(x: np.ndarray) -> np.ndarray:
    z = x - 1.0
    acc = np.full_like(z, _LANCZOS_COEF[0])
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc = acc + c / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * np.log(t) - t + np.log(acc)


def _lgamma_stirling(x: np.ndarray) -> np.ndarray:
    inv = 1.0 / x
    inv2 = inv * inv
    corr = np.zeros_like(x)
    for c in reversed(_STIRLING):
        corr = corr * inv2 + c
    return (x - 0.5) * np.log(x) - x + _HALF_LOG_2PI + corr * inv


def log_gamma(x) -> float | np.ndarray:
    """Natural log of the gamma function for ``x > 0``."""
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)) or np.any(xa <= 0.0):
        raise DomainError("log_gamma is defined for finite x > 0")
    out = np.empty_like(xa)
    low = xa < 0.5
    mid = (xa >= 0.5) & (xa < 10.0)
    high = xa >= 10.0
    if np.any(low):
        xl = xa[low]
        # reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        out[low] = math.log(math.pi) - np.log(np.sin(np.pi * xl)) - _lgamma_lanczos(1.0 - xl)
    if np.any(mid):
        out[mid] = _lgamma_lanczos(xa[mid])
    if np.any(high):
        out[high] = _lgamma_stirling(xa[high])
    return _scalar_or_array(out, x)


def sinh_ratio(a, x) -> float | np.ndarray:
    """``sinh(a*x)/x`` continued by its limit ``a`` at ``x = 0``."""
    a_arr = np.asarray(a, dtype=float)
    x_arr = np.asarray(x, dtype=float)
    if np.any(a_arr <= 0.0) or np.any(x_arr < 0.0):
        raise DomainError("sinh_ratio needs a > 0 and x >= 0")
    a_b, x_b = np.broadcast_arrays(a_arr, x_arr)
    ax = a_b * x_b
    out = np.empty(ax.shape, dtype=float)
    tiny = ax < 1e-4
    z2 = ax[tiny] ** 2
    out[tiny] = a_b[tiny] * (1.0 + z2 / 6.0 * (1.0 + z2 / 20.0))
    big = ~tiny
    out[big] = np.sinh(ax[big]) / x_b[big]
    if out.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# quadrature rules


@lru_cache(maxsize=64)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int, lo: float = -1.0, hi: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point Gauss-Legendre rule on [lo, hi]."""
    x, w = _leggauss(int(n))
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def composite_rule(edges: Sequence[float], n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre on every panel between consecutive edges."""
    edges = np.asarray(edges, dtype=float)
    x, w = _leggauss(int(n))
    lo = edges[:-1, None]
    half = 0.5 * np.diff(edges)[:, None]
    return (lo + half * (x + 1.0)).ravel(), (half * w).ravel()


def graded_rule(lo: float, hi: float, toward: str, spec: QuadratureSpec,
                order: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Geometrically graded composite rule refined toward one or both ends.

    ``toward`` is ``"lo"``, ``"hi"`` or ``"both"``.  Panel widths shrink by
    ``spec.grading_ratio`` per level.  For an endpoint singularity
    ``t**(-q)`` the error is about the mass of the innermost panel,
    ``(ratio**levels)**(1 - q)``, so it falls geometrically with the level
    count and is best for mild singularities.
    """
    if hi <= lo:
        return np.empty(0), np.empty(0)
    order = order or spec.graded_order
    levels = spec.grading_levels
    ratio = spec.grading_ratio
    if toward == "both":
        mid = 0.5 * (lo + hi)
        x1, w1 = graded_rule(lo, mid, "lo", spec, order)
        x2, w2 = graded_rule(mid, hi, "hi", spec, order)
        return np.concatenate([x1, x2]), np.concatenate([w1, w2])
    fractions = ratio ** np.arange(levels, -1, -1, dtype=float)
    fractions = np.concatenate([[0.0], fractions])
    if toward == "lo":
        edges = lo + (hi - lo) * fractions
    elif toward == "hi":
        edges = (hi - (hi - lo) * fractions)[::-1]
    else:
        raise ValueError(f"unknown grading direction {toward!r}")
    return composite_rule(edges, order)


def panel_rule(lo: float, hi: float, spec: QuadratureSpec, *, order: int,
               breaks: Sequence[float] = (), singular: Sequence[float] = ()
               ) -> tuple[np.ndarray, np.ndarray]:
    """Rule for [lo, hi] split at ``breaks`` and graded toward ``singular``.

    Segments touching a singular point get a graded rule toward it; other
    segments get a single ``order``-point Gauss-Legendre panel.
    """
    pts = {lo, hi}
    sing = [s for s in singular if lo <= s <= hi]
    for b in list(breaks) + sing:
        if lo < b < hi:
            pts.add(float(b))
    edges = sorted(pts)
    xs, ws = [], []
    scale = max(hi - lo, 1.0)
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a <= 1e-15 * scale:
            continue
        near_a = any(abs(a - s) <= 1e-15 * scale for s in sing)
        near_b = any(abs(b - s) <= 1e-15 * scale for s in sing)
        if near_a and near_b:
            x, w = graded_rule(a, b, "both", spec)
        elif near_a:
            x, w = graded_rule(a, b, "lo", spec)
        elif near_b:
            x, w = graded_rule(a, b, "hi", spec)
        else:
            x, w = gauss_legendre(order, a, b)
        xs.append(x)
        ws.append(w)
    if not xs:
        return np.empty(0), np.empty(0)
    return np.concatenate(xs), np.concatenate(ws)


def integrate_1d(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
                 spec: QuadratureSpec | None = None, *,
                 singularity: float | None = None, panels: int = 1) -> float:
    """Composite Gauss-Legendre integral of a vectorised ``f`` over [lo, hi].

    If ``singularity=q`` is given, ``f`` may behave like ``(t - lo)**(-q)``
    with ``q < 1``.  The panel ``[lo, lo + spec.singularity_split]`` is then
    integrated after the substitution ``t = lo + h * s**(1/(1-q))``, which
    turns that behaviour into a smooth integrand.
    """
    spec = spec or QuadratureSpec()
    n = spec.node_count_outer
    if hi <= lo:
        if hi == lo:
            return 0.0
        return -integrate_1d(f, hi, lo, spec, singularity=singularity, panels=panels)
    total = 0.0
    start = lo
    if singularity is not None:
        if not singularity < 1.0:
            raise DomainError("endpoint singularity must be integrable (q < 1)")
        h = min(spec.singularity_split, hi - lo)
        # p = 1/(1-q) explodes as q -> 1; beyond 10 the graded s-panel does better
        p = min(1.0 / (1.0 - singularity), 10.0)
        # smooth parts of f pick up fractional powers of s under the
        # substitution, so the s-panel is still graded toward 0
        s, w = graded_rule(0.0, 1.0, "lo", spec)
        t = lo + h * s ** p
        jac = h * p * s ** (p - 1.0)
        # nodes that underflow onto the singular endpoint carry no weight
        keep = s ** p > 1e-150
        t, w, jac = t[keep], w[keep], jac[keep]
        vals = np.asarray(f(t), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise IntegrationError("non-finite integrand samples")
        total += float(np.dot(w * jac, vals))
        start = lo + h
    if hi > start:
        x, w = composite_rule(np.linspace(start, hi, panels + 1), n)
        vals = np.asarray(f(x), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise IntegrationError("non-finite integrand samples")
        total += float(np.dot(w, vals))
    return total


# ---------------------------------------------------------------------------
# regression


def fit_loglog(thetas, ys) -> LogLogFit:
    """Ordinary least squares of ``ln y`` on ``ln theta``."""
    t = np.asarray(thetas, dtype=float)
    y = np.asarray(ys, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise FitError("thetas and ys must be 1-d arrays of equal length")
    if t.size < 5:
        raise FitError(f"need at least 5 points, got {t.size}")
    if np.any(~np.isfinite(t)) or np.any(~np.isfinite(y)) or np.any(t <= 0) or np.any(y <= 0):
        raise FitError("log-log fit requires finite, strictly positive values")
    lx, ly = np.log(t), np.log(y)
    mx, my = lx.mean(), ly.mean()
    sxx = np.sum((lx - mx) ** 2)
    if sxx == 0.0:
        raise FitError("all thetas are equal")
    slope = float(np.sum((lx - mx) * (ly - my)) / sxx)
    intercept = float(my - slope * mx)
    ss_tot = float(np.sum((ly - my) ** 2))
    ss_res = float(np.sum((ly - intercept - slope * lx) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    r2 = min(1.0, max(0.0, r2))
    return LogLogFit(slope, intercept, r2, (float(t.min()), float(t.max())))
