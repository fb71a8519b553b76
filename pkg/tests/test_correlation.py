import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from starparticles.correlation import (
    CorrelationCurve,
    corr_closed_form,
    corr_quadrature_circle,
    corr_quadrature_sphere,
    great_circle_angle,
    has_closed_form,
    one_minus_corr_sphere,
    sample_curve,
)
from starparticles.errors import DomainError
from starparticles.kernels import Kernel


def test_great_circle_angle():
    assert great_circle_angle(0.3, 0.3, 0.0) == pytest.approx(0.0, abs=1e-16)
    assert great_circle_angle(0.0, 1.2, 2.0) == pytest.approx(1.2)
    assert great_circle_angle(math.pi / 2, math.pi / 2, 1.0) == pytest.approx(1.0)
    assert great_circle_angle(0.1, math.pi - 0.1, math.pi) == pytest.approx(math.pi)
    # tiny angles keep relative accuracy
    assert great_circle_angle(1.0, 1.0 + 1e-10, 0.0) == pytest.approx(1e-10, rel=1e-6)


@settings(max_examples=50)
@given(st.floats(0, math.pi), st.floats(0, math.pi), st.floats(0, 2 * math.pi))
def test_great_circle_angle_matches_arccos(t, e, p):
    c = math.sin(t) * math.sin(e) * math.cos(p) + math.cos(t) * math.cos(e)
    assert great_circle_angle(t, e, p) == pytest.approx(math.acos(max(-1, min(1, c))), abs=1e-7)


def test_uniform_half_sphere_is_linear():
    k = Kernel("uniform", math.pi / 2)
    t = np.linspace(0, math.pi, 13)
    assert np.allclose(corr_closed_form(k, t), 1 - t / math.pi, atol=1e-14)


def test_circle_uniform_closed_form():
    k = Kernel("uniform", 0.5, "circle")
    assert np.allclose(corr_closed_form(k, [0.0, 0.5, 1.0, 2.0]), [1.0, 0.5, 0.0, 0.0])


def test_circle_vmf_example():
    # I0(a sqrt(2(1 + cos theta))) / I0(2a) at a = 2, theta = pi/2
    k = Kernel("vmf", 2.0, "circle")
    expect = special.i0(2 * math.sqrt(2)) / special.i0(4.0)
    assert expect == pytest.approx(0.37625024288004666, rel=1e-14)
    assert corr_closed_form(k, math.pi / 2) == pytest.approx(expect, rel=1e-13)
    assert corr_quadrature_circle(k, math.pi / 2) == pytest.approx(expect, rel=1e-10)


def test_sphere_vmf_closed_form_formula():
    a, t = 1.5, 0.7
    s = math.sqrt(2 * (1 + math.cos(t)))
    expect = 2 * math.sinh(a * s) / (s * math.sinh(2 * a))
    assert corr_closed_form(Kernel("vmf", a), t) == pytest.approx(expect, rel=1e-13)
    assert corr_closed_form(Kernel("vmf", a), 0.0) == pytest.approx(1.0, rel=1e-14)


def test_sphere_vmf_large_precision_is_finite():
    k = Kernel("vmf", 500.0)
    c = corr_closed_form(k, np.array([0.0, 0.01, 1.0, math.pi]))
    assert np.all(np.isfinite(c)) and c[0] == pytest.approx(1.0)
    assert np.all(np.diff(c) < 0)


def test_sphere_power_quadrature_matches_frozen_oracle():
    # nested adaptive scipy quad (azimuth inside, colatitude outside), error estimate 4e-14
    oracle = 0.7308839204623455
    assert corr_quadrature_sphere(Kernel("power", 0.25), 1.0) == pytest.approx(oracle, abs=1e-10)


@pytest.mark.parametrize("family,p,domain", [
    ("vmf", 0.5, "sphere"), ("vmf", 4.0, "sphere"), ("uniform", 0.4, "sphere"),
    ("uniform", math.pi / 2, "sphere"), ("vmf", 2.0, "circle"), ("uniform", 1.0, "circle"),
])
def test_closed_form_matches_quadrature(family, p, domain):
    k = Kernel(family, p, domain)
    t = np.array([0.05, 0.3, 0.9, 1.7, 2.9])
    q = corr_quadrature_sphere(k, t) if domain == "sphere" else corr_quadrature_circle(k, t)
    assert np.max(np.abs(q - corr_closed_form(k, t))) <= 1e-6


def test_power_has_no_closed_form():
    k = Kernel("power", 0.5)
    assert not has_closed_form(k)
    assert corr_closed_form(k, 0.3) is None


def test_power_correlation_properties():
    k = Kernel("power", 0.5)
    t = np.array([1e-3, 0.01, 0.1, 0.5, 1.5, 3.0])
    inc = one_minus_corr_sphere(k, t)
    assert np.all(inc > 0) and np.all(np.diff(inc) > 0)
    assert one_minus_corr_sphere(k, 0.0) == 0.0
    # increments scale like theta^(2-2q) = theta at small lag
    assert math.log(inc[1] / inc[0]) / math.log(10) == pytest.approx(1.0, abs=0.02)


def test_circle_power_symmetric_and_bounded():
    k = Kernel("power", 0.2, "circle")
    c = corr_quadrature_circle(k, np.array([0.0, 0.4, 1.0, 2.5, math.pi]))
    assert c[0] == pytest.approx(1.0, abs=1e-8)
    assert np.all(np.abs(c) <= 1 + 1e-9)
    assert np.all(np.diff(c) < 0)


def test_domain_checks():
    with pytest.raises(DomainError):
        corr_closed_form(Kernel("vmf", 1.0), -0.1)
    with pytest.raises(DomainError):
        corr_quadrature_circle(Kernel("vmf", 1.0), 0.5)
    with pytest.raises(DomainError):
        corr_quadrature_sphere(Kernel("vmf", 1.0, "circle"), 0.5)
    with pytest.raises(DomainError):
        sample_curve(Kernel("vmf", 1.0), [0.2, 0.1])


def test_sample_curve_and_csv():
    curve = sample_curve(Kernel("uniform", 0.5, "circle"), [0.0, 0.25, 0.5])
    assert curve.method == "closed_form"
    assert curve.to_csv() == "theta,C\n0,1\n0.25,0.75\n0.5,0.5\n"
    pc = sample_curve(Kernel("power", 0.5), [0.01, 0.1])
    assert pc.method == "quadrature"
    assert np.allclose(pc.values, 1 - pc.increments)
    assert isinstance(pc, CorrelationCurve)
