import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import dblquad, quad

from hyperbubble.errors import NotConverged
from hyperbubble.geometry import axis_point, dist
from hyperbubble.quadrature import (adaptive_1d, adaptive_2d, axisym_integral, dist_polar, dist_polar_ds,
                                    point_from_polar, radial_integral, simpson_weights, sphere_area,
                                    tanh_sinh_theta, tensor_simpson)


@pytest.mark.parametrize("k,area", [(0, 2.0), (1, 2 * math.pi), (2, 4 * math.pi), (3, 2 * math.pi ** 2)])
def test_sphere_area(k, area):
    assert sphere_area(k) == pytest.approx(area, rel=1e-15)


def test_adaptive_1d_against_closed_forms():
    assert adaptive_1d(np.sin, 0, math.pi, 1e-13).value == pytest.approx(2.0, rel=1e-13)
    r = adaptive_1d(lambda x: np.sqrt(x), 0, 1, 1e-10)
    assert r.value == pytest.approx(2 / 3, rel=1e-10)
    r = adaptive_1d(lambda x: np.exp(-3 * x), 0, 30, 1e-12, breakpoints=[1, 5])
    assert r.value == pytest.approx((1 - math.exp(-90)) / 3, rel=1e-12)


def test_adaptive_1d_nonconvergence_is_reported():
    with pytest.raises(NotConverged):
        adaptive_1d(lambda x: np.sign(x - 1 / 3) * np.abs(x - 1 / 3) ** -0.99, 0, 1, 1e-14)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(0.5, 4.0))
def test_adaptive_1d_matches_scipy(a, b):
    f = lambda x: np.exp(-a * x) * np.cos(b * x) ** 2  # noqa: E731
    ref = quad(f, 0, 8, epsabs=0, epsrel=1e-13, limit=200)[0]
    assert adaptive_1d(f, 0, 8, 1e-12).value == pytest.approx(ref, rel=1e-10)


def test_adaptive_2d_against_scipy_dblquad():
    F = lambda r, t: np.exp(-r) * (1 + np.cos(t) ** 2) * r  # noqa: E731
    ref = dblquad(lambda t, r: F(r, t), 0, 6, 0, math.pi, epsabs=0, epsrel=1e-12)[0]
    got = adaptive_2d(F, (0, 6), (0, math.pi), 1e-12, rho_breaks=[1, 2]).value
    assert got == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_axisym_reduces_to_radial(n):
    f = lambda r: np.exp(-(n + 1) * r)  # noqa: E731
    a = axisym_integral(lambda r, t: f(r) + 0 * t, n, 12.0, 1e-12)
    b = radial_integral(f, n, 12.0, 1e-12)
    assert a == pytest.approx(b, rel=1e-11)


def test_geodesic_ball_volume_n3():
    R = 2.0
    exact = math.pi * (math.sinh(2 * R) - 2 * R)
    assert radial_integral(lambda r: np.ones_like(r), 3, R, 1e-13) == pytest.approx(exact, rel=1e-12)
    assert tensor_simpson(lambda r, t: np.ones_like(r), 3, R, 513, 257) == pytest.approx(exact, rel=1e-9)


def test_tensor_simpson_against_adaptive():
    F = lambda r, t: np.exp(-3 * r) * (2 + np.cos(t))  # noqa: E731
    a = axisym_integral(F, 3, 14.0, 1e-12)
    b = tensor_simpson(F, 3, 14.0)
    assert a == pytest.approx(b, rel=1e-8)


def test_simpson_weights_validate():
    with pytest.raises(ValueError):
        simpson_weights(4, 0.1)
    w = simpson_weights(5, 0.25)
    assert w.sum() == pytest.approx(1.0)


def test_tanh_sinh_angles_cover_interval():
    th, jac = tanh_sinh_theta(257)
    assert 0 <= th[0] < 1e-6 and math.pi - th[-1] < 1e-6
    assert np.all(np.diff(th) >= 0)
    h = 6.4 / 256
    assert float(simpson_weights(257, h) @ (jac * np.sin(th))) == pytest.approx(2.0, rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 15), st.floats(0, math.pi), st.floats(-15, 15))
def test_dist_polar_matches_ball_distance(rho, theta, s):
    x = point_from_polar(rho, theta)
    ref = float(dist(x, axis_point(s, 3)))
    got = float(dist_polar(rho, theta, s))
    assert got == pytest.approx(ref, rel=1e-9, abs=1e-7)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 8), st.floats(0.05, 3.0), st.floats(-6, 6))
def test_dist_polar_ds_is_scaled_derivative(rho, theta, s):
    d, g = dist_polar_ds(rho, theta, s)
    h = 1e-6
    fd = (dist_polar(rho, theta, s + h) - dist_polar(rho, theta, s - h)) / (2 * h)
    if float(d) > 1e-3:
        assert float(g) / math.sinh(float(d)) == pytest.approx(float(fd), rel=1e-5, abs=1e-6)


def _sinh2_exp_closed(k, R):
    # sinh^2 r e^{-kr} = (e^{(2-k)r} - 2e^{-kr} + e^{-(2+k)r}) / 4
    def prim(a):
        return R if a == 0 else (math.exp(a * R) - 1.0) / a
    return 0.25 * (prim(2 - k) - 2 * prim(-k) + prim(-(2 + k)))


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_radial_rule_exactness(k):
    R = 10.0
    got = radial_integral(lambda r: np.exp(-k * r), 3, R, 1e-13)
    assert got == pytest.approx(4 * math.pi * _sinh2_exp_closed(k, R), rel=1e-10)


def test_radial_unit_ball_example():
    assert radial_integral(np.ones_like, 3, 1.0, 1e-13) == pytest.approx(math.pi * (math.sinh(2) - 2), rel=1e-12)
    # the closed form is 5.11093...
    assert round(math.pi * (math.sinh(2) - 2), 3) == 5.111


def test_compact_support_locality():
    bump = lambda r: np.where((r > 2) & (r < 3), np.sin(math.pi * (r - 2)) ** 2, 0.0)  # noqa: E731
    a = radial_integral(bump, 3, 3.0, 1e-13, breakpoints=[2.0])
    b = radial_integral(bump, 3, 7.5, 1e-13, breakpoints=[2.0, 3.0])
    assert a == pytest.approx(b, rel=1e-14, abs=1e-14)


def test_odd_angular_moment_vanishes():
    v = axisym_integral(lambda r, t: np.cos(t) * np.exp(-4 * r), 3, 10.0, 1e-12, abs_tol=1e-14)
    assert abs(v) <= 1e-12


def test_dist_polar_examples():
    assert float(dist_polar(3.0, 0.0, 3.0)) == pytest.approx(0.0, abs=1e-7)
    assert float(dist_polar(2.0, math.pi, 4.0)) == pytest.approx(6.0, rel=1e-14)
    ref = float(dist(point_from_polar(2.0, math.pi / 3), np.array([math.tanh(2.0), 0, 0])))
    assert float(dist_polar(2.0, math.pi / 3, 4.0)) == pytest.approx(ref, rel=1e-12)


def test_point_from_polar_examples():
    assert np.all(point_from_polar(0.0, 1.1) == 0)
    assert point_from_polar(1.5, 0.0) == pytest.approx([math.tanh(0.75), 0, 0], abs=1e-16)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 18), st.floats(0, math.pi))
def test_point_from_polar_roundtrip(rho, theta):
    # storing tanh(rho/2) costs about eps * e^rho in relative accuracy near the boundary
    tol = max(1e-13, 4e-16 * math.exp(rho))
    assert float(dist(point_from_polar(rho, theta), np.zeros(3))) == pytest.approx(rho, rel=tol, abs=1e-13)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.5, 4.0))
def test_positive_integrand_positive(a):
    assert axisym_integral(lambda r, t: np.exp(-a * r) * (1.5 + np.cos(t)), 4, 6.0, 1e-8) > 0
