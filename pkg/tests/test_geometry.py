import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperbubble import geometry as G
from hyperbubble.errors import (
    BadRadii,
    CenterSingular,
    CriticalLowDimension,
    DimensionTooSmall,
    ExponentOutOfRange,
    LambdaOutOfRange,
    PointOnBoundary,
    ZeroNormal,
)


def ball_point(n=3, radius=0.9):
    coord = st.floats(-1.0, 1.0, allow_nan=False)
    return st.lists(coord, min_size=n, max_size=n).map(
        lambda v: np.asarray(v) * radius / max(1.0, float(np.linalg.norm(v))))


# validate_params

def test_params_c_is_two_at_zero_lambda():
    assert G.validate_params(3, 3, 0.0).c == 2.0


def test_params_critical_case_value():
    assert G.validate_params(4, 3, 2.1).c == pytest.approx((3 + math.sqrt(9 - 8.4)) / 2, rel=1e-15)
    assert G.validate_params(4, 3, 2.1).c == pytest.approx(1.8873, abs=1e-4)


def test_params_rejections():
    with pytest.raises(CriticalLowDimension):
        G.validate_params(3, 5, 0.9)
    with pytest.raises(DimensionTooSmall):
        G.validate_params(2, 3, 0.0)
    with pytest.raises(ExponentOutOfRange):
        G.validate_params(3, 1.0, 0.0)
    with pytest.raises(ExponentOutOfRange):
        G.validate_params(5, 3.0, 3.0)
    with pytest.raises(LambdaOutOfRange):
        G.validate_params(3, 3, 1.0)
    with pytest.raises(LambdaOutOfRange):
        G.validate_params(4, 3, 1.9)


@given(st.integers(3, 6), st.floats(-5.0, 0.99))
def test_fast_root_exceeds_half_dimension(n, frac):
    lam = frac * (n - 1) ** 2 / 4
    P = G.validate_params(n, 1.5, lam)
    assert P.c > (n - 1) / 2
    assert P.c ** 2 - (n - 1) * P.c + lam == pytest.approx(0.0, abs=1e-9 * max(1.0, abs(lam)))


# dist

def test_dist_half_point_is_log3():
    assert G.dist(np.zeros(3), [0.5, 0, 0]) == pytest.approx(math.log(3.0), rel=1e-15)


def test_dist_self_is_zero():
    x = np.array([0.2, -0.4, 0.1])
    assert G.dist(x, x) == 0.0


def test_dist_matches_inverse_point_formula():
    x = np.array([0.3, 0.0, 0.0])
    y = np.array([0.0, 0.3, 0.0])
    ystar = y / (y @ y)
    ch = np.linalg.norm(y) * np.linalg.norm(x - ystar) / math.sqrt((1 - x @ x) * (1 - y @ y))
    assert G.dist(x, y) == pytest.approx(2 * math.acosh(ch), rel=1e-13)


def test_dist_rejects_boundary():
    with pytest.raises(PointOnBoundary):
        G.dist(np.zeros(3), [1.0, 0, 0])


# translate

def test_translate_origin_and_antipode(rng):
    b = G.random_ball_points(rng, 50, 4)
    assert np.allclose(G.translate(b, np.zeros_like(b)), b, atol=1e-15)
    assert np.allclose(G.translate(b, -b), 0.0, atol=1e-14)


@settings(max_examples=200, deadline=None)
@given(ball_point(), ball_point(), ball_point())
def test_translation_is_isometry(b, x, y):
    d0 = float(G.dist(x, y))
    d1 = float(G.dist(G.translate(b, x), G.translate(b, y)))
    assert abs(d1 - d0) <= 1e-12 * max(1.0, d0)


@settings(max_examples=200, deadline=None)
@given(ball_point(), ball_point())
def test_translation_inverse(b, x):
    assert np.allclose(G.translate(-b, G.translate(b, x)), x, atol=1e-13)


@settings(max_examples=100, deadline=None)
@given(ball_point(), ball_point(), st.integers(0, 2 ** 31))
def test_orthogonal_invariance(x, y, seed):
    A = G.random_orthogonal(3, np.random.default_rng(seed))
    assert float(G.dist(A @ x, A @ y)) == pytest.approx(float(G.dist(x, y)), abs=1e-12)


def test_translation_via_inversion_agrees(rng):
    b = G.random_ball_points(rng, 1, 3)[0]
    x = G.random_ball_points(rng, 20, 3)
    assert np.allclose(G.translate_via_inversion(b, x), G.translate(b, x), atol=1e-13)


# reflect / invert

def test_reflect_examples(rng):
    assert np.allclose(G.reflect([1, 0], 0.0, [0.3, 0.2]), [-0.3, 0.2])
    a = rng.standard_normal(3)
    x = rng.standard_normal(3)
    assert np.allclose(G.reflect(a, 0.4, G.reflect(a, 0.4, x)), x, atol=1e-14)
    on_plane = 0.4 * a / np.linalg.norm(a) + np.cross(a, x)
    assert np.allclose(G.reflect(a, 0.4, on_plane), on_plane, atol=1e-14)
    with pytest.raises(ZeroNormal):
        G.reflect([0, 0, 0], 0.0, x)


def test_invert_examples(rng):
    a = rng.standard_normal(3)
    r = 0.7
    u = rng.standard_normal(3)
    on = a + r * u / np.linalg.norm(u)
    assert np.allclose(G.invert(a, r, on), on, atol=1e-14)
    x = rng.standard_normal((30, 3))
    y = G.invert(a, r, x)
    prod = np.linalg.norm(y - a, axis=1) * np.linalg.norm(x - a, axis=1)
    assert np.allclose(prod, r * r, rtol=1e-13)
    assert np.allclose(G.invert(a, r, y), x, atol=1e-13)
    with pytest.raises(CenterSingular):
        G.invert(a, r, a)


# bump

def test_bump_examples():
    v, d = G.bump(2, 4, 1.5)
    assert (v, d) == (1.0, 0.0)
    assert G.bump(2, 4, 3.0)[0] == pytest.approx(math.sqrt(2) / 2, rel=1e-15)
    with pytest.raises(BadRadii):
        G.bump(4, 2, 1.0)


@given(st.floats(0.1, 5.0), st.floats(0.1, 10.0))
def test_bump_gradient_bound(r, width):
    R = r + width
    rho = np.linspace(0.0, R + 1.0, 4001)
    _, der = G.bump(r, R, rho)
    assert np.max(np.abs(der)) <= (math.pi / 2) / (R - r) * (1 + 1e-14)


# volume weight

def test_volume_weight_values():
    assert G.volume_weight(np.zeros(3)) == 8.0
    assert G.volume_weight([0.5, 0, 0]) == pytest.approx((2 / 0.75) ** 3, rel=1e-15)
    assert G.volume_weight([0.5, 0, 0]) == pytest.approx(18.963, abs=1e-3)


def test_volume_weight_isometry_jacobian(rng):
    b = G.random_ball_points(rng, 1, 3, 0.6)[0]
    for x in G.random_ball_points(rng, 5, 3, 0.6):
        h = 1e-6
        J = np.empty((3, 3))
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            J[:, j] = (np.ravel(G.translate(b, x + e)) - np.ravel(G.translate(b, x - e))) / (2 * h)
        lhs = float(np.ravel(G.volume_weight(G.translate(b, x)))[0]) * abs(np.linalg.det(J))
        assert lhs == pytest.approx(float(np.ravel(G.volume_weight(x))[0]), rel=1e-8)
