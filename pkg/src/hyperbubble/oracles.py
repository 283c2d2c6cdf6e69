"""Brute-force reference values for interaction integrals.

These deliberately avoid the adaptive path: the frame is centered at the
midpoint of the extreme bubble centers, points are built in Euclidean ball
coordinates, distances come from :func:`geometry.dist`, and derivative
fields are central differences in the center position.
"""
from __future__ import annotations

import math

import numpy as np

from .geometry import axis_point, dist
from .ground_state import RadialProfile
from .quadrature import simpson_weights, sphere_area, tanh_sinh_theta

N_RHO = 4097
N_THETA = 1025


def _grid(n, positions, rate, n_rho, n_theta):
    far = max(abs(x) for x in positions)
    rho_max = far + 25.0 / rate + 1.0
    rho = np.linspace(0.0, rho_max, n_rho)
    wr = simpson_weights(n_rho, rho[1] - rho[0]) * np.sinh(rho) ** (n - 1)
    theta, jac = tanh_sinh_theta(n_theta)
    wt = simpson_weights(n_theta, 2 * 3.2 / (n_theta - 1)) * jac * np.sin(theta) ** (n - 2)
    return rho, wr, theta, wt


def _points(rho, theta, n, phi=0.0):
    R, T = np.meshgrid(rho, theta, indexing="ij")
    r = np.tanh(R / 2.0)
    x = np.zeros(R.shape + (n,))
    x[..., 0] = r * np.cos(T)
    x[..., 1] = r * np.sin(T) * math.cos(phi)
    if n > 2:
        x[..., 2] = r * np.sin(T) * math.sin(phi)
    return x


def _shift(positions):
    m = 0.5 * (min(positions) + max(positions))
    return [x - m for x in positions]


def bubble_product(profile: RadialProfile, positions, exponents, n_rho: int = N_RHO, n_theta: int = N_THETA) -> float:
    """int prod_i U(d(x, z_i))^{e_i} dv for axis centers at the given signed positions."""
    P = profile.params
    n = P.n
    pos = _shift(list(positions))
    rate = P.c * sum(exponents) - (n - 1)
    rho, wr, theta, wt = _grid(n, pos, rate, n_rho, n_theta)
    x = _points(rho, theta, n)
    vals = np.ones(x.shape[:-1])
    for s, e in zip(pos, exponents):
        vals *= profile(dist(x, axis_point(s, n))) ** e
    return sphere_area(n - 2) * float(wr @ vals @ wt)


def deriv_along_axis(profile: RadialProfile, s: float, h: float = 1e-5,
                     n_rho: int = N_RHO, n_theta: int = N_THETA) -> float:
    """int U[z]^p V_1(U[0]) dv, z at signed axis distance s.

    Translating along the axis carries V_1(U[0]) to -2 d/dsigma U(d(x, sigma e_1))
    at the image sigma of the origin; the sigma-derivative is a central difference.
    """
    P = profile.params
    n = P.n
    z0, z1 = _shift([0.0, s])
    rate = P.c * (P.p + 1) - (n - 1)
    rho, wr, theta, wt = _grid(n, [z0, z1], rate, n_rho, n_theta)
    x = _points(rho, theta, n)
    up = profile(dist(x, axis_point(z0 + h, n)))
    dn = profile(dist(x, axis_point(z0 - h, n)))
    v = -2.0 * (up - dn) / (2.0 * h)
    vals = profile(dist(x, axis_point(z1, n))) ** P.p * v
    return sphere_area(n - 2) * float(wr @ vals @ wt)


def deriv_perpendicular(profile: RadialProfile, s: float, n_phi: int = 8,
                        n_rho: int = 1025, n_theta: int = 513) -> float:
    """Same integral with V_2, summed over an explicit azimuth grid (n = 3 only)."""
    P = profile.params
    if P.n != 3:
        raise ValueError("explicit azimuth oracle is three-dimensional")
    rate = P.c * (P.p + 1) - 2
    rho, wr, theta, wt = _grid(3, [0.0, s], rate, n_rho, n_theta)
    total = 0.0
    for k in range(n_phi):
        phi = 2.0 * math.pi * (k + 0.5) / n_phi
        x = _points(rho, theta, 3, phi)
        rad = np.linalg.norm(x, axis=-1)
        d0 = dist(x, np.zeros(3))
        with np.errstate(invalid="ignore", divide="ignore"):
            dirj = np.where(rad > 0, x[..., 1] / np.where(rad > 0, rad, 1.0), 0.0)
        v = 2.0 * dirj * profile.deriv(d0)
        vals = profile(dist(x, axis_point(s, 3))) ** P.p * v
        total += float(wr @ vals @ wt) * (2.0 * math.pi / n_phi)
    return total
