"""Quadrature over the ball in hyperbolic polar coordinates.

Radial integrals carry the weight sinh^{n-1}(rho); axisymmetric integrals
add sin^{n-2}(theta) and the area of the unit (n-2)-sphere for the
suppressed azimuthal directions.  The adaptive engines evaluate whole
batches of panels at once, so integrands must accept numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import NotConverged

MAX_DEPTH = 30

# Gauss-Kronrod 7/15 on [-1, 1]; Gauss nodes sit at odd positions.
_XK = np.array([
    -0.991455371120812639206854697526329,
    -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926,
    -0.741531185599394439863864773280788,
    -0.586087235467691130294144845693013,
    -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245,
    0.0,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144845693013,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
])
_WG = np.zeros(15)
_WG[1::2] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
]


def sphere_area(k: int) -> float:
    """Area of the unit k-sphere in R^{k+1}."""
    return 2.0 * math.pi ** ((k + 1) / 2) / math.gamma((k + 1) / 2)


@dataclass(frozen=True)
class QuadratureRule:
    """Fixed tensor rule on [0, rho_max] x [theta0, theta1] with measure built in."""

    n: int
    rho: np.ndarray
    rho_weights: np.ndarray
    theta: np.ndarray
    theta_weights: np.ndarray

    @property
    def omega(self) -> float:
        return sphere_area(self.n - 1)

    @property
    def reduced(self) -> float:
        return sphere_area(self.n - 2)

    def integrate(self, values: np.ndarray) -> float:
        return self.reduced * float(self.rho_weights @ values @ self.theta_weights)


@dataclass
class QuadResult:
    value: float
    error: float
    panels: int


def _panel_sums(f, a: np.ndarray, b: np.ndarray):
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * _XK[None, :]
    fx = np.asarray(f(x), dtype=float)
    k = half * (fx @ _WK)
    g = half * (fx @ _WG)
    return k, np.abs(k - g)


def adaptive_1d(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = 1e-10,
    breakpoints: Sequence[float] | None = None,
    abs_tol: float = 0.0,
) -> QuadResult:
    """Adaptive Gauss-Kronrod (7/15) with batched bisection of the worst panels."""
    edges = [a, b] if breakpoints is None else sorted({a, b, *[t for t in breakpoints if a < t < b]})
    lo = np.array(edges[:-1], dtype=float)
    hi = np.array(edges[1:], dtype=float)
    depth = np.zeros(lo.size, dtype=int)
    val, err = _panel_sums(f, lo, hi)
    while True:
        total = float(val.sum())
        goal = max(tol * abs(total), abs_tol)
        etot = float(err.sum())
        if etot <= goal:
            return QuadResult(total, etot, lo.size)
        # split every panel whose share of the budget is exceeded, worst first
        thresh = max(goal / lo.size, 0.25 * float(err.max()))
        split = err >= min(thresh, float(err.max()))
        if np.any(depth[split] >= MAX_DEPTH):
            raise NotConverged(f"1-D quadrature hit depth {MAX_DEPTH}: error {etot:.3e} vs goal {goal:.3e}")
        mid = 0.5 * (lo[split] + hi[split])
        nlo = np.concatenate([lo[split], mid])
        nhi = np.concatenate([mid, hi[split]])
        nd = np.concatenate([depth[split], depth[split]]) + 1
        nv, ne = _panel_sums(f, nlo, nhi)
        keep = ~split
        lo = np.concatenate([lo[keep], nlo])
        hi = np.concatenate([hi[keep], nhi])
        depth = np.concatenate([depth[keep], nd])
        val = np.concatenate([val[keep], nv])
        err = np.concatenate([err[keep], ne])


def _rect_sums(F, ra, rb, ta, tb):
    hr = 0.5 * (rb - ra)
    ht = 0.5 * (tb - ta)
    R = (0.5 * (ra + rb))[:, None, None] + hr[:, None, None] * _XK[None, :, None]
    T = (0.5 * (ta + tb))[:, None, None] + ht[:, None, None] * _XK[None, None, :]
    R, T = np.broadcast_arrays(R, T)
    vals = np.asarray(F(R, T), dtype=float)
    scale = hr * ht
    kk = scale * np.einsum("mij,i,j->m", vals, _WK, _WK)
    gk = scale * np.einsum("mij,i,j->m", vals, _WG, _WK)
    kg = scale * np.einsum("mij,i,j->m", vals, _WK, _WG)
    return kk, np.abs(kk - gk), np.abs(kk - kg)


def adaptive_2d(
    F: Callable[[np.ndarray, np.ndarray], np.ndarray],
    rho_range: tuple[float, float],
    theta_range: tuple[float, float],
    tol: float = 1e-10,
    rho_breaks: Sequence[float] = (),
    theta_breaks: Sequence[float] = (),
    abs_tol: float = 0.0,
) -> QuadResult:
    """Adaptive tensor Gauss-Kronrod cubature on a rectangle.

    Each rectangle carries one error estimate per direction; rectangles over
    budget are bisected along the direction with the larger estimate.
    """
    r0, r1 = rho_range
    t0, t1 = theta_range
    redges = sorted({r0, r1, *[x for x in rho_breaks if r0 < x < r1]})
    tedges = sorted({t0, t1, *[x for x in theta_breaks if t0 < x < t1]})
    RA, TA = np.meshgrid(redges[:-1], tedges[:-1], indexing="ij")
    RB, TB = np.meshgrid(redges[1:], tedges[1:], indexing="ij")
    ra, rb, ta, tb = (np.ravel(v).astype(float) for v in (RA, RB, TA, TB))
    dr = np.zeros(ra.size, dtype=int)
    dt = np.zeros(ra.size, dtype=int)
    val, er, et = _rect_sums(F, ra, rb, ta, tb)
    while True:
        total = float(val.sum())
        err = er + et
        goal = max(tol * abs(total), abs_tol)
        etot = float(err.sum())
        if etot <= goal:
            return QuadResult(total, etot, ra.size)
        emax = float(err.max())
        thresh = min(max(goal / ra.size, 0.25 * emax), emax)
        split = err >= thresh
        along_r = split & (er >= et)
        along_t = split & ~(er >= et)
        if np.any(dr[along_r] >= MAX_DEPTH) or np.any(dt[along_t] >= MAX_DEPTH):
            raise NotConverged(f"2-D cubature hit depth {MAX_DEPTH}: error {etot:.3e} vs goal {goal:.3e}")
        pieces = []
        if np.any(along_r):
            m = 0.5 * (ra[along_r] + rb[along_r])
            pieces.append((
                np.concatenate([ra[along_r], m]), np.concatenate([m, rb[along_r]]),
                np.tile(ta[along_r], 2), np.tile(tb[along_r], 2),
                np.tile(dr[along_r] + 1, 2), np.tile(dt[along_r], 2),
            ))
        if np.any(along_t):
            m = 0.5 * (ta[along_t] + tb[along_t])
            pieces.append((
                np.tile(ra[along_t], 2), np.tile(rb[along_t], 2),
                np.concatenate([ta[along_t], m]), np.concatenate([m, tb[along_t]]),
                np.tile(dr[along_t], 2), np.tile(dt[along_t] + 1, 2),
            ))
        nra, nrb, nta, ntb, ndr, ndt = (np.concatenate(c) for c in zip(*pieces))
        nv, ner, net = _rect_sums(F, nra, nrb, nta, ntb)
        keep = ~split
        ra = np.concatenate([ra[keep], nra])
        rb = np.concatenate([rb[keep], nrb])
        ta = np.concatenate([ta[keep], nta])
        tb = np.concatenate([tb[keep], ntb])
        dr = np.concatenate([dr[keep], ndr])
        dt = np.concatenate([dt[keep], ndt])
        val = np.concatenate([val[keep], nv])
        er = np.concatenate([er[keep], ner])
        et = np.concatenate([et[keep], net])


def radial_integral(
    f: Callable[[np.ndarray], np.ndarray],
    n: int,
    rho_max: float,
    tol: float = 1e-10,
    breakpoints: Sequence[float] | None = None,
) -> float:
    """omega_{n-1} * int_0^rho_max f(rho) sinh^{n-1}(rho) d rho."""
    res = adaptive_1d(lambda r: f(r) * np.sinh(r) ** (n - 1), 0.0, rho_max, tol, breakpoints)
    return sphere_area(n - 1) * res.value


def axisym_integral(
    F: Callable[[np.ndarray, np.ndarray], np.ndarray],
    n: int,
    rho_max: float,
    tol: float = 1e-10,
    theta_range: tuple[float, float] = (0.0, math.pi),
    rho_breaks: Sequence[float] = (),
    theta_breaks: Sequence[float] = (),
    abs_tol: float = 0.0,
) -> float:
    """Integral of an axially symmetric F(rho, theta) over a geodesic ball.

    The prefactor |S^{n-2}| accounts for the azimuthal sphere, so a
    theta-independent F reproduces :func:`radial_integral`.
    """

    def G(r, t):
        return F(r, t) * np.sinh(r) ** (n - 1) * np.sin(t) ** (n - 2)

    res = adaptive_2d(G, (0.0, rho_max), theta_range, tol, rho_breaks, theta_breaks, abs_tol)
    return sphere_area(n - 2) * res.value


def dist_polar(rho, theta, s) -> np.ndarray:
    """Distance from polar point (rho, theta) to the axis point at signed distance s.

    Evaluates sinh^2(d/2) = sinh^2((rho-s)/2) + sinh(rho) sinh(s) sin^2(theta/2),
    a sum of nonnegative terms, so there is no cancellation near the center.
    """
    rho = np.asarray(rho, dtype=float)
    theta = np.asarray(theta, dtype=float)
    s = np.asarray(s, dtype=float)
    theta = np.where(s < 0, math.pi - theta, theta)
    s = np.abs(s)
    h = np.sinh(0.5 * (rho - s)) ** 2 + np.sinh(rho) * np.sinh(s) * np.sin(0.5 * theta) ** 2
    return 2.0 * np.arcsinh(np.sqrt(h))


def dist_polar_ds(rho, theta, s) -> tuple[np.ndarray, np.ndarray]:
    """Return (d, sinh(d) * dd/ds) for the polar distance to the axis point s."""
    d = dist_polar(rho, theta, s)
    g = np.cosh(rho) * np.sinh(s) - np.sinh(rho) * np.cosh(s) * np.cos(theta)
    return d, g


def point_from_polar(rho, theta, n: int = 3) -> np.ndarray:
    """Ball point at hyperbolic radius rho, angle theta from e_1 in the (e_1, e_2) plane."""
    rho = np.asarray(rho, dtype=float)
    theta = np.asarray(theta, dtype=float)
    r = np.tanh(rho / 2.0)
    out = np.zeros(np.broadcast(rho, theta).shape + (n,))
    out[..., 0] = r * np.cos(theta)
    out[..., 1] = r * np.sin(theta)
    return out


def simpson_weights(m: int, h: float) -> np.ndarray:
    if m < 3 or m % 2 == 0:
        raise ValueError("composite Simpson needs an odd node count >= 3")
    w = np.full(m, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * h / 3.0


def tanh_sinh_theta(m: int, span: float = 3.2) -> tuple[np.ndarray, np.ndarray]:
    """Angles on (0, pi) clustered double-exponentially at both poles.

    Returns the nodes and the Jacobian d theta / d t on a uniform t-grid.
    """
    t = np.linspace(-span, span, m)
    u = 0.5 * math.pi * np.sinh(t)
    theta = 0.5 * math.pi * (1.0 + np.tanh(u))
    jac = 0.25 * math.pi ** 2 * np.cosh(t) / np.cosh(u) ** 2
    return theta, jac


def tensor_simpson_rule(n: int, rho_max: float, n_rho: int = 2049, n_theta: int = 1025, span: float = 3.2) -> QuadratureRule:
    """Dense composite Simpson rule (uniform in rho, tanh-sinh in theta)."""
    rho = np.linspace(0.0, rho_max, n_rho)
    wr = simpson_weights(n_rho, rho[1] - rho[0]) * np.sinh(rho) ** (n - 1)
    theta, jac = tanh_sinh_theta(n_theta, span)
    h = 2.0 * span / (n_theta - 1)
    wt = simpson_weights(n_theta, h) * jac * np.sin(theta) ** (n - 2)
    return QuadratureRule(n=n, rho=rho, rho_weights=wr, theta=theta, theta_weights=wt)



def tensor_simpson(F, n: int, rho_max: float, n_rho: int = 2049, n_theta: int = 1025) -> float:
    """Brute-force oracle: the same measure on a dense fixed tensor grid."""
    rule = tensor_simpson_rule(n, rho_max, n_rho, n_theta)
    R, T = np.meshgrid(rule.rho, rule.theta, indexing="ij")
    return rule.integrate(np.asarray(F(R, T), dtype=float))
