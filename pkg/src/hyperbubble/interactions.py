"""Interaction integrals between hyperbolic bubbles.

All integrals are computed in hyperbolic polar coordinates about the first
center, with the remaining centers placed on the e_1 axis.  Truncation radii
come from the pointwise decay bound U(rho) <= chi_sup e^{-c rho}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGrid, ExponentTooSmall, NotCollinear
from .family import BubbleFamily
from .geometry import Params, dist, translate
from .ground_state import RadialProfile
from .quadrature import axisym_integral, dist_polar, sphere_area

LN3 = math.log(3.0)


@dataclass(frozen=True)
class InteractionResult:
    value: float
    q: float
    compensated: float
    config: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    r_squared: float
    s_grid: tuple
    values: tuple = ()
    target: float = float("nan")

    @property
    def relative_error(self) -> float:
        return abs(self.slope / self.target - 1.0)


def q_value(params: Params, x, y) -> float:
    return float(np.exp(-params.c * dist(x, y)))


def chi_sup(profile: RadialProfile) -> float:
    """Upper constant in U(rho) <= chi e^{-c rho}, with a small safety margin."""
    band = profile.u * np.exp(profile.params.c * profile.grid)
    return 1.01 * float(max(band.max(), profile.tail_chi))


def _theta_breaks(s_values) -> list[float]:
    """Geometric angular breaks resolving bubbles that sit on the axis far out."""
    out: set[float] = set()
    for s in s_values:
        if abs(s) < 1.0:
            continue
        width = 2.0 * math.exp(-abs(s))
        pole = 0.0 if s > 0 else math.pi
        t = width
        while t < 0.5:
            out.add(pole + t if s > 0 else pole - t)
            t *= 4.0
    return sorted(out)


def _rho_breaks(s_values) -> list[float]:
    out = set()
    for s in s_values:
        a = abs(s)
        out.update(x for x in (a - 1.0, a, a + 1.0) if x > 0)
    return sorted(out)


def _truncated(F, n, s_values, rate, coeff, tol, abs_tol=0.0):
    """Integrate F over the ball, cutting at the radius where the tail bound
    coeff * omega * e^{-rate rho} / (rate 2^{n-1}) drops below tol/10 of the
    value (or of abs_tol when the value is tiny)."""
    omega = sphere_area(n - 1)
    far = max([abs(s) for s in s_values] + [0.0])

    def cut_for(target):
        r = math.log(coeff * omega / (rate * 2 ** (n - 1) * target)) / rate
        return max(r, far + 2.0)

    rb = _rho_breaks(s_values)
    tb = _theta_breaks(s_values)
    rc = far + 12.0
    for _ in range(4):
        val = axisym_integral(F, n, rc, tol, rho_breaks=rb, theta_breaks=tb, abs_tol=abs_tol)
        need = cut_for(max(0.1 * tol * abs(val), 0.1 * abs_tol, 1e-300))
        if need <= rc:
            return val, rc
        rc = need + 1.0
    return val, rc


def _bubble_powers_integrand(profile, terms):
    """Product of U(d(x, s_i))^{e_i} in polar coordinates about the origin."""
    def F(r, t):
        out = np.ones(np.broadcast(r, t).shape)
        for s, e in terms:
            d = r if s == 0.0 else dist_polar(r, t, s)
            out = out * np.abs(profile(d)) ** e
        return out
    return F


def two_bubble(profile: RadialProfile, alpha: float, beta: float, s: float, tol: float = 1e-10) -> InteractionResult:
    """int U[0]^alpha U[z]^beta dv with z at axis distance s."""
    if alpha < 0 or beta < 0:
        raise ValueError("exponents must be nonnegative")
    if alpha + beta < 2:
        raise ExponentTooSmall(f"alpha + beta = {alpha + beta} < 2: the integral is not defined")
    P = profile.params
    chi = chi_sup(profile)
    rate = P.c * (alpha + beta) - (P.n - 1)
    coeff = chi ** (alpha + beta) * math.exp(P.c * beta * s)
    F = _bubble_powers_integrand(profile, [(0.0, alpha), (float(s), beta)])
    val, rc = _truncated(F, P.n, [0.0, s], rate, coeff, tol)
    q = math.exp(-P.c * s)
    if math.isclose(alpha, beta):
        comp = val / (s * math.exp(-P.c * beta * s))
    else:
        comp = val / math.exp(-P.c * min(alpha, beta) * s)
    return InteractionResult(val, q, comp, {"alpha": alpha, "beta": beta, "s": s, "rho_cut": rc})


def fit_exponent(profile: RadialProfile, alpha: float, beta: float, s_grid, tol: float = 1e-10) -> ExponentFit:
    """Least-squares slope of log(value) against s; the expected slope is -c min(alpha, beta)."""
    s = np.asarray(sorted(float(x) for x in s_grid))
    if s.size < 5 or s[-1] - s[0] < 4.0:
        raise DegenerateGrid("need at least 5 separations spanning at least 4")
    if math.isclose(alpha, beta):
        raise DegenerateGrid("equal exponents carry a linear prefactor; use the compensated value")
    vals = np.array([two_bubble(profile, alpha, beta, x, tol).value for x in s])
    y = np.log(vals)
    slope, intercept = np.polyfit(s, y, 1)
    fitted = slope * s + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return ExponentFit(float(slope), float(intercept), r2, tuple(s.tolist()), tuple(vals.tolist()),
                       -profile.params.c * min(alpha, beta))


def three_bubble_compensator(q: float, p: float, mode: str = "auto", nu: float | None = None) -> float:
    """Leading term of the three-bubble bound for the exponent regime of p."""
    L = math.log(1.0 / q)
    if mode == "refined":
        return q ** min(p - 1.0, 2.0)
    if p > 2:
        return q ** 1.5 * L ** (1.0 / 3.0)
    if p == 2:
        return q ** 1.5 * L
    if nu is None:
        nu = 0.5 * (p + 1) - 0.05
    if not nu < 0.5 * (p + 1):
        raise ValueError("nu must be below (p+1)/2")
    return q ** nu


def three_bubble(profile: RadialProfile, s12: float, s13: float, tol: float = 1e-10,
                 mode: str = "auto", nu: float | None = None) -> InteractionResult:
    """int U_1^{p-1} U_2 U_3 dv for collinear centers 0, s12 e_1, s13 e_1."""
    P = profile.params
    p = P.p
    chi = chi_sup(profile)
    seps = [abs(s12), abs(s13), abs(s13 - s12)]
    q = math.exp(-P.c * min(seps))
    rate = P.c * (p + 1) - (P.n - 1)
    coeff = chi ** (p + 1) * math.exp(P.c * (abs(s12) + abs(s13)))
    if s12 == s13:
        terms = [(0.0, p - 1), (float(s12), 2.0)]
    else:
        terms = [(0.0, p - 1), (float(s12), 1.0), (float(s13), 1.0)]
    F = _bubble_powers_integrand(profile, terms)
    val, rc = _truncated(F, P.n, [0.0, s12, s13], rate, coeff, tol)
    lead = three_bubble_compensator(q, p, mode, nu)
    comp = val / lead if lead > 0 else math.nan
    return InteractionResult(val, q, comp, {"s12": s12, "s13": s13, "mode": mode, "rho_cut": rc})


def azimuthal_mean_first_coordinate(n: int, m: int = 64) -> float:
    """Average of omega_1 over the unit sphere S^{n-2}, by quadrature."""
    if n == 3:
        phi = 2.0 * math.pi * np.arange(m) / m
        return float(np.mean(np.cos(phi)))
    x, w = np.polynomial.legendre.leggauss(m)
    psi = 0.5 * math.pi * (x + 1.0)
    wt = w * np.sin(psi) ** (n - 3)
    return float(np.sum(wt * np.cos(psi)) / np.sum(wt))


def deriv_interaction(profile: RadialProfile, s: float, direction_along_axis: bool = True,
                      tol: float = 1e-10) -> InteractionResult:
    """int U[z]^p V_j(U[0]) dv with z = s e_1 (s may be negative).

    V_j(U[0])(x) = 2 (x_j/|x|) U'(rho).  Along the axis x_1/|x| = cos(theta);
    perpendicular to it x_j/|x| = sin(theta) omega_j, whose azimuthal mean is
    evaluated numerically.
    """
    P = profile.params
    p = P.p
    chi = chi_sup(profile)
    dchi = 1.01 * float(np.max(np.abs(profile.du) * np.exp(P.c * profile.grid)))
    rate = P.c * (p + 1) - (P.n - 1)
    coeff = 2.0 * dchi * chi ** p * math.exp(P.c * p * abs(s))
    scale = math.exp(-P.c * abs(s))
    if direction_along_axis:
        def F(r, t):
            return profile(dist_polar(r, t, s)) ** p * 2.0 * np.cos(t) * profile.deriv(r)
        # the integrand changes sign, so the budget is set against its absolute mass
        mass, _ = _truncated(lambda r, t: np.abs(F(r, t)), P.n, [0.0, s], rate, coeff, tol)
        val, rc = _truncated(F, P.n, [0.0, s], rate, coeff, tol, abs_tol=tol * mass)
    else:
        mean = azimuthal_mean_first_coordinate(P.n)

        def F(r, t):
            return profile(dist_polar(r, t, s)) ** p * 2.0 * np.sin(t) * mean * profile.deriv(r)
        val, rc = _truncated(F, P.n, [0.0, s], rate, coeff, tol, abs_tol=1e-16 * scale)
    return InteractionResult(val, math.exp(-P.c * abs(s)), val / scale,
                             {"s": s, "along_axis": bool(direction_along_axis), "rho_cut": rc})


def delta_interacting_check(family: BubbleFamily, delta: float) -> tuple[bool, dict]:
    """Test max Q_ik <= delta and max |alpha_i - 1| <= delta; the witness names the violation."""
    dev = np.abs(family.alphas - 1.0)
    i = int(np.argmax(dev))
    if dev[i] > delta:
        return False, {"reason": "coefficient", "index": i + 1, "alpha": float(family.alphas[i])}
    if family.size > 1:
        Q = family.q_matrix.copy()
        np.fill_diagonal(Q, -np.inf)
        a, b = np.unravel_index(int(np.argmax(Q)), Q.shape)
        if Q[a, b] > delta:
            i, k = sorted((int(a), int(b)))
            return False, {"reason": "interaction", "pair": (i + 1, k + 1), "q": float(Q[a, b])}
    return True, {"q_max": family.q_max, "alpha_dev": float(dev.max())}


# --- general position ---------------------------------------------------------

def collinearize(centers, tol: float = 1e-9) -> np.ndarray:
    """Signed geodesic positions of centers lying on one geodesic.

    The first center is moved to the origin by an isometry; the geodesic then
    becomes a diameter, and each position is the signed distance along it.
    """
    Z = np.atleast_2d(np.asarray(centers, dtype=float))
    W = translate(-Z[0], Z)
    W[0] = 0.0
    norms = np.linalg.norm(W, axis=1)
    if Z.shape[0] == 1:
        return np.zeros(1)
    ref = int(np.argmax(norms))
    e = W[ref] / norms[ref]
    along = W @ e
    off = np.linalg.norm(W - along[:, None] * e, axis=1)
    if np.any(off > tol):
        raise NotCollinear(f"centers leave the geodesic by {off.max():.3e}")
    return 2.0 * np.arctanh(along)


def two_bubble_general(profile: RadialProfile, alpha: float, beta: float, x, y, tol: float = 1e-10) -> InteractionResult:
    return two_bubble(profile, alpha, beta, float(dist(x, y)), tol)


def three_bubble_general(profile: RadialProfile, centers, tol: float = 1e-10) -> InteractionResult:
    s = collinearize(centers)
    return three_bubble(profile, float(s[1]), float(s[2]), tol)


def _rotation_to(v: np.ndarray) -> np.ndarray:
    """Orthogonal R with R e_1 = v/|v| (Householder)."""
    n = v.size
    u = v / np.linalg.norm(v)
    e = np.zeros(n)
    e[0] = 1.0
    w = e - u
    nw = np.linalg.norm(w)
    if nw < 1e-15:
        return np.eye(n)
    w /= nw
    return np.eye(n) - 2.0 * np.outer(w, w)


def deriv_interaction_general(profile: RadialProfile, z, j: int, tol: float = 1e-7,
                              fd_step: float = 1e-4, n_azimuth: int = 8) -> InteractionResult:
    """int U[z]^p V_j(U[0]) dv for an arbitrary center z, with V_j taken numerically.

    V_j(U[0]) is the t-derivative at t = 0 of U centered at tau_{t e_j}^{-1}(0),
    evaluated by central differences; the integral runs in polar coordinates
    about the geodesic through 0 and z, averaging over the azimuth explicitly.
    Only n = 3 is supported here.
    """
    P = profile.params
    if P.n != 3:
        raise ValueError("the general-position harness is three-dimensional")
    z = np.asarray(z, dtype=float)
    s = float(dist(np.zeros(3), z))
    R = _rotation_to(z)
    phi = 2.0 * math.pi * (np.arange(n_azimuth) + 0.5) / n_azimuth
    ej = np.zeros(3)
    ej[j] = 1.0

    def F(r, t):
        r = np.asarray(r, dtype=float)
        shape = r.shape
        rr = np.tanh(r.ravel() / 2.0)
        tt = np.asarray(t, dtype=float).ravel()
        acc = np.zeros(rr.size)
        for f in phi:
            y = np.stack([rr * np.cos(tt), rr * np.sin(tt) * np.cos(f), rr * np.sin(tt) * np.sin(f)], axis=-1)
            x = y @ R.T
            up = profile(dist(x, -fd_step * ej))
            dn = profile(dist(x, fd_step * ej))
            acc += (up - dn) / (2.0 * fd_step)
        vj = acc / n_azimuth
        return (profile(dist_polar(r.ravel(), tt, s)) ** P.p * vj).reshape(shape)

    chi = chi_sup(profile)
    rate = P.c * (P.p + 1) - (P.n - 1)
    coeff = 2.0 * P.c * chi ** (P.p + 1) * math.exp(P.c * P.p * s)
    scale = math.exp(-P.c * s)
    val, rc = _truncated(F, 3, [0.0, s], rate, coeff, tol, abs_tol=tol * scale)
    return InteractionResult(val, scale, val / scale, {"z": z.tolist(), "j": j, "rho_cut": rc,
                                                       "expected_sign": -float(np.sign(z[j]))})
