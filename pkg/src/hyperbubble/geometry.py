"""Poincare-ball geometry: admissible parameters, distance, isometries, bump.

Points are numpy arrays whose last axis holds the ``n`` Euclidean
coordinates; every function broadcasts over leading axes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadRadii,
    CenterSingular,
    CriticalLowDimension,
    DimensionTooSmall,
    ExponentOutOfRange,
    LambdaOutOfRange,
    PointOnBoundary,
    ZeroNormal,
)

MACHINE_GUARD = 1e-14


@dataclass(frozen=True)
class Params:
    n: int
    p: float
    lam: float
    c: float
    c_slow: float
    critical: bool

    @property
    def gap(self) -> float:
        """Difference between the fast and slow decay roots."""
        return self.c - self.c_slow

    def as_dict(self) -> dict:
        return {"n": self.n, "p": self.p, "lambda": self.lam}


def decay_roots(n: int, lam: float) -> tuple[float, float]:
    """Fast and slow roots of c^2 - (n-1)c + lam = 0."""
    disc = (n - 1) ** 2 - 4.0 * lam
    if disc <= 0:
        raise LambdaOutOfRange(f"lambda={lam} must be below (n-1)^2/4={(n - 1) ** 2 / 4}")
    root = math.sqrt(disc)
    return 0.5 * (n - 1 + root), 0.5 * (n - 1 - root)


def validate_params(n: int, p: float, lam: float) -> Params:
    """Check the admissibility hypothesis and attach the decay constants."""
    if int(n) != n or n < 3:
        raise DimensionTooSmall(f"n={n}: need an integer n >= 3")
    n = int(n)
    p = float(p)
    lam = float(lam)
    p_crit = (n + 2) / (n - 2)
    if not p > 1:
        raise ExponentOutOfRange(f"p={p} must exceed 1")
    critical = math.isclose(p, p_crit, rel_tol=0, abs_tol=1e-12)
    if critical:
        p = p_crit
        if n == 3:
            raise CriticalLowDimension("critical exponent p=5 requires n >= 4")
        if not n * (n - 2) / 4 < lam < (n - 1) ** 2 / 4:
            raise LambdaOutOfRange(
                f"critical case needs {n * (n - 2) / 4} < lambda < {(n - 1) ** 2 / 4}, got {lam}"
            )
    elif p > p_crit:
        raise ExponentOutOfRange(f"p={p} exceeds the critical exponent {p_crit}")
    elif not lam < (n - 1) ** 2 / 4:
        raise LambdaOutOfRange(f"lambda={lam} must be below {(n - 1) ** 2 / 4}")
    c, c_slow = decay_roots(n, lam)
    return Params(n=n, p=p, lam=lam, c=c, c_slow=c_slow, critical=critical)


def _as_points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        raise ValueError("points need at least one coordinate axis")
    return x


def _one_minus_sq(x: np.ndarray) -> np.ndarray:
    r = np.linalg.norm(x, axis=-1)
    if np.any(1.0 - r < MACHINE_GUARD):
        raise PointOnBoundary("point too close to the unit sphere")
    return (1.0 - r) * (1.0 + r)


def dist(x, y) -> np.ndarray:
    """Hyperbolic distance.

    Uses ``sinh(d/2) = |x-y| / sqrt((1-|x|^2)(1-|y|^2))``, which is free of
    cancellation both near the diagonal and for very distant points.
    """
    x = _as_points(x)
    y = _as_points(y)
    num = np.linalg.norm(x - y, axis=-1)
    den = np.sqrt(_one_minus_sq(x) * _one_minus_sq(y))
    return 2.0 * np.arcsinh(num / den)


def rho_to_r(rho):
    """Euclidean radius of the point at hyperbolic distance rho from 0."""
    return np.tanh(np.asarray(rho, dtype=float) / 2.0)


def r_to_rho(r):
    return 2.0 * np.arctanh(np.asarray(r, dtype=float))


def axis_point(s: float, n: int) -> np.ndarray:
    """Point at signed hyperbolic distance s along e_1."""
    z = np.zeros(n)
    z[0] = math.tanh(s / 2.0)
    return z


def translate(b, x) -> np.ndarray:
    """The Mobius translation tau_b, taking 0 to b."""
    b = _as_points(b)
    x = _as_points(x)
    _one_minus_sq(b)
    _one_minus_sq(x)
    bb = np.sum(b * b, axis=-1)[..., None]
    xx = np.sum(x * x, axis=-1)[..., None]
    xb = np.sum(x * b, axis=-1)[..., None]
    num = (1.0 - bb) * x + (xx + 2.0 * xb + 1.0) * b
    den = bb * xx + 2.0 * xb + 1.0
    return num / den


def reflect(a, t: float, x) -> np.ndarray:
    """Reflection in the hyperplane {a.x/|a| = t}."""
    a = np.asarray(a, dtype=float)
    na = np.linalg.norm(a)
    if na == 0:
        raise ZeroNormal("reflection normal must be nonzero")
    ah = a / na
    x = _as_points(x)
    return x + 2.0 * (t - x @ ah)[..., None] * ah


def invert(a, r: float, x) -> np.ndarray:
    """Inversion in the sphere of radius r about a."""
    a = np.asarray(a, dtype=float)
    x = _as_points(x)
    diff = x - a
    d2 = np.sum(diff * diff, axis=-1)[..., None]
    if np.any(d2 == 0):
        raise CenterSingular("inversion is undefined at its center")
    return a + (r * r / d2) * diff


def translate_via_inversion(b, x) -> np.ndarray:
    """tau_b assembled as an inversion composed with a reflection.

    With b* = b/|b|^2 the map is sigma_{b*, r} o rho_{b*, 0}, r^2 = |b*|^2 - 1.
    tau_0 is taken to be the identity.
    """
    b = np.asarray(b, dtype=float)
    x = _as_points(x)
    bn2 = float(b @ b)
    if bn2 == 0.0:
        return x.copy()
    bstar = b / bn2
    r2 = float(bstar @ bstar) - 1.0
    return invert(bstar, math.sqrt(r2), reflect(bstar, 0.0, x))


def bump(r: float, R: float, rho):
    """Lipschitz cut-off equal to 1 on [0, r] and 0 beyond R.

    Returns ``(value, radial_derivative)``; the derivative is bounded by
    (pi/2)/(R - r).
    """
    if not 0 < r < R:
        raise BadRadii(f"need 0 < r < R, got r={r}, R={R}")
    rho = np.asarray(rho, dtype=float)
    k = 0.5 * math.pi / (R - r)
    arg = k * (rho + R - 2.0 * r)
    inner = (rho > r) & (rho < R)
    val = np.where(rho <= r, 1.0, np.where(inner, np.sin(arg), 0.0))
    der = np.where(inner, k * np.cos(arg), 0.0)
    return val, der


def volume_weight(x) -> np.ndarray:
    """Density (2/(1-|x|^2))^n of the hyperbolic volume."""
    x = _as_points(x)
    n = x.shape[-1]
    return (2.0 / _one_minus_sq(x)) ** n


def random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Orthogonalise a seeded uniform sample (QR is Gram-Schmidt here)."""
    q, r = np.linalg.qr(rng.uniform(-1.0, 1.0, size=(n, n)))
    return q * np.sign(np.diag(r))


def random_ball_points(rng: np.random.Generator, count: int, n: int, radius: float = 0.9) -> np.ndarray:
    """Uniform samples from the Euclidean ball of the given radius."""
    g = rng.standard_normal((count, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rad = radius * rng.uniform(0.0, 1.0, size=(count, 1)) ** (1.0 / n)
    return g * rad
