"""Discretizations of -Delta - lambda on the ball.

Radial direction: continuous spectral elements on Gauss-Lobatto-Legendre
nodes, with the quadrature-induced (diagonal) mass.  Angular direction for
axisymmetric fields: Gauss-Jacobi nodes in x = cos(theta) and the orthonormal
zonal harmonics on those nodes, so the operator is block diagonal in the
harmonic degree l with blocks

    K_l = S + l(l+n-2) D - lambda M + c sinh^{n-1}(R) e_R e_R^T.

The last term is the boundary contribution of the Robin condition
w' + c w = 0, which selects the decay e^{-c rho} of finite-energy solutions.
"""
from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre as Lg
from scipy.linalg import cho_solve_banded, cholesky_banded, eigh, LinAlgError
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh
from scipy.special import roots_jacobi

from .errors import (
    ConstraintRankDeficient,
    ConstructionFailed,
    EigenSolverFailure,
    GridTooCoarse,
    LinearSolveFailure,
)
from .family import BubbleFamily
from .geometry import Params, bump
from .ground_state import RadialProfile
from .quadrature import axisym_integral, dist_polar, dist_polar_ds, radial_integral, sphere_area

log = logging.getLogger(__name__)

DEFAULT_DEGREE = 12
MODE_DEGREE = 8
DEFAULT_H = 0.5


# --- one-dimensional spectral elements -------------------------------------------

@functools.lru_cache(maxsize=16)
def gll(P: int):
    """GLL nodes, weights and differentiation matrix of degree P on [-1, 1]."""
    cP = np.zeros(P + 1)
    cP[-1] = 1.0
    inner = np.sort(Lg.legroots(Lg.legder(cP)))
    x = np.concatenate([[-1.0], inner, [1.0]])
    LP = Lg.legval(x, cP)
    w = 2.0 / (P * (P + 1) * LP ** 2)
    D = np.zeros((P + 1, P + 1))
    for i in range(P + 1):
        for j in range(P + 1):
            if i != j:
                D[i, j] = LP[i] / (LP[j] * (x[i] - x[j]))
    D[0, 0] = -P * (P + 1) / 4.0
    D[P, P] = P * (P + 1) / 4.0
    return x, w, D


@dataclass(frozen=True, eq=False)
class RadialSEM:
    """Radial element space on [0, R] with the hyperbolic weight sinh^{n-1}."""

    n: int
    breaks: np.ndarray
    degree: int
    nodes: np.ndarray = field(init=False)
    mass: np.ndarray = field(init=False)      # int phi_i^2 sinh^{n-1}
    ang: np.ndarray = field(init=False)       # int phi_i^2 sinh^{n-3}
    stiff: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        P = self.degree
        x, w, D = gll(P)
        br = np.asarray(self.breaks, dtype=float)
        E = br.size - 1
        N = E * P + 1
        nodes = np.empty(N)
        mass = np.zeros(N)
        ang = np.zeros(N)
        S = np.zeros((N, N))
        for e in range(E):
            a, b = br[e], br[e + 1]
            J = 0.5 * (b - a)
            r = 0.5 * (a + b) + J * x
            idx = slice(e * P, e * P + P + 1)
            nodes[idx] = r
            sh = np.sinh(r)
            mass[idx] += w * J * sh ** (self.n - 1)
            ang[idx] += w * J * sh ** (self.n - 3) if self.n > 3 else w * J
            S[idx, idx] += (D.T * (w * sh ** (self.n - 1))) @ D / J
        object.__setattr__(self, "breaks", br)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "ang", ang)
        object.__setattr__(self, "stiff", 0.5 * (S + S.T))

    @property
    def R(self) -> float:
        return float(self.breaks[-1])

    @property
    def size(self) -> int:
        return self.nodes.size

    def robin(self, c: float) -> float:
        return c * math.sinh(self.R) ** (self.n - 1)

    def operator(self, l: int, lam: float, c: float) -> np.ndarray:
        """Dense K_l (before removing the Dirichlet node for l >= 1)."""
        K = self.stiff.copy()
        K[np.diag_indices_from(K)] += l * (l + self.n - 2) * self.ang - lam * self.mass
        K[-1, -1] += self.robin(c)
        return K


def graded_breaks(R: float, h: float = DEFAULT_H, core: float | None = None,
                  refine=(), extra=()) -> np.ndarray:
    """Element breaks on [0, R]: geometric near 0 starting at ``core``, width h
    elsewhere, halved within distance 2 of each radius in ``refine``."""
    pts = [0.0]
    t = 0.0
    if core is not None and core < h:
        t = core
        while t < h:
            pts.append(t)
            t *= 2.0
        t = pts[-1]
    while True:
        step = 0.5 * h if any(abs(t - r) < 2.0 for r in refine) else h
        t += step
        if t >= R - 0.25 * step:
            break
        pts.append(t)
    pts.append(float(R))
    pts.extend(float(e) for e in extra if 0 < e < R)
    br = np.array(sorted(pts))
    keep = np.concatenate([[True], np.diff(br) > 1e-6])
    return br[keep]


def _banded_upper(K: np.ndarray, bw: int) -> np.ndarray:
    N = K.shape[0]
    ab = np.zeros((bw + 1, N))
    for k in range(bw + 1):
        ab[bw - k, k:] = np.diagonal(K, k)
    return ab


# --- radial mode operators -------------------------------------------------------

def profile_core(profile: RadialProfile) -> float:
    """Length scale of the bubble core, sqrt(U(0)/|U''(0)|)."""
    return math.sqrt(profile.amplitude / abs(profile.second0))


@dataclass(frozen=True, eq=False)
class RadialModeOperator:
    """Stiffness and weight for angular mode l of (-Delta - lambda) against U^{p-1}."""

    l: int
    grid: np.ndarray
    stiffness: np.ndarray
    weight: np.ndarray
    free: np.ndarray

    @classmethod
    def build(cls, profile: RadialProfile, l: int, h: float = DEFAULT_H, degree: int = MODE_DEGREE,
              R: float | None = None) -> "RadialModeOperator":
        P = profile.params
        R = profile.rho_max if R is None else R
        sem = RadialSEM(P.n, graded_breaks(R, h, core=0.25 * profile_core(profile)), degree)
        K = sem.operator(l, P.lam, P.c)
        W = np.diag(sem.mass * np.abs(profile(sem.nodes)) ** (P.p - 1))
        free = np.arange(sem.size) if l == 0 else np.arange(1, sem.size)
        return cls(l, sem.nodes, K, W, free)

    def eigen(self, k: int):
        """Lowest k eigenpairs of K v = mu W v (vectors on the full grid)."""
        K = self.stiffness[np.ix_(self.free, self.free)]
        W = self.weight[np.ix_(self.free, self.free)]
        try:
            nu, V = eigh(W, K)
        except LinAlgError as exc:
            raise EigenSolverFailure(f"mode {self.l}: {exc}") from exc
        order = np.argsort(nu)[::-1]
        nu = nu[order][:k]
        if np.any(nu <= 0):
            raise EigenSolverFailure(f"mode {self.l}: fewer than {k} positive eigenvalues")
        vecs = np.zeros((self.grid.size, k))
        vecs[self.free] = V[:, order[:k]]
        return 1.0 / nu, vecs


def mode_eigenvalues(profile: RadialProfile, l: int, k: int = 1, h: float = DEFAULT_H,
                     degree: int = MODE_DEGREE, tol: float = 1e-3, with_vectors: bool = False):
    """Lowest k eigenvalues of mode l with a two-level Richardson estimate.

    Returns a dict with the extrapolated values, the raw values on both
    levels and the per-eigenvalue change estimate.
    """
    if l < 0 or k < 1:
        raise ValueError("need l >= 0 and k >= 1")
    coarse = RadialModeOperator.build(profile, l, h, degree)
    fine = RadialModeOperator.build(profile, l, 0.5 * h, degree)
    mc, _ = coarse.eigen(k)
    mf, vf = fine.eigen(k)
    order = 2 * degree
    extrap = mf + (mf - mc) / (2.0 ** order - 1.0)
    change = np.abs(mf - mc) / np.abs(mf)
    if np.any(change > tol):
        raise GridTooCoarse(f"mode {l}: refinement changes eigenvalues by {change.max():.2e}")
    out = {
        "l": l,
        "eigenvalues": extrap.tolist(),
        "coarse": mc.tolist(),
        "fine": mf.tolist(),
        "richardson_change": change.tolist(),
        "grid": {"h": h, "degree": degree, "nodes_fine": int(fine.grid.size), "rho_max": float(fine.grid[-1])},
    }
    if with_vectors:
        out["grid_nodes"] = fine.grid
        out["vectors"] = vf
        out["weight"] = np.diag(fine.weight)
        out["stiffness"] = fine.stiffness
    return out


def eigenvector_alignment(profile: RadialProfile, l: int) -> float:
    """Cosine (in the energy inner product) between the lowest mode-l
    eigenvector and U (l = 0) or U' (l = 1)."""
    res = mode_eigenvalues(profile, l, 1, with_vectors=True)
    r = res["grid_nodes"]
    v = res["vectors"][:, 0]
    K = res["stiffness"]
    ref = profile(r) if l == 0 else profile.deriv(r)
    if l == 1:
        ref[0] = 0.0
    num = abs(v @ K @ ref)
    return float(num / math.sqrt((v @ K @ v) * (ref @ K @ ref)))


def halfspace_rayleigh(profile: RadialProfile, tol: float = 1e-10, half: bool = True) -> dict:
    """Rayleigh quotient of V_1(U) = 2 cos(theta) U'(rho) on {x_1 < 0}.

    |grad V|^2 = 4 cos^2 U''^2 + 4 sin^2 (U'/sinh)^2 in polar coordinates.
    """
    P = profile.params
    n, lam, p = P.n, P.lam, P.p
    R = profile.rho_max + 40.0 / P.c
    rng = (0.5 * math.pi, math.pi) if half else (0.0, math.pi)

    def grad2(r, t):
        return 4.0 * np.cos(t) ** 2 * profile.second(r) ** 2 + 4.0 * np.sin(t) ** 2 * profile.deriv_over_sinh(r) ** 2

    def v2(r, t):
        return 4.0 * np.cos(t) ** 2 * profile.deriv(r) ** 2

    rb = list(profile.breaks[1:-1])
    num = axisym_integral(lambda r, t: grad2(r, t) - lam * v2(r, t), n, R, tol, theta_range=rng, rho_breaks=rb)
    den = axisym_integral(lambda r, t: np.abs(profile(r)) ** (p - 1) * v2(r, t), n, R, tol, theta_range=rng, rho_breaks=rb)
    return {"quotient": num / den, "numerator": num, "denominator": den}


def plane_values(profile: RadialProfile, rho) -> np.ndarray:
    """V_1(U) sampled on the separating plane theta = pi/2."""
    return 2.0 * np.cos(0.5 * math.pi) * profile.deriv(np.asarray(rho, dtype=float))


# --- angular harmonics --------------------------------------------------------------

@functools.lru_cache(maxsize=8)
def zonal_basis(n: int, L: int):
    """Gauss-Jacobi nodes in x = cos(theta), weights, and the orthonormal
    zonal harmonics Y[k, l] (l < L) of S^{n-1} evaluated on them."""
    a = 0.5 * (n - 3)
    x, w = roots_jacobi(L, a, a)
    order = np.argsort(-x)            # theta ascending
    x, w = x[order], w[order]
    g = 0.5 * (n - 2)                 # Gegenbauer index
    mu0 = float(np.sum(w))
    Y = np.zeros((L, L))
    Y[:, 0] = 1.0 / math.sqrt(mu0)
    if L > 1:
        beta1 = 1.0 / (2.0 * (1.0 + g)) if g > 0 else 1.0 / 3.0
        Y[:, 1] = x * Y[:, 0] / math.sqrt(beta1)
    prev_beta = beta1 if L > 1 else 0.0
    for l in range(1, L - 1):
        bl1 = (l + 1) * (l + 2 * g) / (4.0 * (l + 1 + g) * (l + g))
        Y[:, l + 1] = (x * Y[:, l] - math.sqrt(prev_beta) * Y[:, l - 1]) / math.sqrt(bl1)
        prev_beta = bl1
    return x, w, Y


# --- axisymmetric grids ----------------------------------------------------------------

class AxisymGrid:
    """Tensor grid (rho_i, theta_k) about a fixed origin, with the factorized
    block-diagonal operator A of (-Delta - lambda)."""

    def __init__(self, params: Params, rho_max: float, L: int = 512, h: float = DEFAULT_H,
                 degree: int = DEFAULT_DEGREE, refine=(), extra_breaks=()):
        self.params = params
        self.L = int(L)
        self.sem = RadialSEM(params.n, graded_breaks(rho_max, h, refine=refine, extra=extra_breaks), degree)
        self.x, self.omega, self.Y = zonal_basis(params.n, self.L)
        self.theta = np.arccos(np.clip(self.x, -1.0, 1.0))
        self.rho = self.sem.nodes
        self.RHO, self.THETA = np.meshgrid(self.rho, self.theta, indexing="ij")
        self.area = sphere_area(params.n - 2)
        self.weights = self.area * np.outer(self.sem.mass, self.omega)
        self._OY = self.omega[:, None] * self.Y
        self._factors = None
        self.meta = {
            "discretization": "GLL spectral elements in rho (diagonal mass) x Gauss-Jacobi zonal harmonics in theta",
            "rho_max": float(rho_max),
            "elements": int(self.sem.breaks.size - 1),
            "degree": int(degree),
            "h": float(h),
            "n_rho": int(self.rho.size),
            "n_theta": self.L,
            "outer_bc": f"Robin w' + c w = 0, c = {params.c:.12g}",
        }

    # transforms
    def to_modes(self, u: np.ndarray) -> np.ndarray:
        return u @ self._OY

    def from_modes(self, uh: np.ndarray) -> np.ndarray:
        return uh @ self.Y.T

    def _diag(self, l: int) -> np.ndarray:
        P = self.params
        d = l * (l + P.n - 2) * self.sem.ang - P.lam * self.sem.mass
        d = d.copy()
        d[-1] += self.sem.robin(P.c)
        return d

    def _factor(self):
        if self._factors is not None:
            return self._factors
        bw = self.sem.degree
        base = _banded_upper(self.sem.stiff, bw)
        facs = []
        for l in range(self.L):
            ab = base.copy()
            ab[bw] += self._diag(l)
            if l > 0:
                ab = ab[:, 1:]
            try:
                facs.append(cholesky_banded(ab))
            except LinAlgError as exc:
                raise LinearSolveFailure(f"mode {l} block is not positive definite") from exc
        self._factors = facs
        return facs

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Load vector of A u, i.e. the discrete weak form of (-Delta - lambda)u."""
        uh = self.to_modes(u)
        uh[0, 1:] = 0.0
        S = self.sem.stiff
        out = S @ uh
        for l in range(self.L):
            out[:, l] += self._diag(l) * uh[:, l]
        out[0, 1:] = 0.0
        return self.area * (out @ self._OY.T)

    def energy(self, u: np.ndarray, v: np.ndarray | None = None) -> float:
        """a(u, v) = <u, v>_lambda on the grid."""
        uh = self.to_modes(u)
        vh = uh if v is None else self.to_modes(v)
        uh = uh.copy()
        vh = vh.copy() if v is not None else uh
        uh[0, 1:] = 0.0
        if v is not None:
            vh[0, 1:] = 0.0
        Su = self.sem.stiff @ uh
        tot = float(np.sum(vh * Su))
        for l in range(self.L):
            tot += float(np.sum(self._diag(l) * uh[:, l] * vh[:, l]))
        return self.area * tot

    def solve(self, b: np.ndarray) -> np.ndarray:
        """A^{-1} b for a load vector b of shape (n_rho, n_theta)."""
        facs = self._factor()
        bh = b @ self.Y
        wh = np.zeros_like(bh)
        for l in range(self.L):
            if l == 0:
                wh[:, 0] = cho_solve_banded((facs[0], False), bh[:, 0])
            else:
                wh[1:, l] = cho_solve_banded((facs[l], False), bh[1:, l])
        return (wh @ self.Y.T) / self.area

    def load(self, f: np.ndarray) -> np.ndarray:
        return self.weights * f

    def integrate(self, f: np.ndarray) -> float:
        return float(np.sum(self.weights * f))

    def dual_norm(self, b: np.ndarray) -> float:
        w = self.solve(b)
        val = float(np.sum(b * w))
        if val < -1e-14 * float(np.sum(np.abs(b * w))):
            raise LinearSolveFailure("negative dual pairing")
        return math.sqrt(max(val, 0.0))

    # fields
    def bubble(self, profile: RadialProfile, s: float) -> np.ndarray:
        d = self.RHO if s == 0.0 else dist_polar(self.RHO, self.THETA, s)
        return profile(d)

    def bubble_ds(self, profile: RadialProfile, s: float) -> np.ndarray:
        """d/ds of U(d(x, s e_1)); equals -V_1(U[s])/2."""
        d, g = dist_polar_ds(self.RHO, self.THETA, s)
        return profile.deriv_over_sinh(d) * g

    def core_nodes(self, profile: RadialProfile, s: float) -> int:
        """Grid nodes within one e-folding (U >= U(center)/e) of the bubble at s."""
        u = self.bubble(profile, s)
        return int(np.count_nonzero(u >= profile.amplitude / math.e))


@dataclass
class AxisymField:
    grid: AxisymGrid
    values: np.ndarray
    params: Params
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.RHO.shape:
            raise ValueError("field shape does not match the grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field has non-finite values")

    def __add__(self, other: "AxisymField") -> "AxisymField":
        return AxisymField(self.grid, self.values + other.values, self.params)

    def scaled(self, a: float) -> "AxisymField":
        return AxisymField(self.grid, a * self.values, self.params)

    def norm(self) -> float:
        return math.sqrt(max(self.grid.energy(self.values), 0.0))


def angular_size(far: float, minimum: int = 64, cap: int = 2048) -> int:
    """Harmonic count resolving a bubble at distance ``far`` from the origin.

    Its angular width is about 2 e^{-far}, and the zonal coefficients decay
    roughly like exp(-l e^{-far}), so l ~ 18 e^{far} reaches roundoff.
    """
    L = int(math.ceil(18.0 * math.exp(far) / 128.0)) * 128
    if L > cap:
        raise GridTooCoarse(f"a bubble at distance {far:.3g} from the grid origin needs L={L} > {cap}")
    return max(minimum, L)


def grid_for_positions(params: Params, positions, L: int | None = None, h: float = DEFAULT_H,
                       degree: int = DEFAULT_DEGREE, margin: float = 14.0, extra_breaks=()):
    """Grid whose origin is the midpoint of the extreme centers; returns (grid, shifted positions)."""
    pos = np.asarray(positions, dtype=float)
    mid = 0.5 * (pos.min() + pos.max())
    shifted = pos - mid
    far = float(np.max(np.abs(shifted)))
    if L is None:
        L = angular_size(far)
    R = far + margin
    grid = AxisymGrid(params, R, L, h, degree, refine=tuple(np.abs(shifted)), extra_breaks=extra_breaks)
    return grid, shifted


def hminus_norm(f: AxisymField, noise_floor: float | None = None) -> dict:
    """Dual norm sup <f, phi>/||phi||_lambda of a pointwise field f."""
    val = f.grid.dual_norm(f.grid.load(f.values))
    out = {"value": val, "noise_floor": noise_floor}
    if noise_floor is not None:
        out["below_floor"] = bool(val < noise_floor)
    return out


def bubble_residual(grid: AxisymGrid, u: np.ndarray, p: float) -> np.ndarray:
    """Load vector of -Delta u - lambda u - |u|^{p-1} u."""
    return grid.apply(u) - grid.load(np.abs(u) ** (p - 1) * u)


def residual_dual_norm(grid: AxisymGrid, u: np.ndarray, p: float) -> float:
    return grid.dual_norm(bubble_residual(grid, u, p))


def noise_floor(grid: AxisymGrid, profile: RadialProfile, positions) -> float:
    """Largest residual norm of an exact single bubble at any of the positions."""
    return max(residual_dual_norm(grid, grid.bubble(profile, s), profile.params.p) for s in positions)


# --- constrained spectral gap ----------------------------------------------------------

def spectral_gap_constrained(profile: RadialProfile, family: BubbleFamily, grid: AxisymGrid | None = None,
                             shifted=None, constrained: bool = True, k: int = 1) -> dict:
    """p times the largest value of int sigma^{p-1} rho^2 / ||rho||_lambda^2.

    With ``constrained`` the competitors are L^2-orthogonal to U_i^p and
    U_i^{p-1} V_1(U_i) for every bubble; the maximum is the top eigenvalue
    of the pencil restricted by an A-orthogonal projector.
    """
    P = profile.params
    if family.positions is None:
        raise ValueError("constrained spectrum needs an axis family")
    if grid is None:
        grid, shifted = grid_for_positions(P, family.positions)
    elif shifted is None:
        shifted = family.positions
    sigma = sum(a * grid.bubble(profile, s) for a, s in zip(family.alphas, shifted))
    msig = grid.weights * np.abs(sigma) ** (P.p - 1)
    shape = grid.RHO.shape
    size = msig.size

    G = None
    rank = 0
    if constrained:
        cols = []
        for s in shifted:
            U = grid.bubble(profile, s)
            cols.append(grid.load(U ** P.p).ravel())
            cols.append(grid.load(U ** (P.p - 1) * (-2.0) * grid.bubble_ds(profile, s)).ravel())
        G = np.array(cols).T
        sv = np.linalg.svd(G / np.linalg.norm(G, axis=0), compute_uv=False)
        rank = int(np.sum(sv > 1e-10 * sv[0]))
        if rank < G.shape[1]:
            raise ConstraintRankDeficient(f"constraint rank {rank} < {G.shape[1]}")
        AiG = np.array([grid.solve(G[:, j].reshape(shape)).ravel() for j in range(G.shape[1])]).T
        Sg = G.T @ AiG
        Sg_inv = np.linalg.inv(Sg)

    def proj(v):
        if G is None:
            return v
        return v - AiG @ (Sg_inv @ (G.T @ v))

    def projT(v):
        if G is None:
            return v
        return v - G @ (Sg_inv @ (AiG.T @ v))

    def mv(v):
        v = np.asarray(v).ravel()
        return projT(msig.ravel() * proj(v))

    def A_mv(v):
        return grid.apply(np.asarray(v).reshape(shape)).ravel()

    def Ainv(v):
        return grid.solve(np.asarray(v).reshape(shape)).ravel()

    op = LinearOperator((size, size), matvec=mv, dtype=float)
    Aop = LinearOperator((size, size), matvec=A_mv, dtype=float)
    Minv = LinearOperator((size, size), matvec=Ainv, dtype=float)
    rng = np.random.default_rng(0)
    try:
        vals, vecs = eigsh(op, k=k, M=Aop, Minv=Minv, which="LA", tol=1e-10,
                           v0=rng.standard_normal(size), maxiter=5000)
    except ArpackNoConvergence as exc:
        raise EigenSolverFailure(str(exc)) from exc
    top = float(np.max(vals))
    out = {"c_tilde": P.p * top, "max_quotient": top, "constraints_rank": rank,
           "constrained": constrained, "grid_meta": grid.meta}
    if G is not None:
        v = proj(vecs[:, int(np.argmax(vals))])
        out["constraint_residual"] = float(np.max(np.abs(G.T @ v)) / (np.linalg.norm(G, axis=0).max() * np.linalg.norm(v)))
    return out


# --- localization ------------------------------------------------------------------------

def localization_check(profile: RadialProfile, family: BubbleFamily, epsilon: float, n_theta: int = 257,
                       n_rho: int = 801) -> dict:
    """Bump functions phi_i = bump(R/2, R, d(., z_i)) and the three localization properties.

    R is the larger of pi/epsilon (gradient bound) and the radius where the
    mass of U^{p+1} outside B(R/2) drops below epsilon S^{(p+1)/(p-1)}.
    Property (ii) then needs every other center farther than
    2R + ln(chi_high/(epsilon chi_low))/c.
    """
    P = profile.params
    c, n, p = P.c, P.n, P.p
    k = (p + 1) * c - (n - 1)
    band = profile.u * np.exp(c * profile.grid)
    chi_hi = 1.01 * float(band.max())
    chi_lo = 0.99 * float(band.min())
    total = profile.int_p1
    C = sphere_area(n - 1) * chi_hi ** (p + 1) / 2 ** (n - 1)
    R_mass = 2.0 / k * math.log(max(C / (k * epsilon * total), 1.0))
    R = max(R_mass, math.pi / epsilon)
    need = 2.0 * R + math.log(chi_hi / (epsilon * chi_lo)) / c
    delta_req = math.exp(-c * need)
    report = {"epsilon": epsilon, "R": R, "r": 0.5 * R, "required_separation": need,
              "required_delta": delta_req, "bubbles": []}
    if family.size > 1 and family.min_separation <= need:
        raise ConstructionFailed(
            f"min separation {family.min_separation:.4g} <= required {need:.4g} "
            f"(delta must be below {delta_req:.3e}) for epsilon={epsilon}")

    # (i): mass inside {phi = 1} = B(z_i, R/2), the same for every bubble
    inner = radial_integral(lambda r: np.abs(profile(r)) ** (p + 1), n, 0.5 * R, 1e-12,
                            breakpoints=[b for b in profile.breaks if b < 0.5 * R])
    ok_i = inner >= (1.0 - epsilon) * total
    rho = np.linspace(0.0, R, n_rho)
    _, der = bump(0.5 * R, R, rho)
    grad_sup = float(np.max(np.abs(der)))
    ok_iii = grad_sup <= epsilon
    pos = family.positions if family.positions is not None else None
    for i in range(family.size):
        entry = {"index": i + 1, "mass_fraction": inner / total, "grad_sup": grad_sup, "prop_i": bool(ok_i),
                 "prop_iii": bool(ok_iii)}
        if family.size == 1:
            entry["prop_ii"] = None
        else:
            if pos is None:
                raise ValueError("property (ii) sampling needs an axis family")
            th = np.linspace(0.0, math.pi, n_theta)
            Rg, Tg = np.meshgrid(rho[:-1], th, indexing="ij")   # phi > 0 on the open ball
            ui = profile(Rg)
            worst = 0.0
            for kk in range(family.size):
                if kk == i:
                    continue
                uk = profile(dist_polar(Rg, Tg, pos[kk] - pos[i]))
                worst = max(worst, float(np.max(uk / (epsilon * ui))))
            entry["prop_ii"] = bool(worst < 1.0)
            entry["max_ratio_ii"] = worst
        report["bubbles"].append(entry)
    report["passed"] = all(b["prop_i"] and b["prop_iii"] and b["prop_ii"] in (True, None) for b in report["bubbles"])
    return report
