"""Bubble-plus-perturbation fields, projection onto the bubble manifold,
deficits and the stability experiments.

All fields live on an :class:`~hyperbubble.operators.AxisymGrid` whose
origin is the midpoint of the extreme centers; bubble positions inside this
module are signed axis distances in that frame unless stated otherwise.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CollapsedBubbles,
    DegenerateConfiguration,
    GridTooCoarse,
    NoConvergence,
    NoiseFloor,
)
from .family import BubbleFamily
from .geometry import Params, bump, dist, translate
from .ground_state import RadialProfile, euclidean_closed_form, ground_state
from .interactions import _rotation_to, _truncated, chi_sup, two_bubble
from .operators import (
    DEFAULT_DEGREE,
    DEFAULT_H,
    AxisymField,
    AxisymGrid,
    bubble_residual,
    grid_for_positions,
    noise_floor,
)
from .quadrature import dist_polar

log = logging.getLogger(__name__)

PERTURBATION_CATALOG_VERSION = 1
PERTURBATION_KINDS = ("none", "bump", "v1", "random")
MIN_CORE_NODES = 12
MAX_ITER = 200
STEP_TOL = 1e-10
ORTHO_TOL = 1e-8
COLLAPSE = math.log(3.0)


def _profile(params: Params) -> RadialProfile:
    return ground_state(params.n, params.p, params.lam)


# --- synthesis ----------------------------------------------------------------------------

def perturbation_field(grid: AxisymGrid, profile: RadialProfile, shifted, spec: dict) -> np.ndarray:
    """Unscaled perturbation from the catalog, sampled on the grid.

    ``bump``   U(d(x, z0))^q times the cut-off bump(r, R) around z0 (default: grid origin).
    ``v1``     V_1(U_i) = -2 d/ds U(d(x, s e_1)) at s = s_i (``index`` is 1-based).
    ``random`` three seeded Gaussians in the distance to axis points between
               the extreme centers, scaled to unit lambda-norm.
    """
    kind = spec.get("kind", "none")
    if kind not in PERTURBATION_KINDS:
        raise ValueError(f"unknown perturbation kind {kind!r}; expected one of {PERTURBATION_KINDS}")
    if kind == "none":
        return np.zeros(grid.RHO.shape)
    if kind == "bump":
        z0 = float(spec.get("center", 0.0))
        q = float(spec.get("q", 1.0))
        r, R = float(spec.get("r", 1.0)), float(spec.get("R", 3.0))
        d = grid.RHO if z0 == 0.0 else dist_polar(grid.RHO, grid.THETA, z0)
        phi, _ = bump(r, R, d)
        return np.abs(profile(d)) ** q * phi
    if kind == "v1":
        i = int(spec.get("index", 1)) - 1
        return -2.0 * grid.bubble_ds(profile, float(shifted[i]))
    rng = np.random.default_rng(int(spec.get("seed", 0)))
    lo, hi = float(np.min(shifted)), float(np.max(shifted))
    out = np.zeros(grid.RHO.shape)
    for _ in range(int(spec.get("terms", 3))):
        t = rng.uniform(lo, hi) if hi > lo else lo
        a = rng.standard_normal()
        w = rng.uniform(0.7, 1.5)
        d = grid.RHO if t == 0.0 else dist_polar(grid.RHO, grid.THETA, t)
        out += a * np.exp(-(d / w) ** 2)
    return out / math.sqrt(grid.energy(out))


def synthesize(family: BubbleFamily, perturbation: dict | None = None, epsilon: float | None = None,
               grid: AxisymGrid | None = None, L: int | None = None, h: float = DEFAULT_H,
               degree: int = DEFAULT_DEGREE, margin: float = 14.0) -> AxisymField:
    """u = sum alpha_i U[z_i] + epsilon * perturbation on an axisymmetric grid.

    ``perturbation`` is a catalog entry such as ``{"kind": "bump"}``; epsilon
    may be given there or as an argument.  The returned field's ``info``
    records the frame offset, the shifted positions, sigma and the
    perturbation so that callers can check linearity.
    """
    if family.positions is None:
        raise ValueError("synthesize needs a collinear family built on the axis")
    spec = dict(perturbation or {"kind": "none"})
    eps = float(spec.pop("epsilon", 0.0) if epsilon is None else epsilon)
    P = family.params
    profile = _profile(P)
    pos = family.positions
    mid = 0.5 * (float(pos.min()) + float(pos.max()))
    shifted = pos - mid
    if grid is None:
        extra = ()
        if spec.get("kind") == "bump":
            z0 = float(spec.get("center", 0.0))
            if z0 == 0.0:
                extra = (float(spec.get("r", 1.0)), float(spec.get("R", 3.0)))
        grid, _ = grid_for_positions(P, pos, L=L, h=h, degree=degree, margin=margin, extra_breaks=extra)
    for i, s in enumerate(shifted):
        k = grid.core_nodes(profile, float(s))
        if k < MIN_CORE_NODES:
            raise GridTooCoarse(f"bubble {i + 1} has {k} nodes within one e-folding (< {MIN_CORE_NODES})")
    sigma = np.zeros(grid.RHO.shape)
    for a, s in zip(family.alphas, shifted):
        sigma += a * grid.bubble(profile, float(s))
    pert = perturbation_field(grid, profile, shifted, spec) if spec.get("kind", "none") != "none" else np.zeros_like(sigma)
    info = {"offset": mid, "shifted": shifted.copy(), "family": family, "sigma": sigma,
            "perturbation": pert, "epsilon": eps, "spec": spec,
            "catalog_version": PERTURBATION_CATALOG_VERSION}
    return AxisymField(grid, sigma + eps * pert, P, info)


# --- deficit -----------------------------------------------------------------------------------

def calibrated_floor(u: AxisymField, profile: RadialProfile | None = None) -> float:
    """Residual norm of an exact single bubble at each center of u (cached on the grid)."""
    profile = profile or _profile(u.params)
    shifted = u.info.get("shifted", np.zeros(1))
    key = tuple(float(s) for s in shifted)
    cache = u.grid.__dict__.setdefault("_floors", {})
    if key not in cache:
        cache[key] = noise_floor(u.grid, profile, key)
    return cache[key]


def deficit(u: AxisymField, with_floor: bool = True) -> dict:
    """||Delta u + lambda u + |u|^{p-1} u||_{H^-1} with the grid's calibrated floor."""
    val = u.grid.dual_norm(bubble_residual(u.grid, u.values, u.params.p))
    out = {"value": val}
    if with_floor:
        fl = calibrated_floor(u)
        out["noise_floor"] = fl
        out["below_floor"] = bool(val <= fl)
    return out


# --- projection ----------------------------------------------------------------------------------

@dataclass
class DeficitReport:
    deficit: float
    distance: float
    family: BubbleFamily
    orthogonality: list = field(default_factory=list)
    noise_floor: float = 0.0
    converged: bool = True
    iterations: int = 0
    label: str = "within axisymmetric class"

    def as_dict(self) -> dict:
        return {
            "deficit": self.deficit,
            "distance": self.distance,
            "positions": self.family.positions.tolist(),
            "alphas": self.family.alphas.tolist(),
            "orthogonality": self.orthogonality,
            "noise_floor": self.noise_floor,
            "converged": self.converged,
            "iterations": self.iterations,
            "label": self.label,
        }


def _model(grid, profile, alphas, s):
    N = len(alphas)
    B = [grid.bubble(profile, float(si)) for si in s]
    D = [grid.bubble_ds(profile, float(si)) for si in s]
    sigma = sum(alphas[i] * B[i] for i in range(N))
    cols = B + [alphas[i] * D[i] for i in range(N)]
    return sigma, cols, B, D


def objective(u: AxisymField, alphas, s) -> float:
    """(1/2)||u - sum alpha_i U[s_i]||_lambda^2 with s in the grid frame."""
    profile = _profile(u.params)
    sigma, _, _, _ = _model(u.grid, profile, np.asarray(alphas, float), np.asarray(s, float))
    r = u.values - sigma
    return 0.5 * u.grid.energy(r)


def objective_gradient(u: AxisymField, alphas, s) -> np.ndarray:
    """Analytic gradient of :func:`objective` in (alpha, s)."""
    profile = _profile(u.params)
    sigma, cols, _, _ = _model(u.grid, profile, np.asarray(alphas, float), np.asarray(s, float))
    Ar = u.grid.apply(u.values - sigma)
    return -np.array([float(np.sum(Ar * c)) for c in cols])


def _orthogonality(grid, r, Ar, B, D, p, rfloor, rnorm):
    """Both constraint integrals per bubble, in the discrete A-pairing.

    <r, U_i>_A stands for int r U_i^p and <r, V_1(U_i)>_A / p for
    int r U_i^{p-1} V_1(U_i); each is divided by ||r|| ||U_i||^p.
    ||r|| is floored at ``rfloor`` so exact inputs do not divide roundoff by roundoff.
    """
    out = []
    rn = max(rnorm, rfloor)
    for Bi, Di in zip(B, D):
        ni = math.sqrt(grid.energy(Bi)) ** p
        e1 = abs(float(np.sum(Ar * Bi))) / (rn * ni)
        e2 = abs(float(np.sum(Ar * (-2.0 * Di)))) / p / (rn * ni)
        out.append([e1, e2])
    return out


def project_to_manifold(u: AxisymField, N: int | None = None, init: BubbleFamily | None = None,
                        max_iter: int = MAX_ITER, ortho_tol: float = ORTHO_TOL,
                        with_deficit: bool = True) -> DeficitReport:
    """Minimize ||u - sum alpha_i U[s_i]||_lambda over real alpha and axis centers s.

    Damped Gauss-Newton (Levenberg-Marquardt) in the lambda-metric, warm
    started from ``init`` (default: the family u was synthesized from).
    """
    grid = u.grid
    P = u.params
    profile = _profile(P)
    offset = float(u.info.get("offset", 0.0))
    if init is None:
        init = u.info.get("family")
        if init is None:
            raise ValueError("project_to_manifold needs an initial family")
    if init.positions is None:
        raise ValueError("initial family must lie on the axis")
    N = init.size if N is None else int(N)
    if N != init.size:
        raise ValueError(f"initial family has {init.size} bubbles, expected {N}")
    alphas = init.alphas.astype(float).copy()
    s = init.positions.astype(float) - offset

    unorm = math.sqrt(max(grid.energy(u.values), 0.0))
    if with_deficit:
        d = deficit(u)
        dval, fl = d["value"], d["noise_floor"]
        rfloor = 10.0 * fl     # the noise-floor discipline: ||rho|| below 10x floor is not resolved
    else:
        dval, fl = float("nan"), float("nan")
        rfloor = 1e-10 * unorm
    mu = 1e-3
    converged = False
    it = 0
    sigma, cols, B, D = _model(grid, profile, alphas, s)
    r = u.values - sigma
    Ar = grid.apply(r)
    F = 0.5 * float(np.sum(Ar * r))
    ortho = None
    for it in range(1, max_iter + 1):
        AJ = [grid.apply(c) for c in cols]
        G = np.array([[float(np.sum(a * c)) for c in cols] for a in AJ])
        g = np.array([float(np.sum(a * r)) for a in AJ])
        ortho = _orthogonality(grid, r, Ar, B, D, P.p, rfloor, math.sqrt(max(2 * F, 0.0)))
        ortho_ok = max(max(e) for e in ortho) <= ortho_tol
        accepted = False
        for _ in range(30):
            M = G + mu * np.diag(np.diag(G))
            step = np.linalg.solve(M, g)
            a_new = alphas + step[:N]
            s_new = s + step[N:]
            order = np.sort(s_new)
            if N > 1 and np.min(np.diff(order)) < COLLAPSE:
                raise CollapsedBubbles(f"centers merged below ln 3 separation at iteration {it}: {s_new + offset}")
            sig_n, cols_n, B_n, D_n = _model(grid, profile, a_new, s_new)
            r_n = u.values - sig_n
            Ar_n = grid.apply(r_n)
            F_n = 0.5 * float(np.sum(Ar_n * r_n))
            if F_n <= F or abs(F_n - F) <= 1e-15 * max(unorm ** 2, 1.0):
                accepted = True
                break
            mu *= 4.0
        if not accepted:
            # no descent left: stationary to working precision
            converged = ortho_ok
            break
        alphas, s = a_new, s_new
        sigma, cols, B, D, r, Ar, F = sig_n, cols_n, B_n, D_n, r_n, Ar_n, F_n
        mu = max(mu / 3.0, 1e-12)
        if float(np.max(np.abs(step))) <= STEP_TOL:
            ortho = _orthogonality(grid, r, Ar, B, D, P.p, rfloor, math.sqrt(max(2 * F, 0.0)))
            converged = max(max(e) for e in ortho) <= ortho_tol
            break
    if not converged:
        raise NoConvergence(f"projection did not converge in {it} iterations "
                            f"(objective {F:.3e}, orthogonality {ortho})")
    distance = math.sqrt(max(2.0 * F, 0.0))
    fam = BubbleFamily.on_axis(P, s + offset, alphas)
    return DeficitReport(deficit=dval, distance=distance, family=fam, orthogonality=ortho,
                         noise_floor=fl, converged=converged, iterations=it)


# --- experiments ---------------------------------------------------------------------------------

def _ratio_row(task):
    params, positions, alphas, spec, eps, L, h, degree, margin = task
    fam = BubbleFamily.on_axis(params, positions, alphas)
    u = synthesize(fam, spec, eps, L=L, h=h, degree=degree, margin=margin)
    try:
        rep = project_to_manifold(u)
        dist_, conv = rep.distance, rep.converged
        ortho = max(max(e) for e in rep.orthogonality)
        d, fl = rep.deficit, rep.noise_floor
    except NoConvergence:
        dd = deficit(u)
        d, fl, dist_, conv, ortho = dd["value"], dd["noise_floor"], float("nan"), False, float("nan")
    ratio = dist_ / d if d > 0 else float("nan")
    return {"epsilon": eps, "deficit": d, "distance": dist_, "ratio": ratio, "noise_floor": fl,
            "converged": conv, "orthogonality_max": ortho, "grid_meta": u.grid.meta}


def _run(tasks, fn, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, tasks))


def _row_counts(row, floor_factor=10.0):
    fl = row["noise_floor"]
    return (row["converged"] and row["deficit"] >= floor_factor * fl
            and row["distance"] >= floor_factor * fl)


def stability_ratio_experiment(params: Params, s: float, epsilons, kind: str = "bump", seed: int = 0,
                               N: int = 2, positions=None, alphas=None, perturbation: dict | None = None,
                               L: int | None = None, h: float = DEFAULT_H, degree: int = DEFAULT_DEGREE,
                               margin: float = 14.0, workers: int = 1) -> dict:
    """Rows (epsilon, deficit, distance, ratio = distance/deficit, noise_floor, converged).

    Rows where either quantity is below 10x the calibrated floor are kept in
    the table but excluded from the band statistics.
    """
    if positions is None:
        positions = [s * k for k in range(N)]
    if alphas is None:
        alphas = [1.0] * len(positions)
    spec = dict(perturbation or {})
    spec.setdefault("kind", kind)
    if spec["kind"] == "random":
        spec.setdefault("seed", seed)
    eps_sorted = sorted(float(e) for e in epsilons)
    tasks = [(params, list(positions), list(alphas), spec, e, L, h, degree, margin) for e in eps_sorted]
    rows = _run(tasks, _ratio_row, workers)
    counted = [r for r in rows if _row_counts(r)]
    if not counted:
        raise NoiseFloor("every row is below 10x the noise floor")
    ratios = [r["ratio"] for r in counted]
    summary = {
        "ratio_max": max(ratios),
        "ratio_min": min(ratios),
        "spread": max(ratios) / min(ratios),
        "counted": len(counted),
        "excluded": len(rows) - len(counted),
        "floor": max(r["noise_floor"] for r in rows),
        "monotone_increasing_as_eps_decreases": _monotone_up([r["ratio"] for r in counted]),
        "grid_meta": rows[0]["grid_meta"],
        "perturbation": spec,
        "catalog_version": PERTURBATION_CATALOG_VERSION,
    }
    return {"rows": rows, "summary": summary}


def _monotone_up(ratios_by_increasing_eps) -> bool:
    r = ratios_by_increasing_eps
    return len(r) > 2 and all(r[i] > r[i + 1] for i in range(len(r) - 1))


def _interaction_row(task):
    params, s, alphas, L, h, degree = task
    profile = _profile(params)
    fam = BubbleFamily.on_axis(params, [0.0, s], alphas)
    u = synthesize(fam, None, 0.0, L=L, h=h, degree=degree)
    d = deficit(u)
    inter = two_bubble(profile, params.p, 1.0, s).value
    row = {"s": s, "interaction": inter, "deficit": d["value"], "ratio": inter / d["value"],
           "noise_floor": d["noise_floor"], "grid_meta": u.grid.meta}
    if alphas is not None and abs(alphas[0] - 1.0) > 0:
        row["alpha_deviation"] = abs(alphas[0] - 1.0)
        try:
            rep = project_to_manifold(u)
            row["alpha_bound_terms"] = d["value"] + rep.distance
        except NoConvergence:
            row["alpha_bound_terms"] = float("nan")
    return row


def interaction_vs_deficit(params: Params, s_grid, alphas=None, L: int | None = None,
                           h: float = DEFAULT_H, degree: int = DEFAULT_DEGREE, workers: int = 1) -> dict:
    """Rows (s, int U_1^p U_2, deficit, ratio) for the exact pair U[0] + U[s]."""
    tasks = [(params, float(s), None if alphas is None else list(alphas), L, h, degree) for s in sorted(s_grid)]
    rows = _run(tasks, _interaction_row, workers)
    counted = [r for r in rows if r["deficit"] >= 10.0 * r["noise_floor"]]
    if not counted:
        raise NoiseFloor("every deficit is below 10x the noise floor")
    ratios = [r["ratio"] for r in counted]
    summary = {"ratio_max": max(ratios), "ratio_min": min(ratios), "spread": max(ratios) / min(ratios),
               "counted": len(counted), "excluded": len(rows) - len(counted)}
    if len(counted) >= 2:
        ss = np.array([r["s"] for r in counted])
        summary["slope_interaction"] = float(np.polyfit(ss, np.log([r["interaction"] for r in counted]), 1)[0])
        summary["slope_deficit"] = float(np.polyfit(ss, np.log([r["deficit"] for r in counted]), 1)[0])
        summary["slope_rel_diff"] = abs(summary["slope_deficit"] / summary["slope_interaction"] - 1.0)
    return {"rows": rows, "summary": summary}


# --- geometric normalization -----------------------------------------------------------------

def normalize_configuration(centers) -> tuple[np.ndarray, int, int, float]:
    """Isometric normal form of a finite set of centers.

    A farthest pair (a, b) is chosen; a is translated to the origin, b is
    rotated onto the positive e_1 axis, and the translation tau_{-b} finishes
    the construction.  Returns (centers, k, j, kappa) with z_k = 0 (1-based
    k = b), j = 1, and kappa = min over i != k of -x_i[0].
    """
    Z = np.atleast_2d(np.asarray(centers, dtype=float))
    M, n = Z.shape
    if M < 2:
        raise DegenerateConfiguration("need at least two centers")
    D = np.array([[float(dist(Z[i], Z[k])) if i != k else 0.0 for k in range(M)] for i in range(M)])
    off = D[~np.eye(M, dtype=bool)]
    if np.any(off == 0.0):
        raise DegenerateConfiguration("centers coincide")
    a, b = np.unravel_index(int(np.argmax(D)), D.shape)
    a, b = int(min(a, b)), int(max(a, b))
    W = translate(-Z[a], Z)
    Rm = _rotation_to(W[b])
    W = W @ Rm          # R^T x: sends W[b] to the positive e_1 axis
    W = translate(-W[b], W)
    W[b] = 0.0
    others = [i for i in range(M) if i != b]
    kappa = float(np.min(-W[others, 0]))
    return W, b + 1, 1, kappa


# --- energy ------------------------------------------------------------------------------------------

def energy_functional(u) -> float:
    """I_lambda(u) = ||u||_lambda^2 / 2 - int |u|^{p+1} / (p+1).

    Accepts an AxisymField (grid quadrature) or an axis BubbleFamily, for
    which the pairings are adaptive integrals: <U_i, U_k>_lambda =
    int U_i^p U_k and int |sigma|^{p+1} over the ball.
    """
    if isinstance(u, AxisymField):
        p = u.params.p
        return 0.5 * u.grid.energy(u.values) - u.grid.integrate(np.abs(u.values) ** (p + 1)) / (p + 1)
    if isinstance(u, BubbleFamily):
        return _family_energy(u)
    raise TypeError("energy_functional takes an AxisymField or a BubbleFamily")


def _family_energy(fam: BubbleFamily) -> float:
    if fam.positions is None:
        raise ValueError("family energy needs axis positions")
    P = fam.params
    profile = _profile(P)
    p, n, c = P.p, P.n, P.c
    al, pos = fam.alphas, fam.positions
    quad = 0.0
    for i in range(fam.size):
        for k in range(fam.size):
            if i == k:
                quad += al[i] ** 2 * profile.norm_sq
            else:
                quad += al[i] * al[k] * two_bubble(profile, p, 1.0, abs(pos[k] - pos[i]), tol=1e-11).value
    terms = [(float(s - pos[0]), float(a)) for s, a in zip(pos, al)]

    def F(r, t):
        acc = 0.0
        for s, a in terms:
            d = r if s == 0.0 else dist_polar(r, t, s)
            acc = acc + a * profile(d)
        return np.abs(acc) ** (p + 1)

    chi = chi_sup(profile) * float(np.sum(np.abs(al))) * math.exp(c * max(abs(s) for s, _ in terms))
    total = float(np.sum(np.abs(al) ** (p + 1))) * profile.int_p1
    val, _ = _truncated(F, n, [s for s, _ in terms], (p + 1) * c - (n - 1), chi ** (p + 1), 1e-11,
                        abs_tol=1e-11 * total)
    return 0.5 * quad - val / (p + 1)


def energy_level_report(u) -> dict:
    """Energy in units of a single bubble's level, plus the critical-case indicator."""
    P = u.params
    profile = _profile(P)
    level = (P.p - 1) / (2 * (P.p + 1)) * profile.sobolev ** ((P.p + 1) / (P.p - 1))
    e = energy_functional(u)
    out = {"energy": e, "bubble_level": level, "level_ratio": e / level,
           "nearest_count": int(round(e / level))}
    critical = P.n > 2 and abs(P.p - (P.n + 2) / (P.n - 2)) < 1e-12
    if critical:
        out["sobolev_ratio_power"] = (profile.sobolev / euclidean_closed_form(P.n)) ** (P.n / 2)
        out["note"] = "descriptive only; rationality is not decided"
    return out
