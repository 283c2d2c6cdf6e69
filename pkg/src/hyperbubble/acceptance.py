"""The acceptance suite: thirteen numbered checks shared by ``all-checks`` and the tests.

Each check returns a :class:`CheckResult`.  ``quick`` lowers sample counts
and skips the slowest oracle comparisons; it never loosens a tolerance.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import geometry as G
from . import interactions as I
from . import operators as O
from . import oracles
from . import stability as S
from .family import BubbleFamily
from .ground_state import euclidean_closed_form, euclidean_constant, ground_state, lambda_sweep, sobolev_quotient

log = logging.getLogger(__name__)

BASE = (3, 3.0, 0.5)
GROUND_STATE_TRIPLES = ((3, 3.0, 0.5), (4, 3.0, 2.1), (5, 2.0, 3.0))
SWEEP_LAMBDAS = tuple(float(x) for x in np.linspace(2.06, 2.24, 8))
PAIR_S = tuple(float(x) for x in np.linspace(4.0, 9.0, 6))
EQUAL_S = tuple(float(x) for x in np.linspace(5.0, 10.0, 6))
THREE_SEPS = ((5.0, 10.0), (6.0, 12.0), (7.0, 14.0))
EPSILONS = (1e-3, 3e-3, 1e-2, 3e-2, 1e-1)
STABILITY_KINDS = ("bump", "random")
INTERACTION_S = (5.0, 6.0, 7.0, 8.0)
FULL_BUDGET_S = 20 * 60


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    note: str = ""

    def line(self) -> str:
        return f"criterion {self.number:2d} {self.name}: {'PASS' if self.passed else 'FAIL'}"

    def as_dict(self) -> dict:
        return {"criterion": self.number, "name": self.name, "passed": self.passed,
                "measured": self.measured, "note": self.note}


def _base_profile():
    return ground_state(*BASE)


def _band(values) -> float:
    v = np.abs(np.asarray(values, dtype=float))
    return float(v.max() / v.min())


# 1 -------------------------------------------------------------------------------------------

def geometry_checks(samples: int = 10_000, seed: int = 0) -> list[dict]:
    """Isometry identities over seeded samples plus the bump gradient bound."""
    rng = np.random.default_rng(seed)
    n = 3
    b = G.random_ball_points(rng, samples, n)
    x = G.random_ball_points(rng, samples, n)
    y = G.random_ball_points(rng, samples, n)
    zero = np.zeros((samples, n))
    e_fix = float(np.max(np.abs(G.translate(b, zero) - b)))
    e_inv = float(np.max(np.abs(G.translate(-b, G.translate(b, x)) - x)))
    d0 = G.dist(x, y)
    d1 = G.dist(G.translate(b, x), G.translate(b, y))
    e_iso = float(np.max(np.abs(d1 - d0)))
    worst = 0.0
    for r, R in ((0.5, 1.0), (1.0, 3.0), (2.0, 4.0), (5.0, 20.0)):
        rho = np.linspace(0.0, R + 1.0, 20001)
        _, der = G.bump(r, R, rho)
        worst = max(worst, float(np.max(np.abs(der)) / ((math.pi / 2) / (R - r))))
    return [
        {"check_name": "translate_origin", "max_error": e_fix, "tolerance": 1e-12},
        {"check_name": "translate_inverse", "max_error": e_inv, "tolerance": 1e-12},
        {"check_name": "translate_isometry", "max_error": e_iso, "tolerance": 1e-12},
        {"check_name": "bump_gradient_ratio", "max_error": worst, "tolerance": 1.0},
    ]


def check_1(quick: bool = False, seed: int = 0) -> CheckResult:
    t = time.perf_counter()
    rows = geometry_checks(1000 if quick else 10_000, seed)
    elapsed = time.perf_counter() - t
    ok = all(r["max_error"] <= r["tolerance"] for r in rows) and elapsed < 5.0
    return CheckResult(1, "geometry kernel", ok, {r["check_name"]: r["max_error"] for r in rows})


# 2 -------------------------------------------------------------------------------------------

def check_2(quick: bool = False, seed: int = 0) -> CheckResult:
    t = time.perf_counter()
    triples = GROUND_STATE_TRIPLES[:1] if quick else GROUND_STATE_TRIPLES
    meas, ok = {}, True
    for trip in triples:
        pr = ground_state(*trip)
        P = pr.params
        scale = max(1.0, pr.amplitude ** P.p)
        dec = pr.decay_report()
        # independent re-quadrature of numerator and denominator
        q = sobolev_quotient(pr)
        id1 = abs(pr.norm_sq / pr.int_p1 - 1.0)
        id2 = abs(q ** ((P.p + 1) / (P.p - 1)) / pr.norm_sq - 1.0)
        er = abs((pr.energy / pr.norm_sq) / ((P.p - 1) / (2 * (P.p + 1))) - 1.0)
        m = {"residual_over_scale": pr.residual_max / scale, "logder_rel_dev": dec["logder_max_rel_dev"],
             "weak_identity": id1, "calu_identity": id2, "energy_ratio": er}
        ok &= (m["residual_over_scale"] <= 1e-8 and m["logder_rel_dev"] <= 0.01
               and id1 <= 1e-6 and id2 <= 1e-6 and er <= 1e-6)
        meas[str(trip)] = m
    elapsed = time.perf_counter() - t
    meas["runtime_ok"] = elapsed < 30.0
    return CheckResult(2, "ground state", bool(ok and elapsed < 30.0), meas)


# 3 -------------------------------------------------------------------------------------------

def check_3(quick: bool = False, seed: int = 0) -> CheckResult:
    meas = {}
    for n in (3, 4, 5):
        meas[n] = abs(euclidean_constant(n) / euclidean_closed_form(n) - 1.0)
    return CheckResult(3, "euclidean oracle", all(v <= 1e-8 for v in meas.values()),
                       {str(k): v for k, v in meas.items()})


# 4 -------------------------------------------------------------------------------------------

def check_4(quick: bool = False, seed: int = 0, workers: int = 1) -> CheckResult:
    t = time.perf_counter()
    lams = SWEEP_LAMBDAS[::2] if quick else SWEEP_LAMBDAS
    sw = lambda_sweep(4, 3.0, lams, workers=workers)
    vals = np.array([r["S_lambda"] for r in sw["rows"]])
    strict = bool(np.all(np.isfinite(vals)) and np.all(np.diff(vals) < 0))
    coef = np.polyfit(np.array(lams) - 2.0, vals, 2)
    extrap = float(np.polyval(coef, 0.0))
    rel = abs(extrap / sw["euclidean_S"] - 1.0)
    elapsed = time.perf_counter() - t
    return CheckResult(4, "S_lambda curve", strict and rel <= 0.02 and elapsed < 120.0,
                       {"S_lambda": vals.tolist(), "extrapolated": extrap, "euclidean_S": sw["euclidean_S"],
                        "rel_gap": rel, "strictly_decreasing": strict})


# 5 -------------------------------------------------------------------------------------------

def check_5(quick: bool = False, seed: int = 0) -> CheckResult:
    pr = _base_profile()
    P = pr.params
    fit = I.fit_exponent(pr, P.p, 1.0, PAIR_S)
    beta = (P.p + 1) / 2
    comp = [I.two_bubble(pr, beta, beta, s).compensated for s in EQUAL_S]
    band = _band(comp)
    ok = fit.relative_error <= 0.02 and fit.r_squared >= 0.999 and band <= 1.5
    return CheckResult(5, "two-bubble exponents", ok,
                       {"slope": fit.slope, "target": fit.target, "slope_rel_error": fit.relative_error,
                        "r_squared": fit.r_squared, "equal_compensated": comp, "equal_band": band})


# 6 -------------------------------------------------------------------------------------------

def check_6(quick: bool = False, seed: int = 0) -> CheckResult:
    pr = _base_profile()
    c = pr.params.c
    perp = [abs(I.deriv_interaction(pr, s, False).value) / math.exp(-c * s) for s in PAIR_S]
    plus = [I.deriv_interaction(pr, s, True) for s in PAIR_S]
    minus = [I.deriv_interaction(pr, -s, True) for s in PAIR_S]
    neg = all(r.value < 0 for r in plus)
    anti = max(abs(a.value + b.value) / abs(a.value) for a, b in zip(plus, minus))
    band = _band([r.compensated for r in plus])
    ok = max(perp) <= 1e-8 and neg and anti <= 1e-9 and band <= 2.0
    return CheckResult(6, "derivative interactions", ok,
                       {"perp_over_exp_max": max(perp), "along_negative": neg, "antisymmetry": anti,
                        "compensated": [r.compensated for r in plus], "band": band})


# 7 -------------------------------------------------------------------------------------------

def check_7(quick: bool = False, seed: int = 0) -> CheckResult:
    pr = _base_profile()
    res = [I.three_bubble(pr, a, b) for a, b in THREE_SEPS]
    comp = [r.compensated for r in res]
    band = _band(comp)
    never_up = all(comp[i + 1] <= comp[i] for i in range(len(comp) - 1))
    return CheckResult(7, "three-bubble bound", band <= 2.0 and never_up,
                       {"values": [r.value for r in res], "compensated": comp, "band": band,
                        "never_increases": never_up},
                       note="the band test is expected to fail: see the decisions ledger")


# 8 -------------------------------------------------------------------------------------------

def check_8(quick: bool = False, seed: int = 0) -> CheckResult:
    t = time.perf_counter()
    pr = _base_profile()
    p = pr.params.p
    l0 = O.mode_eigenvalues(pr, 0, 1)["eigenvalues"][0]
    l1 = O.mode_eigenvalues(pr, 1, 1)["eigenvalues"][0]
    half = O.halfspace_rayleigh(pr)["quotient"]
    elapsed = time.perf_counter() - t
    ok = abs(l0 - 1.0) <= 5e-3 and abs(l1 / p - 1.0) <= 5e-3 and abs(half / p - 1.0) <= 5e-3 and elapsed < 60
    return CheckResult(8, "spectrum", ok, {"l0": l0, "l1": l1, "halfspace": half})


# 9 -------------------------------------------------------------------------------------------

def check_9(quick: bool = False, seed: int = 0) -> CheckResult:
    pr = _base_profile()
    fam = BubbleFamily.on_axis(pr.params, [0.0, 7.0])
    grid, shifted = O.grid_for_positions(pr.params, fam.positions)
    con = O.spectral_gap_constrained(pr, fam, grid, shifted, constrained=True)
    unc = O.spectral_gap_constrained(pr, fam, grid, shifted, constrained=False)
    ok = con["c_tilde"] <= 0.95 and con["c_tilde"] < unc["c_tilde"] and unc["c_tilde"] >= 1.0
    return CheckResult(9, "improved spectral inequality", ok,
                       {"c_tilde": con["c_tilde"], "unconstrained": unc["c_tilde"],
                        "constraint_residual": con["constraint_residual"]})


# 10 ------------------------------------------------------------------------------------------

def check_10(quick: bool = False, seed: int = 0, workers: int = 1) -> CheckResult:
    t = time.perf_counter()
    P = _base_profile().params
    eps = EPSILONS[::2] if quick else EPSILONS
    meas, ok = {}, True
    for kind in STABILITY_KINDS:
        r = S.stability_ratio_experiment(P, 7.0, eps, kind=kind, seed=seed, workers=workers)
        sm = r["summary"]
        all_rows = sm["excluded"] == 0
        kind_ok = all_rows and sm["spread"] <= 3.0
        ok &= kind_ok
        meas[kind] = {"ratios": [row["ratio"] for row in r["rows"]], "spread": sm["spread"],
                      "excluded": sm["excluded"], "floor": sm["floor"],
                      "orthogonality_max": max(row["orthogonality_max"] for row in r["rows"])}
    s_grid = INTERACTION_S[:3] if quick else INTERACTION_S
    iv = S.interaction_vs_deficit(P, s_grid, workers=workers)
    ok &= iv["summary"]["spread"] <= 3.0 and iv["summary"]["excluded"] == 0
    meas["interaction_vs_deficit"] = {"ratios": [r["ratio"] for r in iv["rows"]], "spread": iv["summary"]["spread"]}
    elapsed = time.perf_counter() - t
    return CheckResult(10, "stability inequality", bool(ok and elapsed < 600), meas)


# 11 ------------------------------------------------------------------------------------------

def check_11(quick: bool = False, seed: int = 0) -> CheckResult:
    P = _base_profile().params
    cases = []
    u = S.synthesize(BubbleFamily.on_axis(P, [0.0]))
    cases.append(("single", u, BubbleFamily.on_axis(P, [0.05], [0.97]), [0.0], [1.0]))
    u = S.synthesize(BubbleFamily.on_axis(P, [0.0, 7.0]))
    cases.append(("pair", u, BubbleFamily.on_axis(P, [0.1, 6.8], [0.9, 1.1]), [0.0, 7.0], [1.0, 1.0]))
    if not quick:
        u = S.synthesize(BubbleFamily.on_axis(P, [0.0], [1.1]))
        cases.append(("scaled", u, BubbleFamily.on_axis(P, [0.0]), [0.0], [1.1]))
    meas, ok = {}, True
    for name, u, init, pos, al in cases:
        rep = S.project_to_manifold(u, init.size, init)
        ce = float(np.max(np.abs(rep.family.positions - np.array(pos))))
        ae = float(np.max(np.abs(rep.family.alphas - np.array(al))))
        om = max(max(e) for e in rep.orthogonality)
        good = rep.distance <= rep.noise_floor and ce <= 1e-6 and ae <= 1e-8 and om <= 1e-8
        ok &= good
        meas[name] = {"distance": rep.distance, "floor": rep.noise_floor, "center_error": ce,
                      "alpha_error": ae, "orthogonality": om}
    # a perturbed projection: converged orthogonality must hold there too
    u = S.synthesize(BubbleFamily.on_axis(P, [0.0, 7.0]), {"kind": "bump"}, 1e-2)
    rep = S.project_to_manifold(u)
    om = max(max(e) for e in rep.orthogonality)
    ok &= om <= 1e-8
    meas["bump_1e-2"] = {"distance": rep.distance, "orthogonality": om}
    return CheckResult(11, "projection correctness", bool(ok), meas)


# 12 ------------------------------------------------------------------------------------------

def check_12(quick: bool = False, seed: int = 0) -> CheckResult:
    """Adaptive integrals of criteria 5-7 against the tensor Simpson oracle."""
    pr = _base_profile()
    p = pr.params.p
    beta = (p + 1) / 2
    pair_s = PAIR_S[::5] if quick else PAIR_S
    eq_s = EQUAL_S[::5] if quick else EQUAL_S
    seps = THREE_SEPS[::2] if quick else THREE_SEPS
    errs = {}
    for s in pair_s:
        a = I.two_bubble(pr, p, 1.0, s).value
        errs[f"two(p,1,{s:g})"] = abs(a / oracles.bubble_product(pr, [0.0, s], [p, 1.0]) - 1.0)
    for s in eq_s:
        a = I.two_bubble(pr, beta, beta, s).value
        errs[f"two(b,b,{s:g})"] = abs(a / oracles.bubble_product(pr, [0.0, s], [beta, beta]) - 1.0)
    for s12, s13 in seps:
        a = I.three_bubble(pr, s12, s13).value
        errs[f"three({s12:g},{s13:g})"] = abs(a / oracles.bubble_product(pr, [0.0, s12, s13], [p - 1, 1.0, 1.0]) - 1.0)
    for s in pair_s:
        for sg in (1.0, -1.0):
            a = I.deriv_interaction(pr, sg * s, True).value
            errs[f"deriv({sg * s:g})"] = abs(a / oracles.deriv_along_axis(pr, sg * s) - 1.0)
    for s in pair_s:
        # the perpendicular integral vanishes; compare on the scale of the along-axis value
        a = I.deriv_interaction(pr, s, False).value
        ref = abs(I.deriv_interaction(pr, s, True).value)
        errs[f"perp({s:g})"] = abs(a - oracles.deriv_perpendicular(pr, s)) / ref
    worst = max(errs.values())
    return CheckResult(12, "quadrature oracle equivalence", worst <= 1e-7, {"max_rel": worst, "errors": errs})


# 13 ------------------------------------------------------------------------------------------

def check_13(quick: bool = False, seed: int = 0, elapsed_before: float = 0.0) -> CheckResult:
    """Determinism of ``all-checks --quick`` and the full-suite time budget.

    In quick mode only the seeded pieces are rerun in-process (a quick run
    cannot rerun itself); the full mode drives two CLI runs.
    """
    if quick:
        a = geometry_checks(1000, seed)
        b = geometry_checks(1000, seed)
        P = _base_profile().params
        fam = BubbleFamily.on_axis(P, [0.0, 5.0])
        f1 = S.synthesize(fam, {"kind": "random", "seed": seed}, 1e-2).values
        f2 = S.synthesize(fam, {"kind": "random", "seed": seed}, 1e-2).values
        same = a == b and f1.tobytes() == f2.tobytes()
        return CheckResult(13, "determinism", same, {"identical": same, "mode": "in-process"})
    import filecmp
    import os
    import tempfile

    from .cli import main

    t = time.perf_counter()
    with tempfile.TemporaryDirectory() as d1, tempfile.TemporaryDirectory() as d2:
        codes = [main(["--output-dir", d, "--seed", str(seed), "--workers", "1", "all-checks", "--quick"])
                 for d in (d1, d2)]
        names = sorted(os.listdir(d1))
        same = names == sorted(os.listdir(d2)) and all(
            filecmp.cmp(os.path.join(d1, f), os.path.join(d2, f), shallow=False) for f in names)
    total = elapsed_before + (time.perf_counter() - t)
    ok = same and total < FULL_BUDGET_S
    return CheckResult(13, "determinism", ok, {"identical": same, "files": names, "quick_exit_codes": codes,
                                               "full_suite_within_budget": total < FULL_BUDGET_S})


CHECKS = {1: check_1, 2: check_2, 3: check_3, 4: check_4, 5: check_5, 6: check_6, 7: check_7,
          8: check_8, 9: check_9, 10: check_10, 11: check_11, 12: check_12}


def run_all(quick: bool = False, seed: int = 0, workers: int = 1, only=None) -> tuple[list[CheckResult], float]:
    """Run the suite in order; returns the results and the total wall time (logged, never written)."""
    t0 = time.perf_counter()
    out = []
    for k in range(1, 14):
        if only is not None and k not in only:
            continue
        t = time.perf_counter()
        if k == 13:
            r = check_13(quick, seed, time.perf_counter() - t0)
        elif k in (4, 10):
            r = CHECKS[k](quick, seed, workers)
        else:
            r = CHECKS[k](quick, seed)
        log.info("%s (%.1f s)", r.line(), time.perf_counter() - t)
        out.append(r)
    return out, time.perf_counter() - t0
