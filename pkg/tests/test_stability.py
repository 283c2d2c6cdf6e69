import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperbubble.errors import DegenerateConfiguration, GridTooCoarse, NoiseFloor
from hyperbubble.family import BubbleFamily
from hyperbubble.geometry import axis_point, dist, random_orthogonal, validate_params
from hyperbubble.interactions import two_bubble
from hyperbubble.operators import AxisymField
from hyperbubble.stability import (deficit, energy_functional, energy_level_report, normalize_configuration,
                                   objective, objective_gradient, perturbation_field, project_to_manifold,
                                   stability_ratio_experiment, synthesize, interaction_vs_deficit)

P = validate_params(3, 3, 0.5)


@pytest.fixture(scope="module")
def pair7():
    return synthesize(BubbleFamily.on_axis(P, [0.0, 7.0]))


def test_synthesize_none_is_single_bubble(base):
    u = synthesize(BubbleFamily.on_axis(P, [0.0]))
    assert np.array_equal(u.values, u.grid.bubble(base, 0.0))
    d = deficit(u)
    assert d["below_floor"]


def test_v1_perturbation_linearity():
    fam = BubbleFamily.on_axis(P, [0.0, 7.0])
    u = synthesize(fam, {"kind": "v1", "index": 1}, 1e-2)
    sigma = u.info["sigma"]
    v = u.info["perturbation"]
    off = math.sqrt(u.grid.energy(u.values - sigma))
    assert off == pytest.approx(1e-2 * math.sqrt(u.grid.energy(v)), rel=1e-6)


def test_random_perturbation_is_bit_identical():
    fam = BubbleFamily.on_axis(P, [0.0, 3.0])
    a = synthesize(fam, {"kind": "random", "seed": 11}, 0.01)
    b = synthesize(fam, {"kind": "random", "seed": 11}, 0.01)
    c = synthesize(fam, {"kind": "random", "seed": 12}, 0.01)
    assert a.values.tobytes() == b.values.tobytes()
    assert not np.array_equal(a.values, c.values)


def test_grid_too_coarse():
    with pytest.raises(GridTooCoarse):
        synthesize(BubbleFamily.on_axis(P, [0.0, 3.0]), L=8, h=6.0, degree=2)


def test_deficit_of_doubled_bubble_matches_closed_form(base):
    # U solves the equation, so the residual of 2U is (2 - 2^p) U^p, whose dual norm is |2 - 2^p| ||U||_lambda
    u = synthesize(BubbleFamily.on_axis(P, [0.0]))
    d = deficit(AxisymField(u.grid, 2.0 * u.values, P, u.info))
    expected = abs(2 - 2 ** P.p) * math.sqrt(base.norm_sq)
    assert d["value"] == pytest.approx(expected, rel=1e-6)
    assert d["value"] > 10 * d["noise_floor"]


def test_pair_deficit_comparable_to_interaction(base, pair7):
    d = deficit(pair7)["value"]
    inter = two_bubble(base, P.p, 1.0, 7.0).value
    assert 1 / 3 <= d / inter <= 3


def test_projection_recovers_exact_pair(pair7):
    rep = project_to_manifold(pair7)
    assert rep.distance <= rep.noise_floor * 10
    assert rep.family.alphas == pytest.approx([1.0, 1.0], abs=1e-6)
    assert rep.family.positions == pytest.approx([0.0, 7.0], abs=1e-6)
    assert rep.label == "within axisymmetric class"


def test_projection_from_perturbed_start(pair7):
    init = BubbleFamily.on_axis(P, [0.05, 6.9], [0.97, 1.02])
    rep = project_to_manifold(pair7, init=init)
    assert rep.family.positions == pytest.approx([0.0, 7.0], abs=1e-6)


def test_projection_of_scaled_bubble():
    u = synthesize(BubbleFamily.on_axis(P, [0.0], [1.1]))
    rep = project_to_manifold(u, init=BubbleFamily.on_axis(P, [0.0]))
    assert rep.distance <= 10 * rep.noise_floor
    assert rep.family.alphas[0] == pytest.approx(1.1, rel=1e-8)


def test_projection_bump_feasibility_and_stationarity():
    fam = BubbleFamily.on_axis(P, [0.0, 7.0])
    u = synthesize(fam, {"kind": "bump"}, 1e-2)
    rep = project_to_manifold(u)
    offset = math.sqrt(u.grid.energy(u.values - u.info["sigma"]))
    assert rep.distance <= offset
    assert offset == pytest.approx(1e-2 * math.sqrt(u.grid.energy(u.info["perturbation"])), rel=1e-10)
    assert max(max(e) for e in rep.orthogonality) <= 1e-8
    d = rep.as_dict()
    assert set(d) >= {"deficit", "distance", "orthogonality", "noise_floor", "converged"}


def test_gradient_matches_finite_differences():
    fam = BubbleFamily.on_axis(P, [0.0, 3.0])
    u = synthesize(fam, {"kind": "random", "seed": 5}, 0.05)
    a0 = np.array([0.98, 1.03])
    s0 = u.info["shifted"] + np.array([0.02, -0.03])
    g = objective_gradient(u, a0, s0)
    x0 = np.concatenate([a0, s0])
    h = 1e-5
    for k in range(4):
        e = np.zeros(4)
        e[k] = h
        fp = objective(u, (x0 + e)[:2], (x0 + e)[2:])
        fm = objective(u, (x0 - e)[:2], (x0 - e)[2:])
        fd = (fp - fm) / (2 * h)
        assert g[k] == pytest.approx(fd, rel=1e-6, abs=1e-9 * np.max(np.abs(g)))


def test_min_property_against_explicit_manifold_points():
    fam = BubbleFamily.on_axis(P, [0.0, 7.0])
    u = synthesize(fam, {"kind": "random", "seed": 2}, 0.03)
    rep = project_to_manifold(u)
    base_pos = u.info["shifted"]
    for da, ds in [((0, 0), (0, 0)), ((0.01, -0.01), (0, 0)), ((0, 0), (0.02, 0.01)), ((-0.02, 0.0), (0.0, -0.05))]:
        val = math.sqrt(2 * objective(u, 1 + np.array(da), base_pos + np.array(ds)))
        assert rep.distance <= val * (1 + 1e-12)


@pytest.mark.parametrize("kind", ["bump", "random"])
def test_ratio_bounded_for_generic_perturbations(kind):
    res = stability_ratio_experiment(P, 7.0, [1e-3, 1e-2, 1e-1], kind=kind, seed=3)
    assert res["summary"]["excluded"] == 0
    assert res["summary"]["spread"] <= 3


def test_ratio_band_for_axis_mode_perturbation():
    # V_1(U_1) is tangent to the bubble manifold: the distance falls like eps^2 while the
    # deficit keeps the interaction floor of the pair, so the ratio sinks as eps -> 0
    res = stability_ratio_experiment(P, 7.0, [1e-3, 1e-2, 1e-1], kind="v1")
    assert res["summary"]["ratio_max"] < 1.0
    assert res["summary"]["spread"] <= 3


def test_zero_epsilon_row():
    res = stability_ratio_experiment(P, 7.0, [0.0, 1e-2], kind="bump")
    zero = res["rows"][0]
    assert zero["distance"] < 10 * zero["noise_floor"]
    assert zero["deficit"] > 10 * zero["noise_floor"]
    assert res["summary"]["excluded"] == 1


def test_all_rows_below_floor_raise():
    with pytest.raises(NoiseFloor):
        stability_ratio_experiment(P, 0.0, [0.0], kind="bump", N=1)


@pytest.mark.slow
def test_ratio_stable_under_grid_doubling():
    eps = [1e-2, 1e-1]
    coarse = stability_ratio_experiment(P, 7.0, eps, kind="bump", L=640, h=0.5)
    fine = stability_ratio_experiment(P, 7.0, eps, kind="bump", L=1280, h=0.25)
    for a, b in zip(coarse["rows"], fine["rows"]):
        assert abs(a["ratio"] / b["ratio"] - 1) <= 0.10


def test_interaction_vs_deficit_table():
    res = interaction_vs_deficit(P, [5.0, 6.0, 7.0])
    assert res["summary"]["spread"] <= 3
    assert res["summary"]["slope_rel_diff"] <= 0.05


def test_interaction_vs_deficit_alpha_row():
    res = interaction_vs_deficit(P, [6.0], alphas=[1.05, 1.0])
    row = res["rows"][0]
    assert row["alpha_deviation"] == pytest.approx(0.05)
    assert row["alpha_bound_terms"] > 0


def test_normalize_two_centers():
    W, k, j, kappa = normalize_configuration([np.zeros(3), axis_point(6.0, 3)])
    assert k == 2 and j == 1
    assert W[0] == pytest.approx([-math.tanh(3.0), 0, 0], abs=1e-12)
    assert np.all(W[1] == 0)
    assert kappa == pytest.approx(0.99505, abs=1e-5)


def test_normalize_three_on_axis():
    W, k, j, kappa = normalize_configuration([axis_point(s, 3) for s in (0.0, 6.0, 13.0)])
    others = [i for i in range(3) if i != k - 1]
    assert np.all(W[others, 0] <= -kappa)
    assert kappa >= 0.4


def test_normalize_rejects_coincident():
    with pytest.raises(DegenerateConfiguration):
        normalize_configuration([np.zeros(3), np.zeros(3)])


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_normalize_rotation_equivariance(seed):
    rng = np.random.default_rng(seed)
    Z = rng.uniform(-0.5, 0.5, size=(4, 3))
    Q = random_orthogonal(3, rng)
    W1, k1, _, kap1 = normalize_configuration(Z)
    W2, k2, _, kap2 = normalize_configuration(Z @ Q.T)
    assert k1 == k2
    G1 = np.array([[float(dist(a, b)) for b in W1] for a in W1])
    G2 = np.array([[float(dist(a, b)) for b in W2] for a in W2])
    assert G2 == pytest.approx(G1, rel=1e-8, abs=1e-10)
    # both normal forms put z_k at 0 with the others in the x_1 < 0 half: same gram data from the origin
    assert np.linalg.norm(W2, axis=1) == pytest.approx(np.linalg.norm(W1, axis=1), abs=1e-10)
    assert kap2 == pytest.approx(kap1, abs=1e-8)


def test_normalize_is_isometric():
    Z = np.array([[0.1, 0.2, 0.0], [-0.4, 0.3, 0.2], [0.5, -0.5, 0.1]])
    W, *_ = normalize_configuration(Z)
    for i in range(3):
        for k in range(3):
            assert float(dist(W[i], W[k])) == pytest.approx(float(dist(Z[i], Z[k])), rel=1e-9, abs=1e-12)


def test_energy_examples(base):
    u = synthesize(BubbleFamily.on_axis(P, [0.0]))
    rep = energy_level_report(u)
    assert rep["level_ratio"] == pytest.approx(1.0, abs=1e-4)
    zero = AxisymField(u.grid, np.zeros_like(u.values), P)
    assert energy_functional(zero) == 0.0
    far = energy_level_report(BubbleFamily.on_axis(P, [0.0, 12.0]))
    assert far["level_ratio"] == pytest.approx(2.0, rel=1e-2)
    assert far["nearest_count"] == 2


def test_energy_critical_indicator():
    Pc = validate_params(4, 3, 2.1)
    rep = energy_level_report(BubbleFamily.on_axis(Pc, [0.0]))
    assert 0 < rep["sobolev_ratio_power"] <= 1
    assert "rationality" in rep["note"]


def test_perturbation_catalog_rejects_unknown(pair7, base):
    with pytest.raises(ValueError):
        perturbation_field(pair7.grid, base, pair7.info["shifted"], {"kind": "wiggle"})
