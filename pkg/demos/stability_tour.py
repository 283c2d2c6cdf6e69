"""Perturb a pair of bubbles, project back onto the bubble manifold and compare
the distance with the deficit.  Takes about a minute.

Run: python demos/stability_tour.py
"""
from hyperbubble import BubbleFamily
from hyperbubble.geometry import validate_params
from hyperbubble.stability import interaction_vs_deficit, project_to_manifold, stability_ratio_experiment, synthesize

P = validate_params(3, 3, 0.5)

u = synthesize(BubbleFamily.on_axis(P, [0.0, 7.0]), {"kind": "bump"}, 0.05)
rep = project_to_manifold(u)
print("projection of U[0] + U[7] + 0.05 * bump:")
print(f"  centers {rep.family.positions}, coefficients {rep.family.alphas}")
print(f"  distance {rep.distance:.5e}  deficit {rep.deficit:.5e}  floor {rep.noise_floor:.1e}")

for kind in ("bump", "random", "v1"):
    res = stability_ratio_experiment(P, 7.0, [1e-3, 1e-2, 1e-1], kind=kind, seed=1)
    ratios = "  ".join(f"{r['ratio']:.4f}" for r in res["rows"])
    print(f"{kind:>6}: distance/deficit = {ratios}   spread {res['summary']['spread']:.3f}")

tab = interaction_vs_deficit(P, [5.0, 6.0, 7.0, 8.0])
print("\nexact pair: interaction vs deficit")
for r in tab["rows"]:
    print(f"  s={r['s']}  int U1^p U2={r['interaction']:.4e}  deficit={r['deficit']:.4e}  ratio={r['ratio']:.4f}")
