"""Eigenvalues of the linearized operator, mode by mode, and the constrained gap.

Run: python demos/spectrum_tour.py
"""
from hyperbubble import BubbleFamily, ground_state
from hyperbubble.operators import halfspace_rayleigh, mode_eigenvalues, spectral_gap_constrained

prof = ground_state(3, 3.0, 0.5)
p = prof.params.p
for l in range(4):
    ev = mode_eigenvalues(prof, l, 3)
    print(f"mode l={l}: " + "  ".join(f"{x:.6f}" for x in ev["eigenvalues"]))
print(f"(1 belongs to U itself, p = {p:g} to its translations)")

print(f"\nhalf-space Rayleigh quotient of V_1(U): {halfspace_rayleigh(prof)['quotient']:.8f}")

for positions in ([0.0], [0.0, 7.0]):
    fam = BubbleFamily.on_axis(prof.params, positions)
    con = spectral_gap_constrained(prof, fam)
    free = spectral_gap_constrained(prof, fam, constrained=False)
    print(f"centers {positions}: c_tilde = {con['c_tilde']:.6f} with orthogonality, {free['c_tilde']:.6f} without")
