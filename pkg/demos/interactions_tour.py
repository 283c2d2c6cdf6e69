"""Interaction integrals between two and three bubbles, and their exponential rates.

Run: python demos/interactions_tour.py
"""
import numpy as np

from hyperbubble import ground_state
from hyperbubble.interactions import deriv_interaction, fit_exponent, three_bubble, two_bubble

prof = ground_state(3, 3.0, 0.5)
c, p = prof.params.c, prof.params.p

print("int U[0]^p U[s] dv against e^{-c s}:")
for s in np.linspace(4, 9, 6):
    r = two_bubble(prof, p, 1.0, s)
    print(f"  s={s:4.1f}  value={r.value:.4e}  value*e^(c s)={r.compensated:.5f}")
fit = fit_exponent(prof, p, 1.0, np.linspace(4, 9, 6))
print(f"fitted slope {fit.slope:.5f}, predicted {fit.target:.5f}, r^2={fit.r_squared:.6f}")

print("\nequal exponents pick up a linear factor in s:")
for s in np.linspace(5, 10, 6):
    r = two_bubble(prof, 2.0, 2.0, s)
    print(f"  s={s:4.1f}  value/(s e^(-2 c s))={r.compensated:.5f}")

print("\nthree collinear bubbles 0, s12, s13:")
for s12, s13 in ((5, 10), (6, 12), (7, 14)):
    r = three_bubble(prof, s12, s13)
    print(f"  ({s12},{s13})  value={r.value:.4e}  Q={r.q:.3e}  value/Q^3={r.value / r.q ** 3:.4f}"
          f"  value/(Q^1.5 ln(1/Q)^(1/3))={r.compensated:.3e}")

print("\nderivative interaction: negative along the axis, zero across it:")
for s in (4.0, 6.0, 8.0):
    a = deriv_interaction(prof, s)
    b = deriv_interaction(prof, s, direction_along_axis=False)
    print(f"  s={s}  along axis {a.value:+.4e}   perpendicular {b.value:+.1e}")
