"""Solve for a radial bubble and look at what it is made of.

Run: python demos/ground_state_tour.py
"""
import numpy as np

from hyperbubble import ground_state
from hyperbubble.ground_state import euclidean_closed_form, lambda_sweep

prof = ground_state(3, 3.0, 0.5)
P = prof.params
print(f"(n, p, lambda) = ({P.n}, {P.p}, {P.lam}); decay rate c = {P.c:.6f}")
print(f"amplitude U(0) = {prof.amplitude:.10f}")
print(f"S_lambda,p     = {prof.sobolev:.10f}")
print(f"energy         = {prof.energy:.10f}")

# the tail is a pure exponential: -U'/U settles on c and U e^{c rho} on a constant
for r in (2.0, 5.0, 8.0, 11.0):
    print(f"  rho={r:5.1f}  U={float(prof(r)):.3e}  -U'/U={float(-prof.deriv(r) / prof(r)):.6f}"
          f"  U e^(c rho)={float(prof(r) * np.exp(P.c * r)):.6f}")

# critical exponent: S_lambda sits below the Euclidean constant and climbs toward it as lambda -> n(n-2)/4
sw = lambda_sweep(4, 3.0, [2.1, 2.15, 2.2])
S = euclidean_closed_form(4)
print(f"\nEuclidean S(4) = {S:.10f}")
for row in sw["rows"]:
    print(f"  lambda={row['lambda']:.3f}  S_lambda={row['S_lambda']:.10f}  (S_lambda/S)^(n/2)={row['ratio']:.12f}")
