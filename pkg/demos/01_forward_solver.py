"""
Mean exit times from the nonlocal generator
===========================================

Solve A u = -1 on (-1, 1) for a few noise settings and compare with
the closed forms that exist.
"""
import numpy as np
from math import gamma, pi, sqrt

from metid import Domain, NoiseParams, build_grid, solve_met

D = Domain(-1.0, 1.0)
grid = build_grid(D, 120)   # h = 1/120, 239 unknowns
x = grid.interior

# Brownian motion, no drift: u = (1 - x^2) / sigma
u = solve_met(grid, None, NoiseParams(1.0)).values
print("brownian max error", np.max(np.abs(u - (1 - x**2))))

# pure alpha-stable jumps: Getoor's formula for the symmetric interval
for alpha in (0.5, 1.0, 1.5):
    u = solve_met(grid, None, NoiseParams(0.0, 1.0, alpha)).values
    pref = sqrt(pi) / (2**alpha * gamma(1 + alpha / 2) * gamma((1 + alpha) / 2))
    exact = pref * (1 - x**2) ** (alpha / 2)
    inner = np.abs(x) <= 0.8
    print(f"alpha={alpha}: max rel error {np.max(np.abs(u - exact)[inner] / exact[inner]):.2e}")

# drift plus both noises (the bi-stable example)
field = solve_met(grid, lambda x: x - 5 * x**3, NoiseParams(0.5, 1.0, 0.6))
print("u(0) with drift x - 5x^3, sigma 0.5, alpha 0.6:", field.values[119])

# the field can be written out for plotting
# field.to_csv("met.csv")
