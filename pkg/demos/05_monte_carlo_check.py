"""
Trajectory check of the solver
==============================

Euler-Maruyama paths with alpha-stable increments give an independent
estimate of the mean exit time.  Each estimate takes some seconds.
"""
import numpy as np

from metid import Domain, NoiseParams, SimConfig, build_grid, estimate_met, solve_met

D = Domain(-1.0, 1.0)
grid = build_grid(D, 120)
drift = lambda x: x - 5 * x**3
noise = NoiseParams(0.5, 1.0, 0.6)

field = solve_met(grid, drift, noise)
for x0 in (-0.5, 0.0, 0.5):
    u = np.interp(x0, grid.nodes, field.extended())
    est = estimate_met(drift, noise, x0, D, SimConfig(dt=1e-4, n_paths=10_000, seed=1))
    print(f"x0={x0:+.1f}  solver {u:.4f}  paths {est.mean:.4f} +- {est.stderr:.4f}")
