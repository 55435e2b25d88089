"""
Tri-stable drift with Brownian noise
====================================

Manufacture exit times from f(x) = x - 4x^3 + 3.5x^5, sigma = 1, then
recover sigma and the drift from the exit times alone.
"""
import numpy as np

from metid import (
    Domain,
    NoiseParams,
    Observations,
    SearchConfig,
    build_grid,
    fit_met,
    grid_search,
    solve_met,
)

D = Domain(-1.0, 1.0)
grid = build_grid(D, 120)
true_drift = lambda x: x - 4 * x**3 + 3.5 * x**5

u_ob = solve_met(grid, true_drift, NoiseParams(1.0)).values
obs = Observations(grid.interior, u_ob, D)

# step 1: sparse polynomial fit of the exit time curve (16 atoms, lambda 0.01)
fit = fit_met(obs, K=16, lam=0.01)
print("nonzero atoms:", [k + 1 for k in fit.coefficients.support])
print("coefficients:", np.round(fit.coefficients.values[list(fit.coefficients.support)], 4))

# step 2: scan sigma; for each candidate the drift follows in closed form
cfg = SearchConfig(sigma_range=(0.01, 2.0, 0.01), drift_order=6)
model, surface = grid_search(obs, cfg, 0.0, u_f=fit.polynomial, grid=grid)

print("sigma_L =", model.sigma, " G =", model.objective)
for power, c in model.drift.nonzero_terms():
    print(f"  x^{power}: {c:+.4f}")

# the objective is sharply peaked at the truth
near = np.abs(surface.sigma - 1.0) <= 0.03
print(np.column_stack([surface.sigma[near], surface.G[near]]))
