"""
Genetic regulatory drift
========================

The drift kf x^2 / (x^2 + Kd) - kd x + Rbas is not a polynomial.  The
identified model is a degree-6 sparse polynomial that follows it closely.
"""
import numpy as np

from metid import Domain, NoiseParams, Observations, SearchConfig, build_grid, fit_met, grid_search, solve_met

kf, Kd, kd, Rbas = 6.0, 10.0, 1.0, 0.4
true_drift = lambda x: kf * x**2 / (x**2 + Kd) - kd * x + Rbas

D = Domain(-1.0, 1.0)
grid = build_grid(D, 120)
obs = Observations(grid.interior, solve_met(grid, true_drift, NoiseParams(0.5)).values, D)

fit = fit_met(obs)
model, surface = grid_search(obs, SearchConfig(drift_order=6), 0.0, u_f=fit.polynomial, grid=grid)
print("sigma_L =", model.sigma)
print("learned drift:", " ".join(f"{c:+.4f} x^{j}" for j, c in model.drift.nonzero_terms()))

x = grid.interior
print("max |f_learned - f_true| =", np.max(np.abs(model.drift(x) - true_drift(x))))
