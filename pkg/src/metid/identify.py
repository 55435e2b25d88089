"""Grid-search identification of drift, diffusion and stability index.

For each candidate ``(sigma, alpha)`` the drift implied by the fitted exit
time is smoothed into a sparse polynomial, the forward problem is re-solved
with it and the result is scored against the observations with

    G(sigma, alpha) = ||U_L - U_ob||^2 / ||U_ob||^2.

The minimizing candidate, with its re-smoothed drift, is the learned model.
"""
from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ConfigurationError, IdentificationError, InsufficientDataError, MetidError
from .forward import NoiseParams, solve_met
from .inverse import DEFAULT_THETA, drift_field
from .sparse import PolyExpansion, build_dictionary, stls, to_monomial

__all__ = [
    "SearchConfig",
    "ErrorSurface",
    "LearnedSDE",
    "smooth_drift",
    "observations_on_grid",
    "objective",
    "evaluate_candidate",
    "grid_search",
]

log = logging.getLogger(__name__)


def _axis(rng, name):
    lo, hi, step = (float(v) for v in rng)
    if not step > 0:
        raise ConfigurationError(f"{name} step must be positive, got {step}")
    if hi < lo:
        raise ConfigurationError(f"{name} range is empty: ({lo}, {hi})")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    # round to the step's decimal precision so that e.g. 0.5 is hit exactly
    digits = max(0, -int(math.floor(math.log10(step))) + 6)
    return np.round(lo + step * np.arange(count), digits)


@dataclass(frozen=True)
class SearchConfig:
    """Candidate grid and drift-smoothing settings.

    Ranges are ``(low, high, step)`` with both ends inclusive.  ``drift_order``
    is the highest drift power, so the drift dictionary has
    ``drift_order + 1`` atoms.
    """

    sigma_range: tuple = (0.01, 2.0, 0.01)
    alpha_range: tuple = (0.05, 1.95, 0.05)
    drift_order: int = 6
    drift_lambda: float = 0.01
    theta: float = DEFAULT_THETA
    trim: Optional[float] = None

    def __post_init__(self):
        if self.sigma_range[0] < 0:
            raise ConfigurationError("sigma range must start at >= 0")
        a_lo, a_hi = self.alpha_range[0], self.alpha_range[1]
        if not (0 < a_lo <= a_hi < 2):
            raise ConfigurationError("alpha range must lie inside (0, 2)")
        if int(self.drift_order) != self.drift_order or self.drift_order < 0:
            raise ConfigurationError(f"drift_order must be a non-negative integer, got {self.drift_order!r}")
        if not self.drift_lambda > 0:
            raise ConfigurationError("drift_lambda must be positive")
        _axis(self.sigma_range, "sigma")
        _axis(self.alpha_range, "alpha")

    @property
    def sigmas(self):
        return _axis(self.sigma_range, "sigma")

    @property
    def alphas(self):
        return _axis(self.alpha_range, "alpha")

    def candidates(self, epsilon):
        """Candidates in search order: sigma outer, alpha inner."""
        if epsilon > 0:
            return [(float(s), float(a)) for s in self.sigmas for a in self.alphas]
        return [(float(s), None) for s in self.sigmas]


@dataclass
class ErrorSurface:
    """Objective values in grid order; failed candidates hold ``nan``."""

    sigma: np.ndarray
    alpha: np.ndarray
    G: np.ndarray
    failures: dict = field(default_factory=dict)

    @property
    def minimizer(self):
        """Index of the smallest finite ``G`` (first in grid order on ties)."""
        finite = np.isfinite(self.G)
        if not finite.any():
            return None
        return int(np.flatnonzero(finite)[np.argmin(self.G[finite])])

    def to_csv(self, path, comments=()):
        from .pipeline import write_rows_csv

        rows = []
        for i, (s, a, g) in enumerate(zip(self.sigma, self.alpha, self.G)):
            rows.append((float(s), "" if np.isnan(a) else float(a), float(g)))
        write_rows_csv(path, ("sigma", "alpha", "G"), rows, comments=comments)


@dataclass
class LearnedSDE:
    """Identified model: sparse drift polynomial plus noise parameters."""

    drift: PolyExpansion
    sigma: float
    alpha: Optional[float]
    objective: float
    epsilon: float

    @property
    def noise(self):
        return NoiseParams(self.sigma, self.epsilon, self.alpha)

    def to_dict(self, config=None):
        out = {
            "epsilon": self.epsilon,
            "sigma_L": self.sigma,
        }
        if self.alpha is not None:
            out["alpha_L"] = self.alpha
        out["drift"] = [{"power": j, "coefficient": c} for j, c in self.drift.nonzero_terms()]
        out["objective"] = self.objective
        out["config"] = dict(config or {})
        return out


def smooth_drift(samples, order, lam=0.01):
    """Sparse monomial fit of recovered drift samples (highest power ``order``)."""
    K = int(order) + 1
    if len(samples) < K + 2:
        raise InsufficientDataError(f"{len(samples)} drift samples for {K} atoms; need at least {K + 2}")
    dictionary = build_dictionary(samples.domain, K, "monomial")
    coeffs = stls(dictionary.design(samples.x), samples.f, lam)
    return to_monomial(coeffs, dictionary)


def observations_on_grid(obs, grid):
    """Observed exit times at the interior nodes of ``grid``.

    Observations already sitting on the nodes are used as is.  Otherwise they
    are resampled by monotone cubic interpolation, with zero boundary values,
    and a warning is emitted.
    """
    x = grid.interior
    if len(obs) == len(x) and np.allclose(obs.x, x, rtol=0, atol=1e-9 * grid.domain.length):
        return np.asarray(obs.u)
    warnings.warn(
        "observation locations are not grid nodes; resampling by monotone cubic interpolation",
        stacklevel=2,
    )
    d = grid.domain
    xs = np.concatenate(([d.a], obs.x, [d.b]))
    us = np.concatenate(([0.0], obs.u, [0.0]))
    return PchipInterpolator(xs, us)(x)


def _relative_misfit(u_learned, u_obs):
    denom = float(np.dot(u_obs, u_obs))
    if denom == 0.0:
        raise ConfigurationError("observations are identically zero")
    diff = u_learned - u_obs
    return float(np.dot(diff, diff)) / denom


def objective(obs, drift, noise, grid):
    """Squared relative l2 misfit between the forward solution and ``obs``."""
    u_obs = obs if isinstance(obs, np.ndarray) else observations_on_grid(obs, grid)
    return _relative_misfit(solve_met(grid, drift, noise).values, u_obs)


def evaluate_candidate(u_f, u_obs, grid, config, noise):
    """Smoothed drift and objective value for one noise candidate."""
    samples = drift_field(
        u_f, noise, grid, theta=config.theta, trim=config.trim, min_samples=config.drift_order + 3
    )
    drift = smooth_drift(samples, config.drift_order, config.drift_lambda)
    g = objective(u_obs, drift, noise, grid)
    if not math.isfinite(g):
        raise IdentificationError("objective is not finite")
    return drift, g


def grid_search(obs, config, epsilon, *, u_f, grid, workers=1):
    """Exhaustive search of ``G`` over the candidate grid.

    Parameters
    ----------
    obs : Observations
    config : SearchConfig
    epsilon : float
        Jump coefficient; with ``epsilon = 0`` only ``sigma`` is searched.
    u_f : PolyExpansion
        Exit time curve fitted once from ``obs``.
    grid : Grid
        Mesh of the forward solves.
    workers : int
        Threads used to evaluate candidates; the result does not depend on it.

    Returns
    -------
    (LearnedSDE, ErrorSurface)
    """
    epsilon = float(epsilon)
    u_obs = observations_on_grid(obs, grid)
    cands = config.candidates(epsilon)

    def run(cand):
        sigma, alpha = cand
        try:
            noise = NoiseParams(sigma, epsilon, alpha)
            with np.errstate(all="ignore"):
                _, g = evaluate_candidate(u_f, u_obs, grid, config, noise)
            return g, None
        except (MetidError, np.linalg.LinAlgError, FloatingPointError) as exc:
            return math.nan, f"{type(exc).__name__}: {exc}"

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, cands))
    else:
        results = [run(c) for c in cands]

    G = np.array([r[0] for r in results])
    failures = {i: r[1] for i, r in enumerate(results) if r[1] is not None}
    surface = ErrorSurface(
        sigma=np.array([c[0] for c in cands]),
        alpha=np.array([math.nan if c[1] is None else c[1] for c in cands]),
        G=G,
        failures=failures,
    )
    best = surface.minimizer
    if best is None:
        raise IdentificationError("every candidate failed", reasons=failures)
    if failures:
        log.info("%d of %d candidates failed", len(failures), len(cands))
    sigma_l, alpha_l = cands[best]
    noise = NoiseParams(sigma_l, epsilon, alpha_l)
    with np.errstate(all="ignore"):
        drift, g = evaluate_candidate(u_f, u_obs, grid, config, noise)
    model = LearnedSDE(drift=drift, sigma=sigma_l, alpha=alpha_l, objective=g, epsilon=epsilon)
    return model, surface
