"""Identify scalar SDEs from mean exit time data.

The workflow is: fit the observed exit time curve with boundary-vanishing
polynomials (:func:`fit_met`), recover the drift in closed form for every
trial ``(sigma, alpha)`` and score the trial by re-solving the nonlocal exit
time equation (:func:`grid_search`).
"""
from .errors import (
    ConditioningError,
    ConfigurationError,
    ConvergenceError,
    DegenerateFitError,
    DomainError,
    IdentificationError,
    IndeterminateError,
    InsufficientDataError,
    MetidError,
    NumericalError,
    ParseError,
    StabilityError,
)
from .forward import Domain, Grid, METField, NoiseParams, build_grid, generator_apply, generator_matrix, solve_met
from .identify import ErrorSurface, LearnedSDE, SearchConfig, grid_search, objective, smooth_drift
from .inverse import DriftSamples, drift_field, drift_pointwise, m1, m2
from .montecarlo import ExitEstimate, SimConfig, estimate_met, sample_alpha_stable, simulate_exit_time
from .sparse import (
    Dictionary,
    Observations,
    PolyExpansion,
    SparseCoefficients,
    build_dictionary,
    eval_poly,
    fit_met,
    least_squares,
    stls,
    to_monomial,
)
from .specialfn import c_alpha, gamma, zeta

__version__ = "0.1.0"
