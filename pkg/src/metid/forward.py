"""Finite-difference solver for the mean exit time equation ``A u = -1``.

The generator combines drift, Gaussian diffusion and a symmetric
alpha-stable jump part.  On the uniform mesh ``x_j = a + (j + J) h`` the
scheme reads

    C_h (U_{j-1} - 2 U_j + U_{j+1}) / h^2 + f(x_j) (U_{j+1} - U_{j-1}) / (2 h)
        - (eps C_a / a) [(x_j - a)^(-a) + (b - x_j)^(-a)] U_j
        + eps C_a h sum''_{k != 0} (U_{j+k} - U_j) / |k h|^(1 + a) = -1

with ``C_h = sigma / 2 - eps C_a zeta(a - 1) h^(2 - a)``.  The sum runs over
every ``j + k`` in the closed range [-J, J] with the two end terms halved
(trapezoidal rule); ``U`` vanishes on and outside the boundary.
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .errors import ConfigurationError, DomainError, NumericalError, StabilityError
from .specialfn import ALPHA_MAX, c_alpha, check_alpha, zeta

__all__ = [
    "Domain",
    "Grid",
    "NoiseParams",
    "METField",
    "build_grid",
    "diffusion_coefficient",
    "generator_matrix",
    "generator_apply",
    "solve_met",
]

Drift = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Domain:
    """Open escape interval ``(a, b)``; functions vanish on its complement."""

    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
            raise ConfigurationError(f"domain needs finite a < b, got ({self.a!r}, {self.b!r})")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def length(self):
        return self.b - self.a

    def contains(self, x):
        """Elementwise test for membership of the open interval."""
        x = np.asarray(x, dtype=float)
        return (x > self.a) & (x < self.b)


@dataclass(frozen=True)
class Grid:
    """Uniform mesh with ``2J + 1`` nodes, ``2J - 1`` of them interior."""

    domain: Domain
    J: int

    def __post_init__(self):
        if int(self.J) != self.J or self.J < 2:
            raise ConfigurationError(f"grid half-count J must be an integer >= 2, got {self.J!r}")
        object.__setattr__(self, "J", int(self.J))

    @property
    def h(self):
        return self.domain.length / (2 * self.J)

    @property
    def nodes(self):
        """All ``2J + 1`` node coordinates, boundary included."""
        x = self.domain.a + np.arange(2 * self.J + 1) * self.h
        x[-1] = self.domain.b
        return x

    @property
    def interior(self):
        """The ``2J - 1`` interior node coordinates."""
        return self.nodes[1:-1]

    @property
    def n_interior(self):
        return 2 * self.J - 1


def build_grid(domain, J):
    """Mesh ``domain`` with spacing ``h = (b - a) / (2J)``."""
    if not isinstance(domain, Domain):
        domain = Domain(*domain)
    return Grid(domain, J)


@dataclass(frozen=True)
class NoiseParams:
    """Gaussian diffusion ``sigma`` and jump part ``eps * nu_alpha``.

    ``epsilon = 0`` is the pure Gaussian case, in which ``alpha`` is ignored.
    """

    sigma: float
    epsilon: float = 0.0
    alpha: Optional[float] = None

    def __post_init__(self):
        sigma, eps = float(self.sigma), float(self.epsilon)
        if not (math.isfinite(sigma) and sigma >= 0.0):
            raise DomainError(f"sigma must be finite and >= 0, got {self.sigma!r}")
        if not (math.isfinite(eps) and eps >= 0.0):
            raise DomainError(f"epsilon must be finite and >= 0, got {self.epsilon!r}")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "epsilon", eps)
        if eps > 0.0:
            if self.alpha is None:
                raise DomainError("alpha is required when epsilon > 0")
            object.__setattr__(self, "alpha", check_alpha(self.alpha, cap=ALPHA_MAX))
        elif self.alpha is not None:
            object.__setattr__(self, "alpha", check_alpha(self.alpha, cap=ALPHA_MAX))

    @property
    def has_jumps(self):
        return self.epsilon > 0.0

    def jump_constant(self):
        """``eps * C_alpha``, zero in the Gaussian case."""
        return self.epsilon * c_alpha(self.alpha) if self.has_jumps else 0.0


@dataclass(frozen=True)
class METField:
    """Mean exit time values at the interior nodes of ``grid``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_interior,):
            raise ConfigurationError(
                f"expected {self.grid.n_interior} interior values, got shape {values.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def x(self):
        return self.grid.interior

    def extended(self):
        """Values on all ``2J + 1`` nodes, zeros on the boundary."""
        return np.concatenate(([0.0], self.values, [0.0]))

    def to_csv(self, path, comments=()):
        """Write columns ``x,u`` with round-trip float formatting."""
        from .pipeline import write_xy_csv

        write_xy_csv(path, ("x", "u"), (self.x, self.values), comments=comments)


def diffusion_coefficient(grid, noise):
    """``C_h``, the second-difference weight including the singular correction."""
    ch = 0.5 * noise.sigma
    if noise.has_jumps:
        alpha = noise.alpha
        ch -= noise.jump_constant() * zeta(alpha - 1.0) * grid.h ** (2.0 - alpha)
    return ch


@functools.lru_cache(maxsize=256)
def _jump_matrix(a, b, J, alpha):
    # Unit-weight nonlocal part: quadrature sum plus the exterior tail term.
    grid = Grid(Domain(a, b), J)
    h = grid.h
    n = grid.n_interior
    rows = np.arange(-J + 1, J)
    cols = np.arange(-J, J + 1)
    k = np.abs(cols[None, :] - rows[:, None]).astype(float)
    with np.errstate(divide="ignore"):
        w = h ** (-alpha) * k ** (-1.0 - alpha)
    w[k == 0] = 0.0
    w[:, 0] *= 0.5
    w[:, -1] *= 0.5
    mat = w[:, 1:-1].copy()
    x = grid.interior
    tail = ((x - a) ** (-alpha) + (b - x) ** (-alpha)) / alpha
    mat[np.arange(n), np.arange(n)] = -w.sum(axis=1) - tail
    mat.setflags(write=False)
    return mat


def _drift_values(drift, x):
    if drift is None:
        return np.zeros_like(x)
    vals = np.broadcast_to(np.asarray(drift(x), dtype=float), x.shape)
    if not np.all(np.isfinite(vals)):
        raise NumericalError("drift is not finite at every interior node")
    return vals


def _tridiagonal_bands(grid, drift_vals, ch):
    h = grid.h
    diag = np.full(grid.n_interior, -2.0 * ch / h**2)
    upper = ch / h**2 + drift_vals / (2.0 * h)  # coefficient of U_{j+1} in row j
    lower = ch / h**2 - drift_vals / (2.0 * h)  # coefficient of U_{j-1} in row j
    return lower, diag, upper


def _check_ch(grid, noise):
    ch = diffusion_coefficient(grid, noise)
    if not ch > 0.0:
        raise StabilityError(
            f"C_h = {ch:.3e} <= 0 for sigma={noise.sigma}, epsilon={noise.epsilon}, "
            f"alpha={noise.alpha}, h={grid.h:.3e}; refine the grid (increase J) "
            "or use a positive diffusion"
        )
    return ch


def generator_matrix(grid, drift, noise):
    """Dense ``(2J-1) x (2J-1)`` matrix of the discrete generator.

    The discretized equation is ``generator_matrix(...) @ U = -1``.  With
    ``epsilon = 0`` only the three central diagonals are populated.
    """
    ch = diffusion_coefficient(grid, noise)
    x = grid.interior
    lower, diag, upper = _tridiagonal_bands(grid, _drift_values(drift, x), ch)
    n = grid.n_interior
    mat = np.zeros((n, n))
    idx = np.arange(n)
    mat[idx, idx] = diag
    mat[idx[:-1], idx[:-1] + 1] = upper[:-1]
    mat[idx[1:], idx[1:] - 1] = lower[1:]
    if noise.has_jumps:
        d = grid.domain
        mat += noise.jump_constant() * _jump_matrix(d.a, d.b, grid.J, noise.alpha)
    return mat


def generator_apply(grid, drift, noise, field):
    """Discrete generator applied to ``field`` at every interior node.

    ``field`` is a :class:`METField` or an array of interior values; exterior
    values are taken to be zero.
    """
    values = field.values if isinstance(field, METField) else np.asarray(field, dtype=float)
    return generator_matrix(grid, drift, noise) @ values


def solve_met(grid, drift, noise):
    """Solve the discrete exit time equation and return the interior field.

    Parameters
    ----------
    grid : Grid
    drift : callable or None
        Vectorized drift ``f(x)``; ``None`` means no drift.
    noise : NoiseParams

    Raises
    ------
    StabilityError
        If ``C_h <= 0`` (no diffusion at all, or an unstable jump correction).
    NumericalError
        If the system is singular or ill-conditioned.
    """
    ch = _check_ch(grid, noise)
    rhs = -np.ones(grid.n_interior)
    if not noise.has_jumps:
        lower, diag, upper = _tridiagonal_bands(grid, _drift_values(drift, grid.interior), ch)
        ab = np.zeros((3, grid.n_interior))
        ab[0, 1:] = upper[:-1]
        ab[1] = diag
        ab[2, :-1] = lower[1:]
        try:
            values = scipy.linalg.solve_banded((1, 1), ab, rhs, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"singular tridiagonal system: {exc}") from exc
    else:
        mat = generator_matrix(grid, drift, noise)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
                values = scipy.linalg.solve(mat, rhs, check_finite=False)
        except scipy.linalg.LinAlgWarning as exc:
            raise NumericalError(f"ill-conditioned generator matrix: {exc}") from exc
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"singular generator matrix: {exc}") from exc
    if not np.all(np.isfinite(values)):
        raise NumericalError("forward solve produced non-finite values")
    return METField(grid, values)
