"""Polynomial dictionaries and sequential thresholded least squares.

Two dictionaries are used.  The exit time curve is expanded in atoms that
vanish on the boundary, ``phi_k(x) = (x - a)(b - x) t^(k-1)``, and the
recovered drift in plain monomials ``psi_k(x) = t^(k-1)``.  Here ``t`` is
``x`` mapped affinely onto [-1, 1]; on the domain (-1, 1) it is ``x`` itself.
Fits are always reported back as monomials in ``x`` (:class:`PolyExpansion`).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.linalg
from numpy.polynomial import polynomial as P

from .errors import (
    ConditioningError,
    ConfigurationError,
    ConvergenceError,
    DegenerateFitError,
)
from .forward import Domain

__all__ = [
    "Dictionary",
    "SparseCoefficients",
    "PolyExpansion",
    "Observations",
    "build_dictionary",
    "least_squares",
    "stls",
    "to_monomial",
    "eval_poly",
    "fit_met",
]

Kind = Literal["boundary", "monomial"]


@dataclass(frozen=True)
class PolyExpansion:
    """Polynomial ``sum_j r_j x^j`` that is zero outside ``[a, b]``."""

    coefficients: np.ndarray
    domain: Domain

    def __post_init__(self):
        coef = np.atleast_1d(np.asarray(self.coefficients, dtype=float)).copy()
        if coef.ndim != 1 or coef.size == 0:
            raise ConfigurationError("polynomial coefficients must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(coef)):
            raise ConfigurationError("polynomial coefficients must be finite")
        coef.setflags(write=False)
        object.__setattr__(self, "coefficients", coef)

    @property
    def degree(self):
        return len(self.coefficients) - 1

    def __call__(self, x):
        return eval_poly(self, x)

    def derivative_coefficients(self, order):
        return P.polyder(self.coefficients, order) if order else self.coefficients

    def derivative(self, x, order=1):
        return eval_poly(self, x, order)

    def nonzero_terms(self):
        """``(power, coefficient)`` pairs with a nonzero coefficient."""
        return [(j, float(c)) for j, c in enumerate(self.coefficients) if c != 0.0]

    @classmethod
    def zero(cls, domain):
        return cls(np.zeros(1), domain)


def eval_poly(p, x, order=0):
    """Evaluate the ``order``-th derivative of ``p`` by Horner's rule.

    Points outside ``[a, b]`` evaluate to 0, because the represented function
    vanishes on the complement of the domain.  At order 0 the endpoints
    themselves also give exactly 0, so rounding in the expanded coefficients
    cannot leak a spurious boundary value.
    """
    if order not in (0, 1, 2, 3):
        raise ConfigurationError(f"derivative order must be 0..3, got {order!r}")
    x_arr = np.asarray(x, dtype=float)
    coef = p.derivative_coefficients(order)
    vals = np.zeros(x_arr.shape)
    for c in coef[::-1]:
        vals = vals * x_arr + c
    if order == 0:
        inside = (x_arr > p.domain.a) & (x_arr < p.domain.b)
    else:
        inside = (x_arr >= p.domain.a) & (x_arr <= p.domain.b)
    vals = np.where(inside, vals, 0.0)
    return float(vals) if np.ndim(x) == 0 else vals


@dataclass(frozen=True)
class Dictionary:
    """``K`` polynomial atoms on ``domain``.

    ``kind="boundary"`` gives the boundary-vanishing atoms used for the exit
    time, ``kind="monomial"`` the plain powers used for the drift.
    """

    kind: Kind
    domain: Domain
    K: int

    def __post_init__(self):
        if self.kind not in ("boundary", "monomial"):
            raise ConfigurationError(f"unknown dictionary kind {self.kind!r}")
        if int(self.K) != self.K or self.K < 1:
            raise ConfigurationError(f"dictionary size K must be a positive integer, got {self.K!r}")
        object.__setattr__(self, "K", int(self.K))

    def _mapped(self, x):
        a, b = self.domain.a, self.domain.b
        return (2.0 * np.asarray(x, dtype=float) - (a + b)) / (b - a)

    def design(self, x):
        """Matrix of atom values, shape ``(len(x), K)``."""
        x = np.asarray(x, dtype=float)
        t = self._mapped(x)
        mat = t[:, None] ** np.arange(self.K)
        if self.kind == "boundary":
            mat *= ((x - self.domain.a) * (self.domain.b - x))[:, None]
        return mat

    @property
    def atom_polynomials(self):
        """Monomial coefficient arrays (in ``x``) of every atom."""
        a, b = self.domain.a, self.domain.b
        t = np.array([-(a + b) / (b - a), 2.0 / (b - a)])
        weight = np.array([-a * b, a + b, -1.0]) if self.kind == "boundary" else np.array([1.0])
        polys = []
        power = np.array([1.0])
        for _ in range(self.K):
            polys.append(P.polymul(weight, power))
            power = P.polymul(power, t)
        return polys

    def atom(self, k, x, order=0):
        """Value of the ``order``-th derivative of atom ``k`` (1-based) at ``x``."""
        if not 1 <= k <= self.K:
            raise ConfigurationError(f"atom index {k} outside 1..{self.K}")
        coef = self.atom_polynomials[k - 1]
        return P.polyval(x, P.polyder(coef, order) if order else coef)


def build_dictionary(domain, K, kind="boundary"):
    """Construct a :class:`Dictionary` of ``K`` atoms."""
    if not isinstance(domain, Domain):
        domain = Domain(*domain)
    return Dictionary(kind, domain, K)


@dataclass(frozen=True)
class SparseCoefficients:
    """Output of :func:`stls`: coefficients, threshold and surviving support."""

    values: np.ndarray
    lam: float
    support: tuple
    iterations: int = 0
    residual_norm: float = float("nan")

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "support", tuple(int(i) for i in self.support))


def least_squares(design, targets, rtol=None):
    """Minimize ``||design @ c - targets||_2`` by column-pivoted QR.

    Raises :class:`ConditioningError` when the numerical rank is below the
    number of columns; the error lists the atoms (0-based columns) that the
    pivoting pushed past the rank.
    """
    A = np.asarray(design, dtype=float)
    y = np.asarray(targets, dtype=float)
    if A.ndim != 2 or y.shape != (A.shape[0],):
        raise ConfigurationError(f"incompatible design {A.shape} and targets {y.shape}")
    m, n = A.shape
    if n == 0:
        return np.zeros(0)
    if m < n:
        raise ConditioningError(f"underdetermined system: {m} rows for {n} atoms", atoms=range(m, n))
    q, r, piv = scipy.linalg.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if rtol is None:
        rtol = max(m, n) * np.finfo(float).eps
    if diag[0] == 0.0:
        raise ConditioningError("design matrix is identically zero", atoms=range(n))
    rank = int(np.sum(diag > rtol * diag[0]))
    if rank < n:
        bad = sorted(int(i) for i in piv[rank:])
        raise ConditioningError(f"rank deficient design (rank {rank} < {n}); offending atoms {bad}", atoms=bad)
    z = scipy.linalg.solve_triangular(r, q.T @ y)
    c = np.empty(n)
    c[piv] = z
    return c


def stls(design, targets, lam, max_iter=50):
    """Sequential thresholded least squares.

    Coefficients smaller than ``lam`` in magnitude are zeroed and the rest are
    refit until the support no longer changes.  The result is a fixed point:
    refitting on its support reproduces it and every survivor has magnitude at
    least ``lam``.

    An empty support is accepted only when ``max|targets| < lam``; otherwise a
    :class:`DegenerateFitError` is raised.
    """
    if not lam > 0:
        raise ConfigurationError(f"threshold lambda must be positive, got {lam!r}")
    A = np.asarray(design, dtype=float)
    y = np.asarray(targets, dtype=float)
    n = A.shape[1]
    support = np.ones(n, dtype=bool)
    coef = np.zeros(n)
    for it in range(1, max_iter + 1):
        coef = np.zeros(n)
        if support.any():
            coef[support] = least_squares(A[:, support], y)
        keep = np.abs(coef) >= lam
        if np.array_equal(keep, support):
            break
        support = keep
    else:
        raise ConvergenceError(f"thresholding did not settle within {max_iter} iterations")
    if not support.any() and y.size and np.max(np.abs(y)) >= lam:
        raise DegenerateFitError(
            f"every coefficient fell below lambda={lam} although max|target|={np.max(np.abs(y)):.3e}"
        )
    res = float(np.linalg.norm(A @ coef - y))
    return SparseCoefficients(coef, float(lam), np.flatnonzero(support), it, res)


def to_monomial(coeffs, dictionary):
    """Expand a dictionary fit into monomials ``sum_j r_j x^j``."""
    values = coeffs.values if isinstance(coeffs, SparseCoefficients) else np.asarray(coeffs, dtype=float)
    if len(values) != dictionary.K:
        raise ConfigurationError(f"{len(values)} coefficients for a {dictionary.K}-atom dictionary")
    r = np.zeros(1)
    for c, poly in zip(values, dictionary.atom_polynomials):
        if c != 0.0:
            r = P.polyadd(r, c * poly)
    return PolyExpansion(P.polytrim(r, 0.0) if np.any(r) else np.zeros(1), dictionary.domain)


@dataclass(frozen=True)
class Observations:
    """Mean exit time samples ``(x_i, u_i)`` strictly inside ``domain``.

    Points are sorted on construction; duplicates, boundary points and
    negative or non-finite values are rejected.
    """

    x: np.ndarray
    u: np.ndarray
    domain: Domain

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel().copy()
        u = np.asarray(self.u, dtype=float).ravel().copy()
        if x.shape != u.shape:
            raise ConfigurationError(f"x and u lengths differ ({x.size} vs {u.size})")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(u))):
            raise ConfigurationError("observations must be finite")
        if np.any(u < 0):
            raise ConfigurationError("mean exit times must be non-negative")
        if not np.all(self.domain.contains(x)):
            raise ConfigurationError(f"observation locations must lie strictly inside {self.domain}")
        order = np.argsort(x, kind="stable")
        x, u = x[order], u[order]
        if np.any(np.diff(x) == 0):
            raise ConfigurationError("duplicate observation locations")
        x.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "u", u)

    def __len__(self):
        return len(self.x)


@dataclass(frozen=True)
class METFit:
    """Sparse fit of an exit time curve: dictionary, coefficients and ``u_f``."""

    dictionary: Dictionary
    coefficients: SparseCoefficients
    polynomial: PolyExpansion = field(repr=False)


def fit_met(obs, K=16, lam=0.01, max_iter=50):
    """Fit observed exit times with ``K`` boundary-vanishing atoms.

    Returns a :class:`METFit` whose ``polynomial`` is the curve ``u_f``.
    """
    dictionary = build_dictionary(obs.domain, K, "boundary")
    coeffs = stls(dictionary.design(obs.x), obs.u, lam, max_iter=max_iter)
    return METFit(dictionary, coeffs, to_monomial(coeffs, dictionary))
