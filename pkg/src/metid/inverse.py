"""Closed-form drift recovery from a fitted exit time polynomial.

Given ``u_f`` and trial noise parameters, the exit time equation is solved
for the drift pointwise:

    f = { -(sigma/2) u_f'' + (eps C_a / a) T u_f - eps C_a (M1 + M2) - 1 } / u_f'

with ``T(x) = (x - a)^(-a) + (b - x)^(-a)`` and the two nonlocal integrals

    M1 = int_{a-x}^{x-a} (u_f(x+y) - u_f(x)) / |y|^(1+a) dy
    M2 = int_{x-a}^{b-x} (u_f(x+y) - u_f(x)) / |y|^(1+a) dy.

Writing ``u_f(x+y) - u_f(x) = sum_k u_f^(k)(x) y^k / k!`` both integrals are
finite sums of power functions.  Where ``|u_f'| < theta`` the quotient is
replaced by the ratio of derivatives (L'Hopital), with the brace
differentiated analytically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError, IndeterminateError, InsufficientDataError
from .specialfn import check_alpha

__all__ = [
    "DEFAULT_THETA",
    "DriftSamples",
    "m1",
    "m2",
    "drift_pointwise",
    "drift_field",
    "default_trim",
]

DEFAULT_THETA = 1e-4

QUOTIENT = "quotient"
LHOPITAL = "lhopital"
INDETERMINATE = "indeterminate"


def _interior_x(p, x):
    x = np.asarray(x, dtype=float)
    a, b = p.domain.a, p.domain.b
    if np.any((x <= a) | (x >= b)):
        raise DomainError(f"nonlocal integrals need a < x < b on ({a}, {b})")
    return x


def _taylor(p, x, upto):
    # u^(k)(x) / k! for k = 0..upto (zero above the degree)
    coef = p.coefficients
    out = []
    deriv = coef
    for k in range(upto + 1):
        if k > 0:
            deriv = np.polynomial.polynomial.polyder(deriv) if len(deriv) > 1 else np.zeros(1)
        out.append(np.polynomial.polynomial.polyval(x, deriv) / math.factorial(k))
    return out


def _power_integral(lo, hi, s):
    """``int_lo^hi y^(s-1) dy`` for ``0 < lo, hi``, continuous through ``s = 0``."""
    if s == 0.0:
        return np.log(hi / lo)
    if abs(s) < 1e-3:
        return (np.expm1(s * np.log(hi)) - np.expm1(s * np.log(lo))) / s
    return (hi**s - lo**s) / s


def _nonlocal(p, alpha, x, with_derivative=False):
    x = _interior_x(p, x)
    a, b = p.domain.a, p.domain.b
    n = p.degree
    left, right = x - a, b - x
    tay = _taylor(p, x, n + 1)
    M1 = np.zeros_like(x)
    M2 = np.zeros_like(x)
    dM1 = np.zeros_like(x)
    dM2 = np.zeros_like(x)
    for k in range(1, n + 1):
        uk, duk = tay[k], (k + 1) * tay[k + 1]  # d/dx [u^(k)/k!] = (k+1) u^(k+1)/(k+1)!
        s = k - alpha
        if k % 2 == 0:
            M1 += 2.0 * uk * left**s / s
            if with_derivative:
                dM1 += 2.0 * (duk * left**s / s + uk * left ** (s - 1.0))
        pk = _power_integral(left, right, s)
        M2 += uk * pk
        if with_derivative:
            dM2 += duk * pk - uk * (right ** (s - 1.0) + left ** (s - 1.0))
    if with_derivative:
        return M1, M2, dM1, dM2
    return M1, M2


def m1(p, alpha, x):
    """Principal-value integral of the increment over ``(a - x, x - a)``.

    Only even Taylor orders contribute: ``2 sum_k u^(k)(x)/k! (x-a)^(k-a)/(k-a)``.
    """
    alpha = check_alpha(alpha)
    out = _nonlocal(p, alpha, x)[0]
    return float(out) if np.ndim(x) == 0 else out


def m2(p, alpha, x):
    """Integral of the increment over ``(x - a, b - x)``.

    At ``alpha = 1`` the first-order term becomes ``u'(x) ln((b-x)/(x-a))``.
    """
    alpha = check_alpha(alpha)
    out = _nonlocal(p, alpha, x)[1]
    return float(out) if np.ndim(x) == 0 else out


def _brace(p, noise, x, with_derivative):
    us = [p.derivative_coefficients(k) for k in range(4)]
    pv = np.polynomial.polynomial.polyval
    u0, u1, u2, u3 = (pv(x, c) for c in us)
    brace = -0.5 * noise.sigma * u2 - 1.0
    dbrace = -0.5 * noise.sigma * u3
    if noise.has_jumps:
        alpha = noise.alpha
        ec = noise.jump_constant()
        a, b = p.domain.a, p.domain.b
        left, right = x - a, b - x
        tail = left ** (-alpha) + right ** (-alpha)
        dtail = -alpha * left ** (-alpha - 1.0) + alpha * right ** (-alpha - 1.0)
        M1, M2, dM1, dM2 = _nonlocal(p, alpha, x, with_derivative=True)
        brace = brace + ec / alpha * tail * u0 - ec * (M1 + M2)
        dbrace = dbrace + ec / alpha * (dtail * u0 + tail * u1) - ec * (dM1 + dM2)
    return brace, dbrace, u1, u2


def _drift_branches(p, noise, x, theta):
    x = _interior_x(p, np.atleast_1d(np.asarray(x, dtype=float)))
    brace, dbrace, u1, u2 = _brace(p, noise, x, True)
    quotient = np.abs(u1) >= theta
    lhop = ~quotient & (np.abs(u2) >= theta)
    f = np.full(x.shape, np.nan)
    f[quotient] = brace[quotient] / u1[quotient]
    f[lhop] = dbrace[lhop] / u2[lhop]
    branch = np.where(quotient, QUOTIENT, np.where(lhop, LHOPITAL, INDETERMINATE))
    return f, branch


def drift_pointwise(p, noise, x, theta=DEFAULT_THETA):
    """Drift implied by the fitted exit time ``p`` at an interior point ``x``.

    Raises :class:`IndeterminateError` if both ``|u_f'|`` and ``|u_f''|`` are
    below ``theta``.
    """
    if not theta > 0:
        raise ConfigurationError(f"theta must be positive, got {theta!r}")
    f, branch = _drift_branches(p, noise, x, theta)
    if np.any(branch == INDETERMINATE):
        bad = np.atleast_1d(np.asarray(x, dtype=float))[branch == INDETERMINATE]
        raise IndeterminateError(f"u_f' and u_f'' both vanish at x = {bad.tolist()}")
    return float(f[0]) if np.ndim(x) == 0 else f


def default_trim(noise):
    """Boundary fraction dropped by :func:`drift_field`: 5% with jumps, else 0."""
    return 0.05 if noise.has_jumps else 0.0


@dataclass(frozen=True)
class DriftSamples:
    """Recovered drift at the retained interior nodes of a grid."""

    x: np.ndarray
    f: np.ndarray
    branch: np.ndarray
    noise: object
    domain: object
    theta: float
    trimmed: tuple
    skipped: tuple

    def __len__(self):
        return len(self.x)

    def to_csv(self, path, comments=()):
        from .pipeline import write_rows_csv

        rows = zip(self.x.tolist(), self.f.tolist(), self.branch.tolist())
        write_rows_csv(path, ("x", "f", "branch"), rows, comments=comments)


def drift_field(p, noise, grid, theta=DEFAULT_THETA, trim=None, min_samples=2):
    """Evaluate the recovered drift at the interior nodes of ``grid``.

    ``trim`` is the fraction of interior nodes dropped near the boundary, half
    on each side (``round(trim * (2J - 1) / 2)`` per side); by default
    :func:`default_trim`.  Indeterminate nodes are skipped.
    """
    if trim is None:
        trim = default_trim(noise)
    if not 0.0 <= trim <= 0.2:
        raise ConfigurationError(f"trim must lie in [0, 0.2], got {trim!r}")
    if not theta > 0:
        raise ConfigurationError(f"theta must be positive, got {theta!r}")
    x = grid.interior
    n = len(x)
    per_side = int(round(trim * n / 2.0))
    keep = np.ones(n, dtype=bool)
    if per_side:
        keep[:per_side] = False
        keep[-per_side:] = False
    trimmed = tuple(np.flatnonzero(~keep).tolist())
    f = np.full(n, np.nan)
    branch = np.full(n, INDETERMINATE, dtype=object)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        fk, bk = _drift_branches(p, noise, x[keep], theta)
    f[keep] = fk
    branch[keep] = bk
    finite = keep & np.isfinite(f)
    skipped = tuple(np.flatnonzero(keep & ~finite).tolist())
    if finite.sum() < min_samples:
        raise InsufficientDataError(
            f"only {int(finite.sum())} drift samples retained, need at least {min_samples}"
        )
    return DriftSamples(
        x=x[finite],
        f=f[finite],
        branch=branch[finite].astype(str),
        noise=noise,
        domain=grid.domain,
        theta=float(theta),
        trimmed=trimmed,
        skipped=skipped,
    )
