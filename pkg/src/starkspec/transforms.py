"""Liouville change of variables for the Stark equation (v(x) = -x).

With xi = (2/3) x^(3/2) and omega(xi) = x^(1/4) u(x), a solution of
-u'' - x u + q u = lam u becomes a solution of

    -omega'' + V(xi, lam) omega = omega,
    V(xi, lam) = -5/(36 xi^2) + (q(c xi^(2/3)) - lam) / (c xi^(2/3)),

with c = (3/2)^(2/3), so that x = c xi^(2/3). Primes on omega are d/dxi.
The xi^-2 term is negative: substituting u = x^(-1/4) omega(xi(x)) gives
u'' = x^(3/4) omega'' + (5/16) x^(-9/4) omega, and (5/16) x^-3 = 5/(36 xi^2).
"""

from __future__ import annotations

import numpy as np

from .potentials import PotentialSpec, evaluate

__all__ = [
    "C_LIOUVILLE",
    "LiouvilleMap",
    "xi_of_x",
    "x_of_xi",
    "effective_potential",
    "b_term",
    "push_solution",
    "pull_solution",
]

C_LIOUVILLE = 1.5 ** (2.0 / 3.0)


class SingularityError(ValueError):
    """The transformed equation is singular at xi = 0 (x = 0)."""


def _scalar_or_array(a):
    return float(a) if np.ndim(a) == 0 else a


def xi_of_x(x):
    """xi = (2/3) x^(3/2)."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise ValueError("xi_of_x needs x >= 0")
    return _scalar_or_array(2.0 / 3.0 * xa ** 1.5)


def x_of_xi(xi):
    """x = c xi^(2/3) = (3 xi / 2)^(2/3)."""
    xa = np.asarray(xi, dtype=float)
    if np.any(xa < 0):
        raise ValueError("x_of_xi needs xi >= 0")
    return _scalar_or_array(C_LIOUVILLE * np.cbrt(xa) ** 2)


class LiouvilleMap:
    """Namespace object bundling the map and its constant."""

    c = C_LIOUVILLE
    forward = staticmethod(xi_of_x)
    inverse = staticmethod(x_of_xi)


def _positive(xi):
    xa = np.asarray(xi, dtype=float)
    if np.any(xa <= 0):
        raise SingularityError("the transformed equation needs xi > 0")
    return xa


def b_term(q: PotentialSpec, xi):
    """lam-independent part of V: b(xi) = -5/(36 xi^2) + q(c xi^(2/3)) / (c xi^(2/3))."""
    xa = _positive(xi)
    x = C_LIOUVILLE * np.cbrt(xa) ** 2
    return _scalar_or_array(-5.0 / (36.0 * xa * xa) + np.asarray(evaluate(q, x)) / x)


def effective_potential(q: PotentialSpec, xi, lam: float):
    """V(xi, lam) = b(xi) - lam / (c xi^(2/3))."""
    xa = _positive(xi)
    x = C_LIOUVILLE * np.cbrt(xa) ** 2
    return _scalar_or_array(-5.0 / (36.0 * xa * xa)
                            + (np.asarray(evaluate(q, x)) - lam) / x)


def push_solution(u, du, x):
    """Map (u, u') at x to (omega, omega') at xi(x).

    omega = x^(1/4) u and omega' = dx/dxi * d(omega)/dx with dx/dxi = x^(-1/2).
    """
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0):
        raise SingularityError("push_solution needs x > 0")
    u = np.asarray(u, dtype=float)
    du = np.asarray(du, dtype=float)
    w = xa ** 0.25 * u
    dw = 0.25 * xa ** -1.25 * u + xa ** -0.25 * du
    return _scalar_or_array(w), _scalar_or_array(dw)


def pull_solution(w, dw, xi):
    """Inverse of :func:`push_solution`, given xi instead of x."""
    xa = np.asarray(_positive(xi))
    x = C_LIOUVILLE * np.cbrt(xa) ** 2
    w = np.asarray(w, dtype=float)
    dw = np.asarray(dw, dtype=float)
    u = x ** -0.25 * w
    du = x ** 0.25 * dw - 0.25 * u / x
    return _scalar_or_array(u), _scalar_or_array(du)
