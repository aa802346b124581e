"""Slow, simple reference computations used to validate the fast paths.

The fast-orbit oracle integrates ``dX/dy = (F(X) - y) / (c y)`` with the
classical fixed-step RK4 scheme directly in ``y`` (no log change of
variable, no adaptivity, no event machinery).  The axis hit is located by
cubic Hermite interpolation on the last step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .model import ModelSpec, _H_scalar, _isocline, ybar

__all__ = ["OracleOrbit", "rk4_fast_orbit", "lambda_xform"]


@dataclass(frozen=True)
class OracleOrbit:
    x0: float
    y_alpha: float
    y_omega: float
    chi: float
    lam: float
    steps: int


def _hermite_root(y0, y1, X0, X1, d0, d1):
    """Zero of the cubic Hermite interpolant of X on [y0, y1]."""
    h = y1 - y0

    def X(y):
        t = (y - y0) / h
        h00 = 2 * t**3 - 3 * t**2 + 1
        h10 = t**3 - 2 * t**2 + t
        h01 = -2 * t**3 + 3 * t**2
        h11 = t**3 - t**2
        return h00 * X0 + h10 * h * d0 + h01 * X1 + h11 * h * d1

    lo, hi = sorted((y0, y1))
    return brentq(X, lo, hi, xtol=1e-15, rtol=1e-15)


def _sweep(spec, x0, y_start, h):
    """RK4 from (y_start, x0) with signed step h until X changes sign.

    State is ``(X, Lam)`` with ``dLam/dy = F'(X) / y``.
    """
    c = spec.c

    def f(y, X):
        F, dF, _ = _isocline(spec, X)
        return (F - y) / (c * y), dF / y

    y, X, L = y_start, x0, 0.0
    n = 0
    while True:
        k1 = f(y, X)
        k2 = f(y + h / 2, X + h / 2 * k1[0])
        k3 = f(y + h / 2, X + h / 2 * k2[0])
        k4 = f(y + h, X + h * k3[0])
        Xn = X + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        Ln = L + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        yn = y + h
        n += 1
        if Xn <= 0.0:
            d0, dn = k1[0], f(yn, Xn)[0]
            y_hit = _hermite_root(y, yn, X, Xn, d0, dn)
            # Lam is smooth across the step; interpolate its increment linearly
            # in the Hermite sense using its derivative at both ends
            g0, gn = k1[1], f(yn, Xn)[1]
            t = (y_hit - y) / h
            hh = h
            L_hit = ((2 * t**3 - 3 * t**2 + 1) * L + (t**3 - 2 * t**2 + t) * hh * g0
                     + (-2 * t**3 + 3 * t**2) * Ln + (t**3 - t**2) * hh * gn)
            return y_hit, L_hit, n
        if yn <= 0 or n > 50_000_000:
            raise RuntimeError("oracle sweep did not reach the axis")
        y, X, L = yn, Xn, Ln


def rk4_fast_orbit(spec: ModelSpec, x0: float, h: float = 1e-5) -> OracleOrbit:
    """Fixed-step RK4 reference for ``y_alpha, y_omega, chi, lambda``.

    Costs about ``(y_omega - y_alpha) / h`` steps; seconds per orbit at the
    default step for moderate ``y`` ranges.
    """
    y0 = _isocline(spec, x0)[0]
    y_om, L_om, n1 = _sweep(spec, x0, y0, h)
    y_al, L_al, n2 = _sweep(spec, x0, y0, -h)
    yb = ybar(spec)
    return OracleOrbit(x0=x0, y_alpha=y_al, y_omega=y_om,
                       chi=_H_scalar(yb, y_om) - _H_scalar(yb, y_al),
                       lam=L_om - L_al, steps=n1 + n2)


def _branch(spec, x0, sign, u0_frac=1e-4, rtol=1e-12):
    """One branch ``Y(x)`` of the orbit, in ``u`` with ``x = x0 - u**2``.

    Near the isocline ``Y - F(x0) ~ sign * sqrt(2 c F(x0)) u``, which seeds
    the start at small ``u``.  Returns ``(Y(0), Lam)`` where ``Lam`` is the
    branch integral of ``c F'(x) / (F(x) - Y) dx`` from ``x0`` to ``0``.
    """
    c = spec.c
    F0, dF0, _ = _isocline(spec, x0)
    k = math.sqrt(2 * c * F0)
    u_end = math.sqrt(x0)
    u0 = u0_frac * u_end

    def rhs(u, z):
        x = x0 - u * u
        F, dF, _ = _isocline(spec, x)
        d = F - z[0]
        return (-2 * u * c * z[0] / d, -2 * u * c * dF / d)

    z0 = (F0 + sign * k * u0, sign * 2 * c * dF0 * u0 / k)
    sol = solve_ivp(rhs, (u0, u_end), z0, method="DOP853", rtol=rtol, atol=1e-14)
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.y[0, -1], sol.y[1, -1]


def lambda_xform(spec: ModelSpec, x0: float) -> tuple[float, float, float]:
    """``(lambda, y_alpha, y_omega)`` from the x-parameterized branches.

    Valid when ``X`` is monotone on both branches (one-hump isoclines).
    """
    y_om, L_up = _branch(spec, x0, +1.0)
    y_al, L_lo = _branch(spec, x0, -1.0)
    return L_up - L_lo, y_al, y_om
