"""Singular heteroclinic orbits of the fast subsystem and the characteristic
functions chi and lambda.

With ``eps = 0`` and time rescaled by ``p(x)`` the fast subsystem reads
``x' = F(x) - y``, ``y' = c y``.  Since ``y`` is strictly increasing the orbit
through ``(x0, F(x0))`` is a graph ``x = X(y)``.  We integrate it in
``s = log y``::

    dX/ds   = (F(X) - exp(s)) / c
    dLam/ds = F'(X)                  -> lambda(x0)
    dC/ds   = F(X) - ybar            -> alternative form of chi
    dD/ds   = exp(s) - ybar          -> chi by direct quadrature

from ``s0 = log F(x0)`` upward and downward until ``X`` hits 0.  Both ends of
the heteroclinic orbit become finite boundary events, and the downward sweep
stays well conditioned even when ``y_alpha`` is tiny (``x0`` close to ``K``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .model import ModelSpec, H_eval, _isocline, ybar as _ybar

__all__ = [
    "OrbitIntegrationError",
    "FastOrbit",
    "SingularConfiguration",
    "integrate_fast_orbit",
    "chi",
    "lambda_",
    "singular_configuration",
    "chi_crosscheck",
]

DEFAULT_TOL = 1e-9
_MIN_SAMPLES = 200


class OrbitIntegrationError(RuntimeError):
    """The fast-orbit integration failed (step underflow or no endpoint)."""

    def __init__(self, message, state=None):
        self.state = state
        super().__init__(message if state is None else f"{message}; last state {state}")


@dataclass(frozen=True)
class FastOrbit:
    """One heteroclinic orbit gamma(x0) of the fast subsystem.

    ``samples`` is an ``(n, 2)`` array of ``(y, X(y))`` rows, strictly
    increasing in ``y``, running from ``y_alpha`` to ``y_omega``.
    """

    x0: float
    y_alpha: float
    y_omega: float
    chi: float
    lam: float
    samples: np.ndarray
    tol_used: float
    ybar: float
    c: float
    # auxiliary quadratures for chi_crosscheck
    chi_alt: float
    chi_direct: float
    s_alpha: float
    s_omega: float

    @property
    def lambda_(self) -> float:
        return self.lam

    @property
    def period_coefficient(self) -> float:
        return self.s_omega - self.s_alpha

    def to_dict(self) -> dict:
        return {
            "x0": self.x0,
            "y_alpha": self.y_alpha,
            "y_omega": self.y_omega,
            "chi": self.chi,
            "lambda": self.lam,
            "tol_used": self.tol_used,
            "polyline": [[float(x), float(y)] for y, x in self.samples],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        rows = ["y,x"] + [f"{y:.17g},{x:.17g}" for y, x in self.samples]
        return "\n".join(rows) + "\n"


@dataclass(frozen=True)
class SingularConfiguration:
    """Closed loop made of gamma(x0) and the slow segment on the y-axis."""

    x0: float
    orbit_polyline: np.ndarray  # (n, 2) rows of (x, y) from y_alpha to y_omega
    slow_segment: np.ndarray    # (2, 2): (0, y_omega) -> (0, y_alpha)
    period_coefficient: float
    orbit: FastOrbit

    def closed_polyline(self) -> np.ndarray:
        """The loop as (x, y) rows; first and last rows coincide."""
        return np.vstack([self.orbit_polyline, self.slow_segment[1:]])

    def to_dict(self) -> dict:
        return {
            "x0": self.x0,
            "y_alpha": self.orbit.y_alpha,
            "y_omega": self.orbit.y_omega,
            "period_coefficient": self.period_coefficient,
            "chi": self.orbit.chi,
            "lambda": self.orbit.lam,
            "polyline": self.closed_polyline().tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        rows = ["y,x"] + [f"{y:.17g},{x:.17g}" for x, y in self.closed_polyline()]
        return "\n".join(rows) + "\n"


def _sweep(spec, x0, s0, direction, tol, yb):
    c = spec.c
    iso = _isocline

    def rhs(s, z):
        # python floats: overshooting trial stages give inf quietly, not warnings
        X = float(z[0])
        F, dF, _ = iso(spec, X)
        return (F - math.exp(s)) / c, dF, F - yb, math.exp(s) - yb

    def hit_axis(s, z):
        return z[0]

    hit_axis.terminal = True
    hit_axis.direction = -1

    # X reaches 0 within a few c-scaled units of s unless y_alpha is tiny;
    # the span is extended until the event fires
    span = 4.0 + 40.0 * c
    s_start, z_start = s0, np.array([x0, 0.0, 0.0, 0.0])
    pieces = []
    for _ in range(60):
        s_end = s_start + direction * span
        sol = solve_ivp(rhs, (s_start, s_end), z_start, method="DOP853", rtol=tol,
                        atol=tol * np.array([spec.K, 1.0, 1.0, 1.0]), events=hit_axis,
                        dense_output=True)
        if sol.status == -1:
            raise OrbitIntegrationError(f"fast orbit x0={x0}: {sol.message}",
                                        state=(sol.t[-1], sol.y[:, -1].tolist()))
        pieces.append(sol)
        if sol.status == 1:
            s_hit = float(sol.t_events[0][0])
            z_hit = sol.y_events[0][0].copy()
            z_hit[0] = 0.0
            return s_hit, z_hit, pieces
        s_start, z_start = sol.t[-1], sol.y[:, -1]
        if z_start[0] > spec.K or not np.all(np.isfinite(z_start)):
            break
        span *= 2.0
    raise OrbitIntegrationError(f"fast orbit x0={x0}: axis not reached",
                                state=(s_start, list(map(float, z_start))))


def _samples(pieces, s0, s_hit, n_min):
    """(s, X) samples from solver steps plus dense-output fill-in."""
    ss = [p.t for p in pieces]
    s_all = np.concatenate(ss)
    s_all = s_all[(s_all - s0) * (s_hit - s0) >= 0]
    fill = np.linspace(s0, s_hit, n_min)
    s_all = np.unique(np.concatenate([s_all, fill, [s_hit]]))
    X = np.empty_like(s_all)
    for i, s in enumerate(s_all):
        for p in pieces:
            lo, hi = sorted((p.t[0], p.t[-1]))
            if lo - 1e-15 <= s <= hi + 1e-15:
                X[i] = p.sol(s)[0]
                break
        else:
            X[i] = pieces[-1].sol(s)[0]
    X = np.clip(X, 0.0, None)
    return s_all, X


def integrate_fast_orbit(spec: ModelSpec, x0: float, tol: float = DEFAULT_TOL) -> FastOrbit:
    """Integrate gamma(x0) and its chi / lambda quadratures.

    Parameters
    ----------
    spec : ModelSpec
    x0 : float
        Abscissa where the orbit crosses the prey isocline, ``0 < x0 < K``.
    tol : float
        Relative tolerance of the embedded Runge-Kutta pair, in
        ``[1e-12, 1e-4]``.

    Returns
    -------
    FastOrbit
    """
    if not 0.0 < x0 < spec.K:
        raise ValueError(f"x0 must lie in (0, K) = (0, {spec.K}), got {x0}")
    if not 1e-12 <= tol <= 1e-4:
        raise ValueError(f"tol must lie in [1e-12, 1e-4], got {tol}")
    yb = _ybar(spec)
    F0 = _isocline(spec, x0)[0]
    if not F0 > 0:
        raise ValueError(f"F(x0) must be positive, got {F0}")
    s0 = math.log(F0)

    s_om, z_om, up = _sweep(spec, x0, s0, +1.0, tol, yb)
    s_al, z_al, down = _sweep(spec, x0, s0, -1.0, tol, yb)

    lam = z_om[1] - z_al[1]
    chi_alt = z_om[2] - z_al[2]
    chi_direct = z_om[3] - z_al[3]
    y_al, y_om = math.exp(s_al), math.exp(s_om)
    chi_h = _H_log(yb, s_om) - _H_log(yb, s_al)

    s_dn, X_dn = _samples(down, s0, s_al, _MIN_SAMPLES // 2)
    s_up, X_up = _samples(up, s0, s_om, _MIN_SAMPLES // 2)
    s_all = np.concatenate([s_dn, s_up[1:]])
    X_all = np.concatenate([X_dn, X_up[1:]])
    # the anchor sample is exact by construction
    X_all[np.argmin(np.abs(s_all - s0))] = x0
    samples = np.column_stack([np.exp(s_all), X_all])
    samples[0, 0], samples[-1, 0] = y_al, y_om
    samples[0, 1] = samples[-1, 1] = 0.0

    return FastOrbit(x0=float(x0), y_alpha=y_al, y_omega=y_om, chi=chi_h, lam=float(lam),
                     samples=samples, tol_used=tol, ybar=yb, c=spec.c,
                     chi_alt=float(chi_alt), chi_direct=float(chi_direct),
                     s_alpha=s_al, s_omega=s_om)


def _H_log(yb, s):
    """H evaluated from log y, avoiding exp/log round trips."""
    return math.exp(s) - yb - yb * (s - math.log(yb))


def chi(spec: ModelSpec, x0: float, tol: float = DEFAULT_TOL) -> float:
    """``H(y_omega(x0)) - H(y_alpha(x0))``."""
    return integrate_fast_orbit(spec, x0, tol).chi


def lambda_(spec: ModelSpec, x0: float, tol: float = DEFAULT_TOL) -> float:
    """Stability characteristic: integral of ``F'(X(y)) / y`` along gamma(x0)."""
    return integrate_fast_orbit(spec, x0, tol).lam


def singular_configuration(spec: ModelSpec, x0: float, tol: float = DEFAULT_TOL,
                           orbit: FastOrbit | None = None) -> SingularConfiguration:
    orbit = orbit if orbit is not None else integrate_fast_orbit(spec, x0, tol)
    poly = orbit.samples[:, ::-1].copy()
    slow = np.array([[0.0, orbit.y_omega], [0.0, orbit.y_alpha]])
    return SingularConfiguration(x0=orbit.x0, orbit_polyline=poly, slow_segment=slow,
                                 period_coefficient=math.log(orbit.y_omega / orbit.y_alpha),
                                 orbit=orbit)


def chi_crosscheck(orbit: FastOrbit) -> tuple[float, float]:
    """Residuals of chi against two independent representations.

    Returns ``(|chi - D|, |chi - C|)`` where ``D`` integrates
    ``(y - ybar) / y dy`` directly along the orbit and ``C`` integrates
    ``(F(X) - ybar) / y dy``; the latter agrees with chi because
    ``(F(X) - y) / y dy = c dX`` integrates to zero between the two axis
    points.
    """
    return abs(orbit.chi - orbit.chi_direct), abs(orbit.chi - orbit.chi_alt)
