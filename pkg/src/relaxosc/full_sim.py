"""Direct simulation of the full system with small predator death rate.

The prey density on a relaxation cycle drops to ``exp(-O(1/eps))``, so the
state is ``(u, y)`` with ``u = log x``::

    du/dt = (F(x) - y) / G(x),     G(x) = x / p(x)
    dy/dt = y (-eps + c p(x))

``G`` is finite and positive at ``x = 0``, so the field stays smooth when
``exp(u)`` underflows.  Cycles are detected with a return map on the prey
isocline: upward crossings of ``y = F(x)`` are exactly the local maxima of
``x(t)``, which puts detected cycles on the same coordinate as the anchor
abscissa ``x0`` of a singular configuration.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .criteria import AnalysisReport, Stability, predict_dynamics
from .fast_orbit import SingularConfiguration
from .model import Family, ModelSpec, _F_custom, _isocline, _response, _x_over_p, ybar

__all__ = [
    "U_MIN",
    "NoReturnError",
    "SimulationError",
    "EquilibriumInfo",
    "Trajectory",
    "CycleResult",
    "equilibrium",
    "simulate",
    "isocline_return_map",
    "find_cycles",
    "floquet_integral",
    "hausdorff_to_config",
    "hausdorff_distance",
    "empirical_entry_exit",
]

U_MIN = -700.0
DEFAULT_TOL = 1e-6
HAUSDORFF_U_MIN = -30.0


class SimulationError(RuntimeError):
    pass


class NoReturnError(SimulationError):
    """No return to the isocline section within the time budget."""


@dataclass(frozen=True)
class EquilibriumInfo:
    x_star: float
    y_star: float
    local_stability: str
    f_prime_at_x_star: float
    f_prime_at_zero: float
    notes: tuple = ()

    def to_dict(self):
        return {"x_star": self.x_star, "y_star": self.y_star,
                "local_stability": self.local_stability,
                "f_prime_at_x_star": self.f_prime_at_x_star,
                "f_prime_at_zero": self.f_prime_at_zero, "notes": list(self.notes)}


@dataclass(frozen=True)
class Trajectory:
    """Samples ``(t, u, y)`` of one simulated solution.

    ``events`` holds ``(t, x, y, kind)`` tuples for isocline crossings
    (``kind`` is ``"isocline-up"`` for local maxima of ``x``).
    """

    t: np.ndarray
    u: np.ndarray
    y: np.ndarray
    epsilon: float
    events: list
    termination: str
    notes: tuple = ()
    sol: object = field(default=None, compare=False, repr=False)
    t_steps: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    @property
    def x(self) -> np.ndarray:
        return np.exp(np.maximum(self.u, U_MIN))

    def to_csv(self, header: str = "") -> str:
        lines = [header.rstrip("\n")] if header else []
        lines.append("t,x,y,u")
        lines += [f"{t:.17g},{x:.17g},{y:.17g},{u:.17g}"
                  for t, x, y, u in zip(self.t, self.x, self.y, self.u)]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CycleResult:
    x_section: float
    period: float
    floquet_integral: float
    stability: Stability
    hausdorff_to_prediction: Optional[float]
    epsilon: float
    predicted_x0: Optional[float] = None
    predicted_lambda: Optional[float] = None
    predicted: bool = True
    notes: tuple = ()
    trajectory: Optional[Trajectory] = field(default=None, compare=False, repr=False)

    def to_dict(self):
        return {
            "x_section": self.x_section,
            "period": self.period,
            "floquet_integral": self.floquet_integral,
            "stability": self.stability.value,
            "hausdorff_to_prediction": self.hausdorff_to_prediction,
            "epsilon": self.epsilon,
            "predicted_x0": self.predicted_x0,
            "predicted_lambda": self.predicted_lambda,
            "predicted": self.predicted,
            "notes": list(self.notes),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


# --------------------------------------------------------------------------
# vector field

def _F_value(spec, x):
    if spec.family is Family.CUSTOM:
        return _F_custom(spec, x)
    return _isocline(spec, x)[0]


def _field(spec, eps):
    c = spec.c

    def rhs(t, z):
        u, y = z[0], z[1]
        # trial stages may overshoot wildly; clamp both ways
        x = math.exp(min(max(u, U_MIN), 50.0))
        G = _x_over_p(spec, x)
        return ((_F_value(spec, x) - y) / G, y * (-eps + c * x / G))

    return rhs


def _divergence(spec, eps, x, y):
    """Divergence of the original (x, y) field."""
    p, dp = _response(spec, x)
    F, dF, _ = _isocline(spec, x)
    return dp * (F - y) + p * dF - eps + spec.c * p


def _check_eps(eps):
    if not eps > 0:
        raise ValueError("epsilon must be positive; use the fast-orbit analysis for eps = 0")


# --------------------------------------------------------------------------
# equilibrium

def equilibrium(spec: ModelSpec, epsilon: float, grid_n: int = 2000) -> EquilibriumInfo:
    """Coexistence equilibrium: smallest root of ``c p(x) = eps`` in (0, K)."""
    _check_eps(epsilon)
    K = spec.K
    g = lambda x: spec.c * _response(spec, x)[0] - epsilon
    xs = np.linspace(0.0, K, grid_n + 1)
    gs = np.array([g(x) for x in xs])
    idx = np.nonzero((gs[:-1] < 0) & (gs[1:] >= 0))[0]
    if len(idx) == 0:
        raise SimulationError("no coexistence equilibrium: c p(x) = eps has no root in (0, K)")
    i = idx[0]
    x_star = brentq(g, xs[i], xs[i + 1], xtol=1e-15 * K, rtol=1e-15)
    notes = []
    down = np.nonzero((gs[:-1] >= 0) & (gs[1:] < 0))[0]
    if len(down) or len(idx) > 1:
        notes.append("c p(x) = eps has more than one root; the smallest is returned")
    F, dF, _ = _isocline(spec, x_star)
    return EquilibriumInfo(x_star=x_star, y_star=F,
                           local_stability="stable" if dF < 0 else "unstable",
                           f_prime_at_x_star=dF, f_prime_at_zero=_isocline(spec, 0.0)[1],
                           notes=tuple(notes))


# --------------------------------------------------------------------------
# simulation

def _section_event(spec):
    def ev(t, z):
        x = math.exp(min(max(z[0], U_MIN), 50.0))
        return z[1] - _F_value(spec, x)
    return ev


def _integrate(spec, eps, z0, t_span, tol, events=None, dense=True):
    sol = solve_ivp(_field(spec, eps), t_span, z0, method="DOP853", rtol=tol,
                    atol=[tol, tol * 1e-3 * ybar(spec)], events=events, dense_output=dense)
    if sol.status == -1:
        raise SimulationError(f"integration failed: {sol.message} at t={sol.t[-1]}, "
                              f"state={sol.y[:, -1].tolist()}")
    if not np.all(np.isfinite(sol.y)):
        raise SimulationError("non-finite state encountered")
    return sol


def _trajectory(sols, eps, events, termination, n_sub=8):
    ts, us, ys, steps = [], [], [], []
    for k, sol in enumerate(sols):
        tt = sol.t
        if n_sub > 1 and sol.sol is not None and len(tt) > 1:
            frac = np.linspace(0.0, 1.0, n_sub, endpoint=False)
            tt = np.concatenate([(tt[:-1, None] + frac * np.diff(tt)[:, None]).ravel(), tt[-1:]])
            zz = sol.sol(tt)
        else:
            zz = sol.y
        if k:
            tt, zz = tt[1:], zz[:, 1:]
        ts.append(tt)
        us.append(zz[0])
        ys.append(zz[1])
        steps.append(sol.t if not k else sol.t[1:])
    u = np.concatenate(us)
    notes = ("prey numerically extinct: u reached the floor",) if np.min(u) <= U_MIN else ()
    dense = _Dense([s.sol for s in sols if s.sol is not None])
    return Trajectory(t=np.concatenate(ts), u=u, y=np.concatenate(ys), epsilon=eps,
                      events=events, termination=termination, notes=notes, sol=dense,
                      t_steps=np.concatenate(steps))


class _Dense:
    """Concatenation of several ``OdeSolution`` pieces."""

    def __init__(self, pieces):
        self.pieces = pieces

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((2, t.size))
        bounds = [p.t_max for p in self.pieces]
        idx = np.searchsorted(bounds, t)
        idx = np.minimum(idx, len(self.pieces) - 1)
        for j in np.unique(idx):
            sel = idx == j
            out[:, sel] = self.pieces[j](t[sel])[:2]
        return out


def simulate(spec: ModelSpec, epsilon: float, x0: float, y0: float, t_max: float,
             tol: float = DEFAULT_TOL, n_sub: int = 8) -> Trajectory:
    """Integrate the full system from ``(x0, y0)`` over ``[0, t_max]``."""
    _check_eps(epsilon)
    if not (x0 > 0 and y0 > 0):
        raise ValueError("initial densities must be positive")
    up = _section_event(spec)
    up.direction = 1
    down = _section_event(spec)
    down.direction = -1
    sol = _integrate(spec, epsilon, [math.log(x0), y0], (0.0, t_max), tol, events=[up, down])
    events = []
    for kind, te, ze in zip(("isocline-up", "isocline-down"), sol.t_events, sol.y_events):
        events += [(float(t), math.exp(max(z[0], U_MIN)), float(z[1]), kind)
                   for t, z in zip(te, ze)]
    events.sort()
    return _trajectory([sol], epsilon, events, "t_max reached", n_sub=n_sub)


def _return(spec, eps, x_start, tol, t_max=None, record=False):
    """One pass of the isocline return map; optionally returns the trajectory."""
    K = spec.K
    if not 0 < x_start < K:
        raise ValueError(f"section point must lie in (0, K), got {x_start}")
    t_max = t_max if t_max is not None else 200.0 / eps
    F0 = _F_value(spec, x_start)
    z0 = [math.log(x_start), F0]
    if not spec.c * _response(spec, x_start)[0] > eps:
        raise ValueError("section point must satisfy c p(x) > eps (upward crossing)")
    # leave the section before arming the event; x-maxima are at least
    # O(1/sqrt(eps)) apart in time, far more than t_skip
    t_skip = min(0.25, 0.1 / math.sqrt(eps))
    first = _integrate(spec, eps, z0, (0.0, t_skip), tol)
    ev = _section_event(spec)
    ev.direction = 1
    ev.terminal = True
    second = _integrate(spec, eps, first.y[:, -1], (t_skip, t_max), tol, events=ev)
    if second.status != 1:
        raise NoReturnError(f"no return to the section from x={x_start} within t={t_max}: "
                            "escaped or converged to equilibrium")
    t_ret = float(second.t_events[0][0])
    z_ret = second.y_events[0][0]
    x_next = math.exp(max(z_ret[0], U_MIN))
    traj = None
    if record:
        traj = _trajectory([first, second], eps, [(t_ret, x_next, float(z_ret[1]), "isocline-up")],
                           "returned to section")
    return x_next, t_ret, traj


def isocline_return_map(spec: ModelSpec, epsilon: float, x_start: float,
                        tol: float = 1e-9, t_max: Optional[float] = None) -> tuple[float, float]:
    """Next local maximum of prey density after starting at ``(x, F(x))``.

    Returns ``(x_next, elapsed_time)``.  Raises :class:`NoReturnError` when
    the trajectory does not come back to the section within ``t_max``
    (default ``200 / eps``).
    """
    _check_eps(epsilon)
    x_next, t, _ = _return(spec, epsilon, x_start, tol, t_max)
    return x_next, t


def floquet_integral(spec: ModelSpec, epsilon: float, cycle: Trajectory,
                     closure_tol: float = 1e-3, gauss_n: int = 5) -> float:
    """Integral of the divergence of the (x, y) field over one period.

    Gauss-Legendre quadrature on every solver step of the cycle's dense
    output.  The trajectory must close: the relative gap between its first
    and last point in ``(x, y)`` must not exceed ``closure_tol``.
    """
    if cycle.sol is None or cycle.t_steps is None or len(cycle.t) < 2:
        raise ValueError("floquet_integral needs a trajectory with dense output")
    if not cycle.t[-1] > cycle.t[0]:
        raise ValueError("zero-length trajectory is not a cycle")
    x = cycle.x
    gap = math.hypot((x[-1] - x[0]) / spec.K, (cycle.y[-1] - cycle.y[0]) / ybar(spec))
    if gap > closure_tol:
        raise ValueError(f"trajectory is not closed (relative gap {gap:.3g})")
    nodes, weights = np.polynomial.legendre.leggauss(gauss_n)
    ts = cycle.t_steps
    a, b = ts[:-1], ts[1:]
    tq = (0.5 * (b - a)[:, None] * nodes + 0.5 * (a + b)[:, None]).ravel()
    wq = (0.5 * (b - a)[:, None] * weights).ravel()
    z = cycle.sol(tq)
    xq = np.exp(np.maximum(z[0], U_MIN))
    div = np.array([_divergence(spec, epsilon, xv, yv) for xv, yv in zip(xq, z[1])])
    return float(np.dot(wq, div))


# --------------------------------------------------------------------------
# Hausdorff distance between polylines

def _point_segment_dist(P, A, B):
    """Distance from each point in P (n,2) to each segment A[j]->B[j]; (n, m)."""
    AB = B - A
    L2 = np.einsum("ij,ij->i", AB, AB)
    L2 = np.where(L2 > 0, L2, 1.0)
    AP = P[:, None, :] - A[None, :, :]
    s = np.clip(np.einsum("nmk,mk->nm", AP, AB) / L2, 0.0, 1.0)
    D = AP - s[..., None] * AB[None, :, :]
    return np.sqrt(np.einsum("nmk,nmk->nm", D, D))


def _directed(P, Q, chunk=512):
    if len(Q) == 1:
        return float(np.max(np.linalg.norm(P - Q[0], axis=1)))
    A, B = Q[:-1], Q[1:]
    best = 0.0
    for i in range(0, len(P), chunk):
        d = _point_segment_dist(P[i:i + chunk], A, B).min(axis=1)
        best = max(best, float(d.max()))
    return best


def hausdorff_distance(P: np.ndarray, Q: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two polylines given as (n, 2) arrays.

    Vertices of each polyline are measured against the segments of the
    other, so the result does not depend on how finely straight pieces are
    sampled.
    """
    P, Q = np.asarray(P, float), np.asarray(Q, float)
    if len(P) == 0 or len(Q) == 0:
        raise ValueError("polylines must be nonempty")
    return max(_directed(P, Q), _directed(Q, P))


def _config_polyline(config: SingularConfiguration, u_min: float):
    """Gamma(x0) in (max(log x, u_min), y), with the endpoint approach resolved.

    Near an axis endpoint ``X`` is linear in ``y``, so the steep descent of
    ``log X`` is filled in with points ``y = y_end + e^u / X'(y_end)``.
    """
    orbit = config.orbit
    ys, xs = orbit.samples[:, 0], orbit.samples[:, 1]
    inner = xs > 0
    u = np.log(xs[inner])
    pts = np.column_stack([np.maximum(u, u_min), ys[inner]])
    yb, c = orbit.ybar, orbit.c
    def approach(y_end, u_from):
        slope = (yb - y_end) / (c * y_end)  # dX/dy at X = 0
        us = np.linspace(u_min, u_from, 60)
        return np.column_stack([us, y_end + np.exp(us) / slope])
    lo = approach(orbit.y_alpha, pts[0, 0])[::1]
    hi = approach(orbit.y_omega, pts[-1, 0])[::-1]
    gamma = np.vstack([lo, pts, hi])
    slow = np.array([[u_min, orbit.y_omega], [u_min, orbit.y_alpha]])
    return np.vstack([gamma, slow])


def hausdorff_to_config(cycle: Trajectory, config: SingularConfiguration,
                        u_min: float = HAUSDORFF_U_MIN) -> float:
    """Hausdorff distance between a simulated cycle and Gamma(x0).

    Both curves are drawn in ``(max(log x, u_min), y)`` so that the slow
    segment on the y-axis sits on the edge ``u = u_min``.
    """
    traj = np.column_stack([np.maximum(cycle.u, u_min), cycle.y])
    return hausdorff_distance(traj, _config_polyline(config, u_min))


# --------------------------------------------------------------------------
# cycle search

def _cycle_result(spec, eps, x_fix, tol, root, config, predicted=True, notes=()):
    _, period, traj = _return(spec, eps, x_fix, tol, record=True)
    mu = floquet_integral(spec, eps, traj, closure_tol=1e-2)
    stability = Stability.STABLE if mu < 0 else Stability.UNSTABLE
    dist = hausdorff_to_config(traj, config) if config is not None else None
    return CycleResult(x_section=x_fix, period=period, floquet_integral=mu, stability=stability,
                       hausdorff_to_prediction=dist, epsilon=eps,
                       predicted_x0=root.x0 if root is not None else None,
                       predicted_lambda=root.lam if root is not None else None,
                       predicted=predicted, notes=notes, trajectory=traj)


def _iterate_to_fixed_point(spec, eps, x, xtol, tol, max_iter, floor):
    """Iterate the return map; returns the fixed point or None (equilibrium)."""
    for _ in range(max_iter):
        try:
            x_next, _ = isocline_return_map(spec, eps, x, tol)
        except NoReturnError:
            return None
        except ValueError:
            return None
        if x_next < floor:
            return None
        if abs(x_next - x) < xtol:
            return x_next
        x = x_next
    raise SimulationError(f"return map did not converge within {max_iter} iterations")


def find_cycles(spec: ModelSpec, epsilon: float, predictions: Optional[AnalysisReport] = None,
                tol: float = 1e-6, rtol: float = 1e-9, max_iter: int = 60,
                probe: bool = True) -> list[CycleResult]:
    """Locate the limit cycles of the full system near the predicted loops.

    Stable predictions are found by iterating the isocline return map from
    ``1.05 x0``; unstable ones by bisection of ``R(x) - x`` in a bracket grown
    around ``x0`` (backward integration is useless in the slow regime).  With
    ``probe`` set, a start near ``K`` is iterated as well; a stable cycle
    found that way but not predicted is reported with ``predicted=False``.

    ``tol`` is the fixed-point tolerance in units of ``K``; ``rtol`` is the
    integrator tolerance.
    """
    _check_eps(epsilon)
    K = spec.K
    xtol = tol * K
    predictions = predictions if predictions is not None else predict_dynamics(spec)
    eq = equilibrium(spec, epsilon)
    floor = eq.x_star + 0.05 * K
    configs = {cf.x0: cf for cf in predictions.configurations}
    results = []

    for root in predictions.roots:
        if root.stability is not Stability.STABLE:
            continue
        x_out = _iterate_to_fixed_point(spec, epsilon, min(root.x0 * 1.05, K * (1 - 1e-6)),
                                        xtol, rtol, max_iter, floor)
        if x_out is None:
            continue
        x_in = _iterate_to_fixed_point(spec, epsilon, root.x0 * 0.95, xtol, rtol, max_iter, floor)
        notes = ()
        if x_in is None or abs(x_in - x_out) > 100 * xtol:
            notes = (f"iterates from 0.95 x0 ended at {x_in}, from 1.05 x0 at {x_out}",)
        results.append(_cycle_result(spec, epsilon, x_out, rtol, root,
                                     configs.get(root.x0), notes=notes))

    stable_xs = sorted(r.x_section for r in results)
    for root in predictions.roots:
        if root.stability is not Stability.UNSTABLE:
            continue
        upper = min([x for x in stable_xs if x > root.x0], default=K * (1 - 1e-6))
        x_fix = _bisect_unstable(spec, epsilon, root.x0, floor, upper, xtol, rtol)
        if x_fix is None:
            continue
        results.append(_cycle_result(spec, epsilon, x_fix, rtol, root, configs.get(root.x0)))

    if probe and not any(r.stability is Stability.STABLE for r in results):
        x_fix = _iterate_to_fixed_point(spec, epsilon, 0.95 * K, xtol, rtol, max_iter, floor)
        if x_fix is not None:
            results.append(_cycle_result(spec, epsilon, x_fix, rtol, None, None, predicted=False))

    results.sort(key=lambda r: r.x_section)
    return results


def _bisect_unstable(spec, eps, x0, lower, upper, xtol, rtol):
    def g(x):
        try:
            return isocline_return_map(spec, eps, x, rtol)[0] - x
        except NoReturnError:
            return -1.0

    lo, hi = max(0.95 * x0, lower), min(1.05 * x0, upper)
    glo, ghi = g(lo), g(hi)
    for _ in range(20):
        if glo < 0 < ghi:
            break
        if glo >= 0 and lo > lower:
            lo = max(lower, x0 - 2 * (x0 - lo))
            glo = g(lo)
        if ghi <= 0 and hi < upper:
            hi = min(upper, x0 + 2 * (hi - x0))
            ghi = g(hi)
    else:
        return None
    if not glo < 0 < ghi:
        return None
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --------------------------------------------------------------------------
# entry-exit along the y-axis

def empirical_entry_exit(spec: ModelSpec, epsilon: float, y_in: float,
                         delta: Optional[float] = None, tol: float = 1e-10,
                         t_max: Optional[float] = None) -> float:
    """Ordinate at which a trajectory entering at ``(delta, y_in)`` leaves.

    Integrates from ``(delta, y_in)`` until ``x`` comes back up through
    ``delta`` and returns the predator density there.  ``delta`` defaults
    to ``1e-2 K``.
    """
    _check_eps(epsilon)
    delta = delta if delta is not None else 1e-2 * spec.K
    if not y_in > _F_value(spec, delta):
        raise ValueError("y_in must lie above the isocline at x = delta so the "
                         "trajectory heads into the y-axis")
    t_max = t_max if t_max is not None else 200.0 / epsilon
    ud = math.log(delta)
    ev = lambda t, z: z[0] - ud
    ev.direction = 1
    ev.terminal = True
    sol = _integrate(spec, epsilon, [ud, y_in], (0.0, t_max), tol, events=ev, dense=False)
    if sol.status != 1:
        raise SimulationError(f"trajectory from y_in={y_in} did not leave within t={t_max}")
    return float(sol.y_events[0][0][1])
