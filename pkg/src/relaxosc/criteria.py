"""Root scans of chi, stability labels from lambda, and the closed-form
thresholds for the one- and two-hump cases."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .fast_orbit import (DEFAULT_TOL, FastOrbit, OrbitIntegrationError, SingularConfiguration,
                         integrate_fast_orbit, singular_configuration)
from .model import (HumpClass, IsoclineShape, ModelSpec, H_conjugate, _H_scalar, _isocline,
                    classify_isocline, ybar)

__all__ = [
    "Stability",
    "Verdict",
    "ChiRoot",
    "ChiScan",
    "AnalysisReport",
    "SmallCLimits",
    "ScanError",
    "scan_chi_roots",
    "classify_roots",
    "holling4_kappa_star",
    "holling4_q",
    "small_c_limits",
    "predict_dynamics",
]

LAMBDA_NEUTRAL_TOL = 1e-6
SCAN_MARGIN = 1e-3


class Stability(str, enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    NEUTRAL = "neutral-inconclusive"


class Verdict(str, enum.Enum):
    GLOBALLY_STABLE_EQUILIBRIUM = "GloballyStableEquilibrium"
    N_OSCILLATIONS = "NOscillations"
    INCONCLUSIVE = "Inconclusive"


class ScanError(RuntimeError):
    def __init__(self, x0, cause):
        self.x0 = x0
        super().__init__(f"chi scan failed at x0={x0!r}: {cause}")


@dataclass(frozen=True)
class ChiRoot:
    x0: float
    chi_residual: float
    lam: float
    stability: Optional[Stability] = None

    def to_dict(self):
        return {"x0": self.x0, "chi_residual": self.chi_residual, "lambda": self.lam,
                "stability": self.stability.value if self.stability else None}


@dataclass(frozen=True)
class ChiScan:
    """Grid values of chi and lambda with the refined roots."""

    x: np.ndarray
    chi: np.ndarray
    lam: np.ndarray
    brackets: list
    roots: list
    tangencies: list = field(default_factory=list)

    def to_csv(self) -> str:
        rows = ["x0,chi,lambda"] + [f"{x:.17g},{c:.17g},{l:.17g}"
                                    for x, c, l in zip(self.x, self.chi, self.lam)]
        return "\n".join(rows) + "\n"


@dataclass(frozen=True)
class AnalysisReport:
    shape: IsoclineShape
    roots: list
    verdict: Verdict
    n_oscillations: Optional[int]
    configurations: list
    consistency: list
    tangencies: list = field(default_factory=list)

    @property
    def verdict_label(self) -> str:
        if self.verdict is Verdict.N_OSCILLATIONS:
            return f"NOscillations({self.n_oscillations})"
        return self.verdict.value

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict_label,
            "n_oscillations": self.n_oscillations,
            "shape": self.shape.to_dict(),
            "roots": [r.to_dict() for r in self.roots],
            "configurations": [
                {"x0": cf.x0, "y_alpha": cf.orbit.y_alpha, "y_omega": cf.orbit.y_omega,
                 "period_coefficient": cf.period_coefficient}
                for cf in self.configurations],
            "consistency": list(self.consistency),
            "tangencies": list(self.tangencies),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _chi_lam(spec, x, tol):
    try:
        o = integrate_fast_orbit(spec, x, tol)
    except (OrbitIntegrationError, ValueError) as exc:
        raise ScanError(x, exc) from exc
    return o.chi, o.lam


def scan_chi_roots(spec: ModelSpec, grid_n: int = 200, tol: float = DEFAULT_TOL,
                   xtol: float = 1e-10, executor=None,
                   x_range: Optional[tuple] = None) -> ChiScan:
    """Bracket and refine the roots of chi on ``(1e-3 K, K (1 - 1e-3))``.

    ``x_range = (lo, hi)`` narrows the grid to a sub-interval of ``(0, K)``.

    Grid points where ``|chi|`` has a local minimum below 1% of the grid's
    ``max |chi|`` without a sign change are reported as suspected tangencies;
    they are never counted as roots.  ``executor`` (a ``concurrent.futures``
    executor) may be supplied to evaluate grid points in parallel; results
    are assembled in grid order.
    """
    if grid_n < 100:
        raise ValueError("grid_n must be at least 100")
    K = spec.K
    lo, hi = x_range if x_range is not None else (SCAN_MARGIN * K, K * (1 - SCAN_MARGIN))
    if not 0 < lo < hi < K:
        raise ValueError(f"scan range must satisfy 0 < lo < hi < K, got ({lo}, {hi})")
    xs = np.linspace(lo, hi, grid_n)
    if executor is None:
        vals = [_chi_lam(spec, x, tol) for x in xs]
    else:
        vals = list(executor.map(_chi_lam, [spec] * grid_n, xs, [tol] * grid_n))
    chis = np.array([v[0] for v in vals])
    lams = np.array([v[1] for v in vals])

    brackets, roots = [], []
    f = lambda x: _chi_lam(spec, x, tol)[0]
    for i in range(grid_n - 1):
        a, b = chis[i], chis[i + 1]
        if a == 0.0:
            brackets.append((xs[i], xs[i]))
            roots.append(xs[i])
        elif a * b < 0:
            brackets.append((xs[i], xs[i + 1]))
            roots.append(brentq(f, xs[i], xs[i + 1], xtol=xtol * K, rtol=1e-15))

    scale = np.max(np.abs(chis))
    tangencies = []
    for i in range(1, grid_n - 1):
        m = abs(chis[i])
        if (m < 0.01 * scale and m <= abs(chis[i - 1]) and m <= abs(chis[i + 1])
                and chis[i - 1] * chis[i] > 0 and chis[i] * chis[i + 1] > 0):
            tangencies.append(float(xs[i]))
    return ChiScan(x=xs, chi=chis, lam=lams, brackets=brackets, roots=roots,
                   tangencies=tangencies)


def _label(lam, tol_lam):
    if lam < -tol_lam:
        return Stability.STABLE
    if lam > tol_lam:
        return Stability.UNSTABLE
    return Stability.NEUTRAL


def _convexity_condition(spec, shape, n=200):
    if shape.x_hat is None:
        return False
    xs = np.linspace(shape.x_hat, spec.K, n + 2)[1:-1]
    return all(_isocline(spec, x)[2] < 0 for x in xs)


def classify_roots(spec: ModelSpec, roots, tol: float = DEFAULT_TOL,
                   tol_lambda: float = LAMBDA_NEUTRAL_TOL,
                   shape: Optional[IsoclineShape] = None) -> AnalysisReport:
    """Attach lambda and a stability label to each root and form a verdict.

    ``roots`` may be plain abscissae or :class:`ChiRoot` records.  The
    verdict is GloballyStableEquilibrium when there are no roots and
    ``F'(0) != 0``; NOscillations(n) when every label is decisive and
    adjacent labels alternate; Inconclusive otherwise.
    """
    shape = shape if shape is not None else classify_isocline(spec)
    labelled, configs = [], []
    for r in roots:
        x0 = r.x0 if isinstance(r, ChiRoot) else float(r)
        orbit = integrate_fast_orbit(spec, x0, tol)
        labelled.append(ChiRoot(x0, orbit.chi, orbit.lam, _label(orbit.lam, tol_lambda)))
        configs.append(singular_configuration(spec, x0, tol, orbit=orbit))

    fp0 = shape.f_prime_at_zero
    degenerate = any("boundary-degenerate" in n for n in shape.notes)
    if not labelled:
        verdict = (Verdict.INCONCLUSIVE if degenerate or fp0 == 0.0
                   else Verdict.GLOBALLY_STABLE_EQUILIBRIUM)
        n = 0 if verdict is Verdict.GLOBALLY_STABLE_EQUILIBRIUM else None
    else:
        decisive = all(r.stability is not Stability.NEUTRAL for r in labelled)
        alternating = all(a.lam * b.lam < 0 for a, b in zip(labelled, labelled[1:]))
        if decisive and alternating and not degenerate:
            verdict, n = Verdict.N_OSCILLATIONS, len(labelled)
        else:
            verdict, n = Verdict.INCONCLUSIVE, None

    return AnalysisReport(shape=shape, roots=labelled, verdict=verdict, n_oscillations=n,
                          configurations=configs,
                          consistency=_consistency(spec, shape, labelled))


def _consistency(spec, shape, roots):
    """Compare root counts and lambda signs against the root-count bounds for the isocline shape."""
    notes = []
    lams = [r.lam for r in roots]
    if shape.hump_class is HumpClass.ONE_HUMP:
        ok = len(roots) == 1 and lams[0] < 0
        notes.append(f"one-hump: expect exactly one root with lambda<0: "
                     f"{'ok' if ok else 'VIOLATED'} ({len(roots)} roots)")
        if roots and shape.x_hat is not None and not roots[0].x0 > shape.x_hat:
            notes.append("one-hump: root not in (x_hat, K): VIOLATED")
    elif shape.hump_class is HumpClass.TWO_HUMP:
        convex = _convexity_condition(spec, shape)
        notes.append(f"two-hump: F''<0 on (x_hat, K): {convex}")
        if convex:
            ok = len(roots) <= 3
            notes.append(f"two-hump: at most three roots: {'ok' if ok else 'VIOLATED'}")
            if len(roots) == 1:
                notes.append("two-hump: single root requires lambda=0 (neutral band): "
                             + ("ok" if abs(lams[0]) <= LAMBDA_NEUTRAL_TOL else "VIOLATED"))
            if len(roots) == 2:
                ok = lams[0] >= 0 >= lams[1] and lams[0] != lams[1]
                notes.append(f"two-hump: lambda(x0) >= 0 >= lambda(x1): "
                             f"{'ok' if ok else 'VIOLATED'}")
            if len(roots) == 3:
                ok = (lams[0] > LAMBDA_NEUTRAL_TOL and abs(lams[1]) <= LAMBDA_NEUTRAL_TOL
                      and lams[2] < -LAMBDA_NEUTRAL_TOL)
                notes.append(f"two-hump: lambda(x0) > lambda(x1) = 0 > lambda(x2): "
                             f"{'ok' if ok else 'VIOLATED'}")
    if shape.f_prime_at_zero > 0 and shape.x_bar is not None:
        ok = all(r.x0 > shape.x_bar for r in roots)
        notes.append(f"roots lie in (x_bar, K): {'ok' if ok else 'VIOLATED'}")
    return notes


# --------------------------------------------------------------------------
# Holling IV enrichment threshold

def _h4_extrema(kappa):
    root = math.sqrt(1.0 - 3.0 / kappa)
    return (1.0 - root) / 3.0, (1.0 + root) / 3.0


def _F0(X, kappa, yb):
    return yb * (1.0 - X) * (kappa * X * X + 1.0)


def holling4_q(kappa: float, r: float = 1.0, m: float = 1.0) -> float:
    """``H(F(x_hat)) - H(F(x_check))`` for Holling IV, in units where ``X = x/K``."""
    if kappa <= 3.0:
        raise ValueError("the Holling IV isocline has two humps only for kappa > 3")
    yb = r / m
    Xc, Xh = _h4_extrema(kappa)
    return _H_scalar(yb, _F0(Xh, kappa, yb)) - _H_scalar(yb, _F0(Xc, kappa, yb))


def holling4_kappa_star(tol: float = 1e-10, r: float = 1.0, m: float = 1.0) -> float:
    """Enrichment threshold ``kappa* = a K**2`` for the Holling IV response.

    Bisection of ``q(kappa)`` on ``[4, kappa_hi]``; ``q(4) < 0`` and the upper
    end is doubled from 8 until ``q > 0``.
    """
    q = lambda k: holling4_q(k, r, m)
    lo, hi = 4.0, 8.0
    if not q(lo) < 0:
        raise RuntimeError("q(4) is not negative")
    while q(hi) <= 0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e6:
            raise RuntimeError("kappa* bracket expansion exceeded 1e6")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if q(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# --------------------------------------------------------------------------
# small-c limits

@dataclass(frozen=True)
class SmallCLimits:
    kind: HumpClass
    x_lower: Optional[float] = None
    x_sharp_lo: Optional[float] = None
    x_sharp_hi: Optional[float] = None
    exists_two_roots: Optional[bool] = None

    def to_dict(self):
        return {"kind": self.kind.value, "x_lower": self.x_lower,
                "x_sharp_lo": self.x_sharp_lo, "x_sharp_hi": self.x_sharp_hi,
                "exists_two_roots": self.exists_two_roots}


def _solve_F(spec, target, lo, hi):
    return brentq(lambda x: _isocline(spec, x)[0] - target, lo, hi, xtol=1e-14 * spec.K,
                  rtol=1e-15)


def small_c_limits(spec: ModelSpec, shape: Optional[IsoclineShape] = None) -> SmallCLimits:
    """Limits of the chi roots as the yield rate c tends to 0.

    One hump: the point ``x_lower`` in (x_hat, K) with
    ``H(F(x_lower)) = H(F(x_hat))``.  Two humps: when
    ``H(F(x_hat)) > H(F(x_check))``, the points ``x_sharp_lo`` in
    (x_check, x_hat) and ``x_sharp_hi`` in (x_hat, K) with
    ``H(F(x_sharp_lo)) = H(F(x_check))`` and ``H(F(x_sharp_hi)) = H(F(x_hat))``.
    """
    shape = shape if shape is not None else classify_isocline(spec)
    yb = ybar(spec)
    F = lambda x: _isocline(spec, x)[0]
    K = spec.K
    if shape.hump_class is HumpClass.ONE_HUMP:
        fh = F(shape.x_hat)
        target = H_conjugate(yb, fh) if fh != yb else yb
        return SmallCLimits(HumpClass.ONE_HUMP, x_lower=_solve_F(spec, target, shape.x_hat, K))
    if shape.hump_class is HumpClass.TWO_HUMP:
        fh, fc = F(shape.x_hat), F(shape.x_check)
        if not _H_scalar(yb, fh) > _H_scalar(yb, fc):
            return SmallCLimits(HumpClass.TWO_HUMP, exists_two_roots=False)
        lo = _solve_F(spec, H_conjugate(yb, fc), shape.x_check, shape.x_hat)
        hi = _solve_F(spec, H_conjugate(yb, fh), shape.x_hat, K)
        return SmallCLimits(HumpClass.TWO_HUMP, x_sharp_lo=lo, x_sharp_hi=hi,
                            exists_two_roots=True)
    raise ValueError(f"small-c limits need a one- or two-hump isocline, got "
                     f"{shape.hump_class.value}")


def predict_dynamics(spec: ModelSpec, grid_n: int = 200, tol: float = DEFAULT_TOL,
                     tol_lambda: float = LAMBDA_NEUTRAL_TOL, executor=None) -> AnalysisReport:
    """Classify the isocline, scan chi, and label the roots."""
    shape = classify_isocline(spec)
    scan = scan_chi_roots(spec, grid_n=grid_n, tol=tol, executor=executor)
    report = classify_roots(spec, scan.roots, tol=tol, tol_lambda=tol_lambda, shape=shape)
    notes = list(report.consistency)
    if shape.hump_class is HumpClass.UNSUPPORTED:
        notes.append("isocline shape outside the one- and two-hump classes")
    return AnalysisReport(shape=shape, roots=report.roots, verdict=report.verdict,
                          n_oscillations=report.n_oscillations,
                          configurations=report.configurations, consistency=notes,
                          tangencies=scan.tangencies)
