"""Acceptance checks: each one recomputes a claim and compares it to a
reference at a fixed tolerance.

Checks are plain functions registered in :data:`CHECKS`; they return a
:class:`CheckResult` and never raise on a failed comparison.  The optional
``fault`` argument of :func:`run_checks` injects a known defect so the
harness itself can be tested.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from . import instances
from .criteria import Stability, Verdict, holling4_kappa_star, holling4_q, predict_dynamics
from .fast_orbit import chi_crosscheck, integrate_fast_orbit
from .full_sim import empirical_entry_exit, find_cycles
from .model import H_conjugate, HumpClass, _H_scalar, classify_isocline, ybar
from .oracles import lambda_xform, rk4_fast_orbit

__all__ = ["CheckResult", "CHECKS", "FAULTS", "run_checks", "format_report"]

FAULTS = ("wrong-sign-lambda",)

# integrator tolerance for full-system runs where the period law is measured
SIM_RTOL = 1e-8


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    values: dict


@dataclass
class _Context:
    fault: Optional[str] = None

    def lam(self, value):
        return -value if self.fault == "wrong-sign-lambda" else value


@lru_cache(maxsize=None)
def _predict(spec):
    return predict_dynamics(spec)


@lru_cache(maxsize=None)
def _cycles(spec, eps):
    return tuple(find_cycles(spec, eps, _predict(spec), rtol=SIM_RTOL))


def _result(name, failures, detail, values):
    if failures:
        detail = "; ".join(failures)
    return CheckResult(name, not failures, detail, values)


# --------------------------------------------------------------------------

def check_kappa4_identity(ctx):
    """F0(X_hat(4), 4) equals ybar to 1e-12 relative, and q(4) < 0."""
    X_hat = (1.0 + math.sqrt(1.0 - 3.0 / 4.0)) / 3.0
    F0 = (1.0 - X_hat) * (4.0 * X_hat**2 + 1.0)  # in units of ybar
    q4 = holling4_q(4.0)
    fails = []
    if not abs(F0 - 1.0) <= 1e-12:
        fails.append(f"F0(X_hat(4))/ybar - 1 = {F0 - 1.0:.3g}")
    if not q4 < 0:
        fails.append(f"q(4) = {q4} is not negative")
    return _result("kappa4-identity", fails, f"F0/ybar-1={F0 - 1.0:.2e}, q(4)={q4:.6g}",
                   {"F0_rel_err": F0 - 1.0, "q4": q4})


def check_kappa_star(ctx):
    """kappa* > 4, stable across tolerances and (r, m); two cycles above, none below."""
    ks = holling4_kappa_star(tol=1e-10)
    ks_fine = holling4_kappa_star(tol=1e-12)
    ks_scaled = holling4_kappa_star(tol=1e-10, r=4.0, m=2.0)
    fails = []
    if not ks > 4:
        fails.append(f"kappa*={ks} not > 4")
    if abs(ks - ks_fine) > 1e-8:
        fails.append(f"kappa* changes by {abs(ks - ks_fine):.3g} across tol")
    if abs(ks - ks_scaled) > 1e-8:
        fails.append(f"kappa* changes by {abs(ks - ks_scaled):.3g} across (r, m)")
    hi = instances.holling4_at_kappa(1.2 * ks)
    lo = instances.holling4_at_kappa(max(3.5, 0.8 * ks))
    n_hi = len(_cycles(hi, 1e-2))
    n_lo = len(_cycles(lo, 1e-2))
    if n_hi != 2:
        fails.append(f"{n_hi} cycles at 1.2 kappa*, expected 2")
    if n_lo != 0:
        fails.append(f"{n_lo} cycles at max(3.5, 0.8 kappa*), expected 0")
    return _result("kappa-star", fails,
                   f"kappa*={ks:.10f}, cycles: {n_hi} above, {n_lo} below",
                   {"kappa_star": ks, "cycles_above": n_hi, "cycles_below": n_lo})


def _holling2_cycle(eps):
    spec = instances.get("holling2")
    rep = _predict(spec)
    (cyc,) = [c for c in _cycles(spec, eps) if c.stability is Stability.STABLE]
    return spec, rep.configurations[0], cyc


def check_period_law(ctx):
    """eps T / log(y_omega / y_alpha) -> 1: within 0.10 at 1e-2, 0.05 at 1e-3."""
    errs = {}
    for eps in (1e-2, 1e-3):
        _, cfg, cyc = _holling2_cycle(eps)
        errs[eps] = abs(eps * cyc.period / cfg.period_coefficient - 1.0)
    fails = []
    if not errs[1e-2] <= 0.10:
        fails.append(f"period-law error {errs[1e-2]:.4f} > 0.10 at eps=1e-2")
    if not errs[1e-3] <= 0.05:
        fails.append(f"period-law error {errs[1e-3]:.4f} > 0.05 at eps=1e-3")
    if not errs[1e-3] < errs[1e-2]:
        fails.append("period-law error does not decrease")
    return _result("period-law", fails,
                   f"|eps T/log(yw/ya) - 1| = {errs[1e-2]:.4g} (1e-2), {errs[1e-3]:.4g} (1e-3)",
                   {"err_1e-2": errs[1e-2], "err_1e-3": errs[1e-3]})


def check_cycle_location(ctx):
    """x_section -> x0 and Hausdorff distance -> 0 as eps decreases."""
    gaps, dists = {}, {}
    for eps in (1e-2, 1e-3):
        spec, cfg, cyc = _holling2_cycle(eps)
        gaps[eps] = abs(cyc.x_section - cfg.x0)
        dists[eps] = cyc.hausdorff_to_prediction
    fails = []
    if not gaps[1e-3] < gaps[1e-2]:
        fails.append("|x_section - x0| does not decrease")
    if not gaps[1e-3] <= 0.05 * spec.K:
        fails.append(f"|x_section - x0| = {gaps[1e-3]:.4g} > 0.05 K at eps=1e-3")
    if not dists[1e-3] < dists[1e-2]:
        fails.append("Hausdorff distance does not decrease")
    return _result("cycle-location", fails,
                   f"|x_section-x0| = {gaps[1e-2]:.3g} -> {gaps[1e-3]:.3g}; "
                   f"Hausdorff {dists[1e-2]:.3g} -> {dists[1e-3]:.3g}",
                   {"gap_1e-2": gaps[1e-2], "gap_1e-3": gaps[1e-3],
                    "hausdorff_1e-2": dists[1e-2], "hausdorff_1e-3": dists[1e-3]})


def check_stability_agreement(ctx):
    """sign(mu) = sign(lambda) at every cycle; |mu c - lambda| <= 0.25 |lambda| at 1e-3."""
    fails, rows = [], []
    for name in ("holling2", "holling4", "ivlev-ak3", "log"):
        spec = instances.get(name)
        for eps in (1e-2, 1e-3):
            cycles = _cycles(spec, eps)
            if not cycles:
                fails.append(f"{name} eps={eps:g}: no cycle detected")
            for cyc in cycles:
                if cyc.predicted_lambda is None:
                    fails.append(f"{name} eps={eps:g}: unpredicted cycle at {cyc.x_section:.6g}")
                    continue
                lam = ctx.lam(cyc.predicted_lambda)
                mu = cyc.floquet_integral
                rel = abs(mu * spec.c - lam) / abs(lam)
                rows.append((name, eps, cyc.x_section, mu * spec.c, lam, rel))
                if np.sign(mu) != np.sign(lam):
                    fails.append(f"{name} eps={eps:g} x={cyc.x_section:.6g}: "
                                 f"sign(mu)={np.sign(mu):+.0f} != sign(lambda)={np.sign(lam):+.0f}")
                if eps == 1e-3 and not rel <= 0.25:
                    fails.append(f"{name} eps=1e-3 x={cyc.x_section:.6g}: "
                                 f"|mu c - lambda|/|lambda| = {rel:.3f} > 0.25")
    worst = max((r[5] for r in rows if r[1] == 1e-3), default=float("nan"))
    return _result("stability-agreement", fails,
                   f"{len(rows)} cycles, signs agree, worst |mu c - lambda|/|lambda| "
                   f"at 1e-3 = {worst:.3g}", {"rows": rows})


def check_entry_exit(ctx):
    """Entry-exit ordinate vs H_conjugate at x = 1e-2 K: <= 2% ybar at 1e-3, shrinking."""
    spec = instances.get("holling2")
    yb = ybar(spec)
    y_in = _predict(spec).configurations[0].orbit.y_omega
    target = H_conjugate(spec, y_in)
    gaps = {eps: abs(empirical_entry_exit(spec, eps, y_in, delta=1e-2 * spec.K) - target) / yb
            for eps in (1e-2, 1e-3)}
    fails = []
    if not gaps[1e-3] <= 0.02:
        fails.append(f"gap {gaps[1e-3]:.3g} ybar > 2% at eps=1e-3")
    if not gaps[1e-3] < gaps[1e-2]:
        fails.append(f"gap does not shrink: {gaps[1e-2]:.3g} ybar at 1e-2, "
                     f"{gaps[1e-3]:.3g} ybar at 1e-3")
    return _result("entry-exit", fails,
                   f"gap/ybar = {gaps[1e-2]:.3g} (1e-2), {gaps[1e-3]:.3g} (1e-3)",
                   {"gap_1e-2": gaps[1e-2], "gap_1e-3": gaps[1e-3]})


def check_dichotomies(ctx):
    """Root counts, verdicts and cycle counts on the one-hump examples."""
    eps = 1e-2
    fails = []
    expect = {
        # name: (roots, verdict, stable cycles)
        "holling2-a-gt-k": (0, Verdict.GLOBALLY_STABLE_EQUILIBRIUM, 0),
        "holling2": (1, Verdict.N_OSCILLATIONS, 1),
        "ivlev-ak1.5": (0, Verdict.GLOBALLY_STABLE_EQUILIBRIUM, 0),
        "ivlev-ak3": (1, Verdict.N_OSCILLATIONS, 1),
        "gen-holling4": (1, Verdict.N_OSCILLATIONS, 1),
        "log": (1, Verdict.N_OSCILLATIONS, 1),
    }
    seen = []
    for name, (n_roots, verdict, n_cyc) in expect.items():
        spec = instances.get(name)
        rep = _predict(spec)
        cycles = _cycles(spec, eps)
        stable = [c for c in cycles if c.stability is Stability.STABLE]
        seen.append(f"{name}:{len(rep.roots)}r/{len(stable)}c")
        if len(rep.roots) != n_roots:
            fails.append(f"{name}: {len(rep.roots)} roots, expected {n_roots}")
        if rep.verdict is not verdict:
            fails.append(f"{name}: verdict {rep.verdict_label}, expected {verdict.value}")
        if len(stable) != n_cyc or len(cycles) != n_cyc:
            fails.append(f"{name}: {len(cycles)} cycles ({len(stable)} stable), expected {n_cyc}")
    return _result("dichotomies", fails, ", ".join(seen), {})


def check_invariants(ctx):
    """Endpoint ordering, cross-checks, involution, nesting, monotone lambda, bounds."""
    fails = []
    names = ("holling2", "holling2-a-gt-k", "holling4", "ivlev-ak3", "ivlev-ak1.5", "log",
             "gen-holling4")
    for name in names:
        spec = instances.get(name)
        yb = ybar(spec)
        for x0 in np.linspace(0.01, 0.99, 15) * spec.K:
            orb = integrate_fast_orbit(spec, x0)
            if not orb.y_alpha < yb < orb.y_omega:
                fails.append(f"{name} x0={x0:.4g}: y_alpha < ybar < y_omega violated")
            r_h, r_alt = chi_crosscheck(orb)
            scale = orb.tol_used * (1 + abs(orb.chi))
            if r_alt > 1e3 * scale or r_h > 1e3 * scale:
                fails.append(f"{name} x0={x0:.4g}: chi cross-check residuals {r_h:.3g}, {r_alt:.3g}")
    # involution of the conjugate map
    rng = np.random.default_rng(7)
    for y in rng.uniform(0.05, 20.0, 200):
        back = H_conjugate(1.0, H_conjugate(1.0, y))
        if abs(back - y) > 1e-10 * max(1.0, y):
            fails.append(f"H_conjugate involution off by {abs(back - y):.3g} at y={y:.6g}")
            break
    # nesting on (x_hat, K) for one-hump specs; chi limit near K
    for name in ("holling2", "ivlev-ak3", "log", "gen-holling4"):
        spec = instances.get(name)
        shape = classify_isocline(spec)
        xs = np.linspace(shape.x_hat, spec.K, 12)[1:-1]
        orbs = [integrate_fast_orbit(spec, x) for x in xs]
        ya = np.array([o.y_alpha for o in orbs])
        yw = np.array([o.y_omega for o in orbs])
        if not (np.all(np.diff(ya) < 0) and np.all(np.diff(yw) > 0)):
            fails.append(f"{name}: orbits on (x_hat, K) are not nested")
        c99 = integrate_fast_orbit(spec, 0.99 * spec.K).chi
        c999 = integrate_fast_orbit(spec, 0.999 * spec.K).chi
        if not c999 < c99 < 0:
            fails.append(f"{name}: chi(0.999K)={c999:.4g}, chi(0.99K)={c99:.4g}")
    # lambda decreasing on (x_hat, K) for the two-hump, F''<0 instance
    spec = instances.get("holling4")
    shape = classify_isocline(spec)
    xs = np.linspace(shape.x_hat, spec.K, 22)[1:-1]
    lams = np.array([integrate_fast_orbit(spec, x).lam for x in xs])
    if not np.all(np.diff(lams) < 0):
        fails.append("holling4: lambda not strictly decreasing on (x_hat, K)")
    # root-count bounds and lambda patterns, as reported by the classifier
    for name in names:
        rep = _predict(instances.get(name))
        bad = [n for n in rep.consistency if "VIOLATED" in n]
        if bad:
            fails.append(f"{name}: {bad[0]}")
        if rep.shape.hump_class is HumpClass.ONE_HUMP and len(rep.roots) != 1:
            fails.append(f"{name}: one-hump isocline with {len(rep.roots)} roots")
    return _result("invariants", fails, "all invariant suites hold", {})


# golden orbits: (instance, x0)
ORACLE_CASES = (
    ("holling2", 2.0),
    ("holling2", 2.441958838),
    ("holling4", 0.6973149),
    ("holling4", 2.7223973),
    ("ivlev-ak3", 2.0),
    ("log", 0.8),
)


def check_oracle_equivalence(ctx):
    """Adaptive fast orbits vs the fixed-step RK4 oracle to 1e-6 relative."""
    fails, worst = [], 0.0
    for name, x0 in ORACLE_CASES:
        spec = instances.get(name)
        fast = integrate_fast_orbit(spec, x0)
        ref = rk4_fast_orbit(spec, x0, h=1e-5)
        pairs = {
            "y_alpha": (fast.y_alpha, ref.y_alpha, abs(ref.y_alpha)),
            "y_omega": (fast.y_omega, ref.y_omega, abs(ref.y_omega)),
            # chi vanishes at the roots; measure it against 1 + |chi|
            "chi": (fast.chi, ref.chi, 1.0 + abs(ref.chi)),
            "lambda": (ctx.lam(fast.lam), ref.lam, abs(ref.lam)),
        }
        for key, (a, b, scale) in pairs.items():
            rel = abs(a - b) / scale
            worst = max(worst, rel)
            if rel > 1e-6:
                fails.append(f"{name} x0={x0}: {key} differs by {rel:.3g} relative")
    # second lambda oracle, x-parameterized branches, on the one-hump instance
    spec = instances.get("holling2")
    for x0 in (2.0, 2.441958838):
        lam_x, _, _ = lambda_xform(spec, x0)
        rel = abs(ctx.lam(integrate_fast_orbit(spec, x0).lam) - lam_x) / abs(lam_x)
        worst = max(worst, rel)
        if rel > 1e-6:
            fails.append(f"holling2 x0={x0}: lambda vs x-form oracle differs by {rel:.3g}")
    return _result("oracle-equivalence", fails, f"worst relative difference {worst:.2e}",
                   {"worst": worst})


CHECKS: dict[str, Callable] = {
    "kappa4-identity": check_kappa4_identity,
    "kappa-star": check_kappa_star,
    "period-law": check_period_law,
    "cycle-location": check_cycle_location,
    "stability-agreement": check_stability_agreement,
    "entry-exit": check_entry_exit,
    "dichotomies": check_dichotomies,
    "invariants": check_invariants,
    "oracle-equivalence": check_oracle_equivalence,
}


def run_checks(filter: Optional[str] = None, fault: Optional[str] = None) -> list[CheckResult]:
    """Run the registered checks whose names match the regex ``filter``."""
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; known: {', '.join(FAULTS)}")
    pattern = re.compile(filter) if filter else None
    ctx = _Context(fault=fault)
    out = []
    for name, fn in CHECKS.items():
        if pattern is not None and not pattern.search(name):
            continue
        out.append(fn(ctx))
    return out


def format_report(results) -> str:
    lines = [f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}" for r in results]
    n_pass = sum(r.passed for r in results)
    lines.append(f"{n_pass}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"
