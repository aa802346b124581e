"""Gause-type predator-prey models: functional responses, the prey isocline
and the energy-like function H.

The prey isocline is written as ``F(x) = r (1 - x/K) G(x)`` with
``G(x) = x / p(x)``.  ``G`` is analytic at ``x = 0`` for every built-in
family, which removes the 0/0 in ``r x (1 - x/K) / p(x)`` exactly and gives
``F(0) = r / p'(0)`` without any numerical limit.
"""

from __future__ import annotations

import enum
import math
import re
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "Family",
    "HumpClass",
    "ModelSpec",
    "IsoclineShape",
    "response_eval",
    "isocline_eval",
    "ybar",
    "classify_isocline",
    "H_eval",
    "H_conjugate",
    "load_config",
    "dump_config",
    "parse_config",
]


class Family(str, enum.Enum):
    HOLLING2 = "holling2"
    GEN_HOLLING4 = "gen-holling4"
    HOLLING4 = "holling4"
    IVLEV = "ivlev"
    LOG = "log"
    CUSTOM = "custom"


class HumpClass(str, enum.Enum):
    MONOTONE = "Monotone"
    ONE_HUMP = "OneHump"
    TWO_HUMP = "TwoHump"
    UNSUPPORTED = "Unsupported"


_ALIASES = {
    "hollingii": Family.HOLLING2,
    "holling2": Family.HOLLING2,
    "holling-ii": Family.HOLLING2,
    "hollingiv": Family.HOLLING4,
    "holling4": Family.HOLLING4,
    "holling-iv": Family.HOLLING4,
    "generalizedhollingiv": Family.GEN_HOLLING4,
    "gen-holling4": Family.GEN_HOLLING4,
    "genholling4": Family.GEN_HOLLING4,
    "ivlev": Family.IVLEV,
    "log": Family.LOG,
    "custom": Family.CUSTOM,
}


def _family(value) -> Family:
    if isinstance(value, Family):
        return value
    key = str(value).strip().lower().replace("_", "-")
    if key in _ALIASES:
        return _ALIASES[key]
    key = key.replace("-", "")
    if key in _ALIASES:
        return _ALIASES[key]
    raise ValueError(f"unknown response family {value!r}")


@dataclass(frozen=True)
class ModelSpec:
    """One predator-prey instance.

    ``x' = r x (1 - x/K) - y p(x)``, ``y' = y (-eps + c p(x))``.  The death
    rate ``eps`` is not part of the model; it is passed to each simulation.

    For ``Family.CUSTOM`` supply ``p`` and ``dp`` (the response and its
    derivative) as callables of a float; ``m``, ``a`` and ``b`` are ignored.
    """

    family: Family
    r: float
    K: float
    c: float
    m: float = 1.0
    a: float = 1.0
    b: float = 0.0
    p: Optional[Callable[[float], float]] = field(default=None, compare=False, repr=False)
    dp: Optional[Callable[[float], float]] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "family", _family(self.family))
        for name in ("r", "K", "c"):
            v = float(getattr(self, name))
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be a finite positive number, got {v}")
            object.__setattr__(self, name, v)
        for name in ("m", "a", "b"):
            object.__setattr__(self, name, float(getattr(self, name)))
        fam = self.family
        if fam is Family.CUSTOM:
            if self.p is None or self.dp is None:
                raise ValueError("custom family requires both p and dp callables")
            d0 = float(self.dp(0.0))
            if abs(float(self.p(0.0))) > 1e-14 or not d0 > 0:
                raise ValueError("custom response must satisfy p(0)=0 and p'(0)>0")
            return
        if not self.m > 0:
            raise ValueError(f"m must be positive, got {self.m}")
        if not self.a > 0:
            raise ValueError(f"a must be positive, got {self.a}")
        if fam is Family.GEN_HOLLING4:
            if not self.b > -2.0 * math.sqrt(self.a):
                raise ValueError("gen-holling4 requires b > -2 sqrt(a) so that p(x) > 0")
        elif self.b != 0.0:
            raise ValueError(f"parameter b is only used by gen-holling4, got b={self.b}")

    def with_(self, **changes) -> "ModelSpec":
        return replace(self, **changes)

    @property
    def kappa(self) -> float:
        """Enrichment parameter ``a K**2`` (meaningful for Holling IV)."""
        return self.a * self.K**2


# --------------------------------------------------------------------------
# functional responses

def _bern(z):
    """B(z) = z / (1 - exp(-z)) and its first two derivatives."""
    if abs(z) < 1e-3:
        z2 = z * z
        return (1.0 + z / 2 + z2 / 12 - z2 * z2 / 720,
                0.5 + z / 6 - z2 * z / 180,
                1.0 / 6 - z2 / 60 + z2 * z2 / 1008)
    e = math.exp(-z)
    d = -math.expm1(-z)
    B = z / d
    B1 = (d - z * e) / (d * d)
    B2 = e * (z * d - 2 * d + 2 * z * e) / d**3
    return B, B1, B2


def _logratio(z):
    """L(z) = z / log(1 + z) and its first two derivatives."""
    if abs(z) < 1e-3:
        z2 = z * z
        return (1.0 + z / 2 - z2 / 12 + z2 * z / 24 - 19 * z2 * z2 / 720,
                0.5 - z / 6 + z2 / 8 - 19 * z2 * z / 180,
                -1.0 / 6 + z / 4 - 19 * z2 / 60 + 3 * z2 * z / 8)
    l = math.log1p(z)
    l1 = 1.0 / (1.0 + z)
    l2 = -l1 * l1
    n = l - z * l1
    L = z / l
    L1 = n / (l * l)
    L2 = (-z * l2 * l - 2 * l1 * n) / l**3
    return L, L1, L2


def response_eval(spec: ModelSpec, x: float) -> tuple[float, float]:
    """Return ``(p(x), p'(x))``."""
    if x < 0:
        raise ValueError(f"response_eval requires x >= 0, got {x}")
    return _response(spec, x)


def _response(spec, x):
    fam, m, a = spec.family, spec.m, spec.a
    if fam is Family.HOLLING2:
        return m * x / (a + x), m * a / (a + x) ** 2
    if fam is Family.HOLLING4 or fam is Family.GEN_HOLLING4:
        den = a * x * x + spec.b * x + 1.0
        return m * x / den, m * (1.0 - a * x * x) / (den * den)
    if fam is Family.IVLEV:
        return -m * math.expm1(-a * x), m * a * math.exp(-a * x)
    if fam is Family.LOG:
        return m * math.log1p(a * x), m * a / (1.0 + a * x)
    return float(spec.p(x)), float(spec.dp(x))


def _G(spec, x):
    """G(x) = x / p(x) with derivatives, analytic through x = 0."""
    fam, m, a = spec.family, spec.m, spec.a
    if fam is Family.HOLLING2:
        return (a + x) / m, 1.0 / m, 0.0
    if fam is Family.HOLLING4 or fam is Family.GEN_HOLLING4:
        return (a * x * x + spec.b * x + 1.0) / m, (2 * a * x + spec.b) / m, 2 * a / m
    if fam is Family.IVLEV:
        B, B1, B2 = _bern(a * x)
        return B / (m * a), B1 / m, a * B2 / m
    if fam is Family.LOG:
        L, L1, L2 = _logratio(a * x)
        return L / (m * a), L1 / m, a * L2 / m
    raise AssertionError("custom family has no analytic G")


def _F_custom(spec, x):
    if x == 0.0:
        return spec.r / float(spec.dp(0.0))
    return spec.r * x * (1.0 - x / spec.K) / float(spec.p(x))


def isocline_eval(spec: ModelSpec, x: float) -> tuple[float, float, float]:
    """Return ``(F(x), F'(x), F''(x))`` on ``[0, K]``.

    Built-in families use closed forms.  Custom responses use central
    differences with step ``1e-6 K`` for ``F'`` and ``1e-4 K`` for ``F''``,
    switching to one-sided stencils within a step of the interval ends.
    """
    if x < 0 or x > spec.K * (1 + 1e-12):
        raise ValueError(f"isocline_eval requires 0 <= x <= K, got {x}")
    return _isocline(spec, x)


def _isocline(spec, x):
    """Unchecked isocline; built-ins extend analytically past [0, K]."""
    if spec.family is Family.CUSTOM:
        return _isocline_custom(spec, x)
    r, K = spec.r, spec.K
    G, G1, G2 = _G(spec, x)
    w = 1.0 - x / K
    return r * w * G, r * (w * G1 - G / K), r * (w * G2 - 2.0 * G1 / K)


def _isocline_custom(spec, x):
    K = spec.K
    if x < 0:
        # linear extension; only reached inside overshooting integrator steps
        F0, d0, _ = _isocline_custom(spec, 0.0)
        return F0 + d0 * x, d0, 0.0
    f = lambda t: _F_custom(spec, t)
    h1, h2 = 1e-6 * K, 1e-4 * K
    lo, hi = 0.0, max(K, x)
    if x - h1 < lo:
        d1 = (-3 * f(x) + 4 * f(x + h1) - f(x + 2 * h1)) / (2 * h1)
    elif x + h1 > hi:
        d1 = (3 * f(x) - 4 * f(x - h1) + f(x - 2 * h1)) / (2 * h1)
    else:
        d1 = (f(x + h1) - f(x - h1)) / (2 * h1)
    if x - h2 < lo:
        d2 = (2 * f(x) - 5 * f(x + h2) + 4 * f(x + 2 * h2) - f(x + 3 * h2)) / h2**2
    elif x + h2 > hi:
        d2 = (2 * f(x) - 5 * f(x - h2) + 4 * f(x - 2 * h2) - f(x - 3 * h2)) / h2**2
    else:
        d2 = (f(x + h2) - 2 * f(x) + f(x - h2)) / h2**2
    return f(x), d1, d2


def _x_over_p(spec, x):
    """G(x) = x / p(x) for the full-system vector field, valid for x >= 0."""
    if spec.family is not Family.CUSTOM:
        return _G(spec, x)[0]
    if x < 1e-12 * spec.K:
        return 1.0 / float(spec.dp(0.0))
    return x / float(spec.p(x))


def ybar(spec: ModelSpec) -> float:
    """Reference predator level ``F(0) = r / p'(0)``."""
    if spec.family is Family.CUSTOM:
        return spec.r / float(spec.dp(0.0))
    return spec.r * _G(spec, 0.0)[0]


# --------------------------------------------------------------------------
# H and its conjugate

def H_eval(spec_or_ybar, y):
    """``H(y) = y - ybar - ybar log(y / ybar)``; accepts scalars or arrays."""
    yb = _yb(spec_or_ybar)
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("H is defined for y > 0 only")
    out = y - yb - yb * np.log(y / yb)
    return float(out) if out.ndim == 0 else out


def _yb(spec_or_ybar):
    return ybar(spec_or_ybar) if isinstance(spec_or_ybar, ModelSpec) else float(spec_or_ybar)


def _H_scalar(yb, y):
    return y - yb - yb * math.log(y / yb)


def H_conjugate(spec_or_ybar, y: float) -> float:
    """The point on the other side of ``ybar`` with the same value of H.

    Solved by bisection on the monotone branch of H; the bracket grows
    geometrically away from ``ybar`` until it contains the target level.
    """
    yb = _yb(spec_or_ybar)
    y = float(y)
    if y <= 0:
        raise ValueError("H_conjugate requires y > 0")
    if y == yb:
        return yb
    level = _H_scalar(yb, y)
    g = lambda t: _H_scalar(yb, t) - level
    if y > yb:
        lo, hi = 0.5 * yb, yb
        while g(lo) < 0:
            hi, lo = lo, lo * 0.5
            if lo < 1e-300:
                return 0.0
    else:
        lo, hi = yb, 2.0 * yb
        while g(hi) < 0:
            lo, hi = hi, hi * 2.0
    return brentq(g, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=500)


# --------------------------------------------------------------------------
# isocline shape

@dataclass(frozen=True)
class IsoclineShape:
    """Hump structure of F on (0, K).

    ``x_hat`` is the interior maximum, ``x_check`` the interior minimum
    (TwoHump only), ``x_bar`` the first return of F to the level F(0) past
    the first extremum, and ``x_tilde`` the point right of ``x_hat`` where F
    drops back to ``F(x_check)``.
    """

    hump_class: HumpClass
    f_prime_at_zero: float
    x_hat: Optional[float] = None
    x_check: Optional[float] = None
    x_bar: Optional[float] = None
    x_tilde: Optional[float] = None
    extrema: tuple = ()
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {
            "hump_class": self.hump_class.value,
            "f_prime_at_zero": self.f_prime_at_zero,
            "x_hat": self.x_hat,
            "x_check": self.x_check,
            "x_bar": self.x_bar,
            "x_tilde": self.x_tilde,
            "extrema": [list(e) for e in self.extrema],
            "notes": list(self.notes),
        }


def classify_isocline(spec: ModelSpec, grid_n: int = 400, tol: float = 1e-12) -> IsoclineShape:
    """Locate the interior extrema of F and classify its hump structure.

    Sign changes of F' are bracketed on a uniform grid over
    ``(1e-6 K, K - 1e-6 K)`` and each root refined to ``tol * K``.
    """
    if grid_n < 100:
        raise ValueError("grid_n must be at least 100")
    K = spec.K
    dF = lambda x: _isocline(spec, x)[1]
    xs = np.linspace(1e-6 * K, K * (1 - 1e-6), grid_n)
    ds = np.array([dF(x) for x in xs])
    notes = []
    fp0 = dF(0.0)
    if abs(fp0) <= 1e-12 * max(1.0, ybar(spec) / K):
        notes.append("boundary-degenerate: F'(0) = 0")

    extrema = []
    for i in range(grid_n - 1):
        d0, d1 = ds[i], ds[i + 1]
        if d0 == 0.0:
            continue
        if d0 * d1 < 0 or (d1 == 0.0 and i + 2 < grid_n and d0 * ds[i + 2] < 0):
            hi = xs[i + 1] if d1 != 0.0 else xs[i + 2]
            root = brentq(dF, xs[i], hi, xtol=tol * K, rtol=4 * np.finfo(float).eps)
            kind = "max" if d0 > 0 else "min"
            extrema.append((root, kind))
            # a further sign change inside the same cell would be invisible
            probe = np.linspace(xs[i], hi, 9)
            signs = np.sign([dF(p) for p in probe])
            flips = np.sum(np.diff(signs[signs != 0]) != 0)
            if flips > 1:
                warnings.warn(f"grid_n={grid_n} may be too coarse near x={root:.6g}",
                              RuntimeWarning, stacklevel=2)
                notes.append(f"grid-resolution: multiple sign changes near x={root:.6g}")

    F = lambda x: _isocline(spec, x)[0]
    F0 = ybar(spec)
    kinds = [k for _, k in extrema]
    shape = dict(f_prime_at_zero=fp0, extrema=tuple(extrema))

    if not extrema:
        return IsoclineShape(HumpClass.MONOTONE, notes=tuple(notes), **shape)
    if kinds == ["max"]:
        xh = extrema[0][0]
        xb = None
        if F(xh) > F0 and F0 > 0:
            xb = brentq(lambda x: F(x) - F0, xh, K, xtol=tol * K)
        return IsoclineShape(HumpClass.ONE_HUMP, x_hat=xh, x_bar=xb,
                             notes=tuple(notes), **shape)
    if kinds == ["min", "max"]:
        xc, xh = extrema[0][0], extrema[1][0]
        xb = None
        if F(xh) > F0:
            xb = brentq(lambda x: F(x) - F0, xc, xh, xtol=tol * K)
        fc = F(xc)
        xt = brentq(lambda x: F(x) - fc, xh, K, xtol=tol * K)
        return IsoclineShape(HumpClass.TWO_HUMP, x_hat=xh, x_check=xc, x_bar=xb,
                             x_tilde=xt, notes=tuple(notes), **shape)
    notes.append(f"unsupported extremum pattern {kinds}")
    return IsoclineShape(HumpClass.UNSUPPORTED, notes=tuple(notes), **shape)


# --------------------------------------------------------------------------
# flat key = value configuration files

_CONFIG_KEYS = ("family", "r", "k", "c", "m", "a", "b")
_DECIMAL = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)$")


class ConfigError(ValueError):
    """Malformed model configuration; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def parse_config(text: str, allowed_extra: tuple = ()) -> dict:
    """Parse ``key = value`` lines into a dict of raw strings.

    Blank lines and ``#`` comments are skipped.  Unknown keys raise
    :class:`ConfigError` unless listed in ``allowed_extra``.
    """
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower().replace("-", "_")
        if key not in _CONFIG_KEYS and key not in allowed_extra:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        if key != "family" and key in _CONFIG_KEYS and not _DECIMAL.match(value):
            raise ConfigError(f"value for {key!r} is not a decimal number: {value!r}", lineno)
        out[key] = (value, lineno)
    return out


def spec_from_mapping(values: dict) -> ModelSpec:
    """Build a ModelSpec from config-style keys (``family r k c m a b``)."""
    def num(key, default=None):
        v = values.get(key, default)
        if v is None:
            raise ConfigError(f"missing required key {key!r}")
        return float(v)

    fam = values.get("family")
    if fam is None:
        raise ConfigError("missing required key 'family'")
    fam = _family(fam)
    if fam is Family.CUSTOM:
        raise ConfigError("custom responses cannot be read from a config file")
    return ModelSpec(fam, r=num("r"), K=num("k"), c=num("c"), m=num("m", 1.0),
                     a=num("a", 1.0), b=num("b", 0.0))


def load_config(path) -> ModelSpec:
    with open(path) as fh:
        parsed = parse_config(fh.read())
    try:
        return spec_from_mapping({k: v for k, (v, _) in parsed.items()})
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def dump_config(spec: ModelSpec) -> str:
    if spec.family is Family.CUSTOM:
        raise ValueError("custom responses cannot be serialized")
    vals = [("family", spec.family.value), ("r", spec.r), ("k", spec.K), ("c", spec.c),
            ("m", spec.m), ("a", spec.a)]
    if spec.family is Family.GEN_HOLLING4:
        vals.append(("b", spec.b))
    fmt = lambda v: v if isinstance(v, str) else np.format_float_positional(v, trim="-")
    return "".join(f"{k} = {fmt(v)}\n" for k, v in vals)
