"""Named model instances used throughout the checks, tests and demos."""

from __future__ import annotations

import math

from .model import ModelSpec

__all__ = ["INSTANCES", "holling4_at_kappa", "get"]

INSTANCES = {
    # one hump, a < K
    "holling2": ModelSpec("holling2", r=2, K=3, c=0.5, m=1.5, a=1),
    # F decreasing on (0, K): a > K
    "holling2-a-gt-k": ModelSpec("holling2", r=2, K=1, c=0.5, m=1.5, a=3),
    # two humps, two roots at small c
    "holling4": ModelSpec("holling4", r=4, K=3, c=0.1, m=2, a=0.75),
    "ivlev-ak3": ModelSpec("ivlev", r=1, K=3, c=0.5, m=1, a=1),
    "ivlev-ak1.5": ModelSpec("ivlev", r=1, K=3, c=0.5, m=1, a=0.5),
    "log": ModelSpec("log", r=1, K=1, c=0.5, m=1, a=5),
    # b > 1/K makes the generalized isocline one-humped
    "gen-holling4": ModelSpec("gen-holling4", r=1, K=2, c=0.5, m=1, a=1, b=1),
}


def holling4_at_kappa(kappa: float, r: float = 4.0, m: float = 2.0, a: float = 0.75,
                      c: float = 0.1) -> ModelSpec:
    """Holling IV instance with ``a K**2 = kappa`` (``a`` held fixed)."""
    return ModelSpec("holling4", r=r, K=math.sqrt(kappa / a), c=c, m=m, a=a)


def get(name: str) -> ModelSpec:
    try:
        return INSTANCES[name]
    except KeyError:
        raise KeyError(f"unknown instance {name!r}; known: {', '.join(INSTANCES)}") from None
