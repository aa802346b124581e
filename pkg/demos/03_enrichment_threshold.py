"""The enrichment threshold for Holling IV.

With p(x) = m x / (a + x^2) the isocline shape depends only on
kappa = a K^2. Below kappa* the singular system predicts no oscillations;
above it two cycles appear, an unstable inner one and a stable outer one.
"""

import numpy as np

from relaxosc import (find_cycles, holling4_kappa_star, holling4_q, instances,
                      predict_dynamics, small_c_limits)

ks = holling4_kappa_star()
print(f"q(4) = {holling4_q(4.0):.6e} < 0, kappa* = {ks:.12f}")

# The small-c criterion flips exactly at kappa*. At finite c the flip of the
# actual root count comes a bit earlier.
for kappa in np.linspace(4.0, 5.0, 5):
    spec = instances.holling4_at_kappa(kappa)
    two = small_c_limits(spec).exists_two_roots
    rep = predict_dynamics(spec, grid_n=100)
    print(f"kappa = {kappa:.2f}: small-c two roots {two!s:5}  c = {spec.c}: {rep.verdict_label}")

# Above the threshold the full system shows both cycles.
spec = instances.holling4_at_kappa(1.2 * ks)
rep = predict_dynamics(spec)
for cycle in find_cycles(spec, 1e-2, rep):
    print(f"cycle at x = {cycle.x_section:.5f}: {cycle.stability.value}, "
          f"mu * c = {cycle.floquet_integral * spec.c:+.4f}, "
          f"lambda = {cycle.predicted_lambda:+.4f}")
