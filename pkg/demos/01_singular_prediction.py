"""Predicting relaxation oscillations from the singular system.

A Holling II predator-prey model with a slow predator death rate is
reduced to its fast fibers. Each fast orbit leaving the prey isocline at
x0 gains or loses a Lyapunov-like quantity chi(x0); its zeros are the
candidate cycles and the sign of lambda(x0) tells whether they attract.
"""

import numpy as np

from relaxosc import (classify_isocline, integrate_fast_orbit, instances, predict_dynamics,
                      scan_chi_roots, singular_configuration, ybar)

spec = instances.get("holling2")
print(spec)

# The prey isocline F has a single hump; x_hat is its maximum and x_bar is
# where F comes back down to its value on the axis.
shape = classify_isocline(spec)
print(f"shape {shape.hump_class.value}: x_hat = {shape.x_hat:.6f}, x_bar = {shape.x_bar:.6f}")
print(f"ybar = F(0) = {ybar(spec):.6f}")

# One fast orbit in detail. It starts on the isocline at x0 and ends on the
# axis x = 0 at two predator levels, below and above ybar.
orb = integrate_fast_orbit(spec, 2.0)
print(f"x0 = 2: y_alpha = {orb.y_alpha:.6f}, y_omega = {orb.y_omega:.6f}, "
      f"chi = {orb.chi:.6f}, lambda = {orb.lam:.6f}")

# chi on a coarse grid. Positive near the axis, negative near K, so there is
# at least one sign change in between.
scan = scan_chi_roots(spec, grid_n=100)
for x, c, l in zip(scan.x[::11], scan.chi[::11], scan.lam[::11]):
    print(f"  x0 = {x:7.4f}   chi = {c:+.5f}   lambda = {l:+.5f}")

# The full prediction refines the root and classifies it.
report = predict_dynamics(spec)
print("verdict:", report.verdict_label)
for root in report.roots:
    print(f"  root x0 = {root.x0:.9f}, lambda = {root.lam:.6f} -> {root.stability.value}")
for note in report.consistency:
    print("  check:", note)

# The singular configuration is the closed curve the cycle hugs as eps -> 0:
# a fast orbit, then a slow drift down the predator axis.
cfg = singular_configuration(spec, report.roots[0].x0)
loop = cfg.closed_polyline()
x, y = loop[:, 0], loop[:, 1]
print(f"configuration: {len(loop)} vertices, prey up to {x.max():.6f}, "
      f"predator in [{y.min():.4f}, {y.max():.4f}]")
print(f"period coefficient log(y_omega / y_alpha) = {cfg.period_coefficient:.6f}")
print("loop closes:", bool(np.array_equal(loop[0], loop[-1])))
