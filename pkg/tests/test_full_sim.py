import json

import numpy as np
import pytest

from relaxosc import instances
from relaxosc.criteria import Stability, predict_dynamics
from relaxosc.fast_orbit import singular_configuration
from relaxosc.full_sim import (NoReturnError, SimulationError, empirical_entry_exit, equilibrium,
                               find_cycles, floquet_integral, hausdorff_distance,
                               hausdorff_to_config, isocline_return_map, simulate)
from relaxosc.model import H_conjugate, isocline_eval, ybar

H2 = instances.get("holling2")


@pytest.fixture(scope="module")
def h2_cycle():
    (cyc,) = find_cycles(H2, 1e-2, predict_dynamics(H2))
    return cyc


# --------------------------------------------------------------------------
# equilibrium

@pytest.mark.parametrize("eps", [0.1, 1e-2, 1e-3])
def test_holling2_equilibrium_closed_form(eps):
    eq = equilibrium(H2, eps)
    assert eq.x_star == pytest.approx(eps * H2.a / (H2.c * H2.m - eps), rel=1e-13)
    assert eq.y_star == pytest.approx(isocline_eval(H2, eq.x_star)[0], rel=1e-15)


def test_equilibrium_tends_to_axis_point():
    eq = equilibrium(H2, 1e-6)
    assert eq.x_star < 1e-5 and eq.y_star == pytest.approx(ybar(H2), rel=1e-5)


def test_equilibrium_stability_from_local_slope():
    assert equilibrium(H2, 1e-2).local_stability == "unstable"  # F' > 0 near 0
    assert equilibrium(instances.get("holling2-a-gt-k"), 1e-2).local_stability == "stable"


def test_holling4_two_equilibria_returns_smaller():
    # c p(x) = eps has roots 2/3 and 2 in (0, 3) when eps = 0.1
    eq = equilibrium(instances.get("holling4"), 0.1)
    assert eq.x_star == pytest.approx(2.0 / 3.0, rel=1e-12)
    assert eq.notes


def test_no_equilibrium_error():
    with pytest.raises(SimulationError, match="no coexistence equilibrium"):
        equilibrium(H2, 0.9)


def test_epsilon_must_be_positive():
    with pytest.raises(ValueError):
        equilibrium(H2, 0.0)
    with pytest.raises(ValueError):
        simulate(H2, 0.0, 1.0, 1.0, 10.0)


# --------------------------------------------------------------------------
# simulate

def test_equilibrium_start_stays_put():
    spec = instances.get("holling2-a-gt-k")
    eq = equilibrium(spec, 1e-2)
    tr = simulate(spec, 1e-2, eq.x_star, eq.y_star, 1e3)
    assert np.max(np.abs(tr.x - eq.x_star)) < 1e-6 * spec.K
    assert np.max(np.abs(tr.y - eq.y_star)) < 1e-6 * ybar(spec)


def test_trajectory_invariants():
    tr = simulate(H2, 1e-2, 1.5, 2.5, 500.0)
    assert np.all(np.diff(tr.t) > 0)
    assert np.all(tr.y > 0) and np.all(np.isfinite(tr.u))


def test_figure_parameters_approach_periodic_orbit():
    spec = H2.with_(a=3.0)
    tr = simulate(spec, 1e-2, 1.5, 2.5, 6000.0)
    maxima = [e for e in tr.events if e[3] == "isocline-up"]
    xs = np.array([e[1] for e in maxima])
    assert len(xs) >= 6
    # successive maxima settle down
    tail = np.abs(np.diff(xs[-4:]))
    assert np.all(tail < 1e-3 * spec.K)


def test_axis_repulsion_below_ybar():
    tr = simulate(H2, 1e-2, 1e-6, ybar(H2) / 2, 40.0)
    k = np.argmax(tr.x >= 1e-3)
    assert k > 0
    assert np.all(np.diff(tr.x[: k + 1]) > 0)


def test_prey_floor_is_annotated():
    # a slow, deep passage sends log x far below any float
    tr = simulate(H2, 1e-3, 2.4, 4.0, 4000.0)
    assert np.min(tr.u) < -100
    assert np.all(np.isfinite(tr.u))


def test_trajectory_csv():
    tr = simulate(H2, 1e-2, 1.5, 2.5, 50.0, n_sub=2)
    lines = tr.to_csv("# head").splitlines()
    assert lines[0] == "# head" and lines[1] == "t,x,y,u"
    assert len(lines) == len(tr.t) + 2
    assert len(lines[2].split(",")[0]) > 0


# --------------------------------------------------------------------------
# return map and cycles

def test_return_map_iterates_monotone():
    x = 2.9
    seq = [x]
    for _ in range(5):
        x, _ = isocline_return_map(H2, 1e-2, x)
        seq.append(x)
    d = np.diff(seq)
    assert np.all(d < 0) or np.all(d > 0)


def test_return_map_near_K_contracts():
    x_next, t = isocline_return_map(H2, 1e-2, 0.999 * H2.K)
    assert x_next < 0.999 * H2.K and t > 0


def test_fixed_point_of_return_map(h2_cycle):
    x_next, t = isocline_return_map(H2, 1e-2, h2_cycle.x_section)
    assert x_next == pytest.approx(h2_cycle.x_section, abs=1e-5 * H2.K)
    assert t == pytest.approx(h2_cycle.period, rel=1e-5)


def test_return_map_start_must_be_an_upward_crossing():
    with pytest.raises(ValueError):
        isocline_return_map(H2, 0.9, 0.1)
    with pytest.raises(ValueError):
        isocline_return_map(H2, 1e-2, 3.5)


def test_return_map_budget():
    with pytest.raises(NoReturnError):
        isocline_return_map(H2, 1e-2, 2.4, t_max=5.0)


def test_holling2_cycle(h2_cycle):
    assert h2_cycle.stability is Stability.STABLE
    assert h2_cycle.floquet_integral < 0
    assert h2_cycle.period > 0
    assert abs(h2_cycle.x_section - h2_cycle.predicted_x0) < 0.01 * H2.K
    d = json.loads(h2_cycle.to_json())
    assert d["stability"] == "stable" and d["epsilon"] == 1e-2


def test_holling4_two_cycles_inner_unstable():
    spec = instances.get("holling4")
    cycles = find_cycles(spec, 1e-2, predict_dynamics(spec))
    assert [c.stability for c in cycles] == [Stability.UNSTABLE, Stability.STABLE]
    assert cycles[0].floquet_integral > 0 > cycles[1].floquet_integral


@pytest.mark.parametrize("name", ["ivlev-ak1.5", "holling2-a-gt-k"])
def test_no_cycle_regimes_converge_to_equilibrium(name):
    spec = instances.get(name)
    eps = 1e-2
    eq = equilibrium(spec, eps)
    assert find_cycles(spec, eps, predict_dynamics(spec)) == []
    rng = np.random.default_rng(11)
    for _ in range(10):
        x0, y0 = rng.uniform(0.2, 0.9) * spec.K, rng.uniform(0.5, 2.0) * ybar(spec)
        tr = simulate(spec, eps, x0, y0, 3000.0)
        dist = np.hypot((tr.x - eq.x_star) / spec.K, (tr.y - eq.y_star) / ybar(spec))
        # weak damping near the axis makes the final approach slow
        assert dist[-1] < 1e-2 and dist[-1] < 0.1 * dist[0]


# --------------------------------------------------------------------------
# Floquet integral and Hausdorff distance

def test_floquet_matches_lambda_over_c(h2_cycle):
    rel = abs(h2_cycle.floquet_integral * H2.c - h2_cycle.predicted_lambda)
    assert rel / abs(h2_cycle.predicted_lambda) < 0.05


def test_floquet_shrinking_gap():
    rep = predict_dynamics(H2)
    gaps = []
    for eps in (1e-2, 1e-3):
        (cyc,) = find_cycles(H2, eps, rep)
        gaps.append(abs(cyc.floquet_integral * H2.c - cyc.predicted_lambda))
    assert gaps[1] < gaps[0]


def test_floquet_rejects_open_curve():
    tr = simulate(H2, 1e-2, 1.5, 2.5, 30.0)
    with pytest.raises(ValueError, match="not closed"):
        floquet_integral(H2, 1e-2, tr)


def test_floquet_rejects_zero_length():
    eq = equilibrium(H2, 1e-2)
    tr = simulate(H2, 1e-2, eq.x_star, eq.y_star, 1e-9)
    trivial = type(tr)(t=tr.t[:1], u=tr.u[:1], y=tr.y[:1], epsilon=1e-2, events=[],
                       termination="", sol=tr.sol, t_steps=tr.t_steps[:1])
    with pytest.raises(ValueError):
        floquet_integral(H2, 1e-2, trivial)


def test_hausdorff_basic_properties():
    square = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]], float)
    assert hausdorff_distance(square, square) == 0.0
    shifted = square + [3.0, 0.0]
    assert hausdorff_distance(square, shifted) == pytest.approx(3.0)
    assert hausdorff_distance(square, shifted) == hausdorff_distance(shifted, square)
    # resampling a straight edge does not change the distance
    dense = np.array([[0, 0], [0.5, 0], [1, 0]], float)
    assert hausdorff_distance(dense, square[:2]) == 0.0
    with pytest.raises(ValueError):
        hausdorff_distance(np.empty((0, 2)), square)


def test_configuration_orbit_lies_on_configuration():
    cfg = singular_configuration(H2, 2.441958838)
    poly = cfg.orbit.samples[1:-1]
    on_orbit = type("Curve", (), {"u": np.log(poly[:, 1]), "y": poly[:, 0]})()
    assert hausdorff_to_config(on_orbit, cfg) > 0  # the slow pieces are missing
    shifted = type("Curve", (), {"u": on_orbit.u, "y": on_orbit.y + 1.0})()
    assert hausdorff_to_config(shifted, cfg) > hausdorff_to_config(on_orbit, cfg)


def test_cycle_converges_to_configuration():
    rep = predict_dynamics(H2)
    d = [find_cycles(H2, eps, rep)[0].hausdorff_to_prediction for eps in (1e-2, 1e-3)]
    assert d[1] < d[0]


# --------------------------------------------------------------------------
# entry-exit

def test_entry_exit_close_to_conjugate():
    y_in = 4.1629
    y_out = empirical_entry_exit(H2, 1e-3, y_in)
    assert abs(y_out - H_conjugate(H2, y_in)) < 0.02 * ybar(H2)


def test_entry_slightly_above_ybar_exits_slightly_below():
    yb = ybar(H2)
    y_out = empirical_entry_exit(H2, 1e-3, 1.1 * yb, delta=1e-3 * H2.K)
    assert 0.85 * yb < y_out < yb


def test_entry_exit_improves_with_smaller_section():
    # at fixed eps the finite-section offset shrinks with delta
    y_in = 4.1629
    target = H_conjugate(H2, y_in)
    gaps = [abs(empirical_entry_exit(H2, 1e-3, y_in, delta=d) - target)
            for d in (3e-2, 3e-3, 3e-4)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_entry_exit_requires_inbound_start():
    with pytest.raises(ValueError):
        empirical_entry_exit(H2, 1e-3, 0.5 * ybar(H2))
