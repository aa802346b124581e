import pytest

from relaxosc.model import ModelSpec
from relaxosc.oracles import lambda_xform, rk4_fast_orbit


def test_rk4_oracle_reproduces_golden_with_coarse_step(golden):
    # a coarse step keeps this quick; RK4 error scales as h^4
    g = golden["orbits"]["holling2_x2"]
    orb = rk4_fast_orbit(ModelSpec(**g["spec"]), g["x0"], h=1e-3)
    assert orb.y_alpha == pytest.approx(g["y_alpha"], rel=1e-7)
    assert orb.y_omega == pytest.approx(g["y_omega"], rel=1e-7)
    assert orb.chi == pytest.approx(g["chi"], abs=1e-6)
    assert orb.lam == pytest.approx(g["lambda"], rel=1e-6)
    assert orb.steps > 0


def test_rk4_oracle_step_refinement(golden):
    g = golden["orbits"]["log_x08"]
    spec = ModelSpec(**g["spec"])
    errs = [abs(rk4_fast_orbit(spec, g["x0"], h=h).lam - g["lambda"]) for h in (4e-3, 2e-3)]
    assert errs[1] < errs[0]


@pytest.mark.parametrize("case", ["holling2_x2", "holling4_inner", "ivlev_x2"])
def test_xform_lambda_matches_golden(golden, case):
    g = golden["orbits"][case]
    lam, ya, yo = lambda_xform(ModelSpec(**g["spec"]), g["x0"])
    assert lam == pytest.approx(g["lambda"], rel=1e-8)
    assert ya == pytest.approx(g["y_alpha"], rel=1e-8)
    assert yo == pytest.approx(g["y_omega"], rel=1e-8)
