import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relaxosc import instances
from relaxosc.model import (ConfigError, Family, H_conjugate, H_eval, HumpClass, ModelSpec,
                            classify_isocline, dump_config, isocline_eval, load_config,
                            parse_config, response_eval, ybar)
from relaxosc.model import spec_from_mapping


def _fd(f, x, h=1e-6):
    return (f(x + h) - f(x - h)) / (2 * h)


# --------------------------------------------------------------------------
# responses and isocline

def test_holling2_response_closed_form():
    spec = instances.get("holling2")
    p, dp = response_eval(spec, 1.0)
    assert p == pytest.approx(0.75, rel=1e-15)
    assert dp == pytest.approx(0.375, rel=1e-15)


def test_ivlev_slope_at_origin_is_m_times_a():
    spec = ModelSpec("ivlev", r=1, K=3, c=0.5, m=1, a=1)
    assert response_eval(spec, 0.0)[1] == pytest.approx(1.0, rel=1e-15)


@pytest.mark.parametrize("name", list(instances.INSTANCES))
def test_isocline_derivatives_match_finite_differences(name):
    spec = instances.get(name)
    F = lambda x: isocline_eval(spec, x)[0]
    dF = lambda x: isocline_eval(spec, x)[1]
    for x in np.linspace(0.1, 0.9, 7) * spec.K:
        _, d1, d2 = isocline_eval(spec, x)
        assert d1 == pytest.approx(_fd(F, x), rel=1e-6, abs=1e-8)
        assert d2 == pytest.approx(_fd(dF, x), rel=1e-6, abs=1e-8)


@pytest.mark.parametrize("name", list(instances.INSTANCES))
def test_isocline_matches_definition(name):
    spec = instances.get(name)
    for x in np.linspace(0.05, 0.95, 5) * spec.K:
        p, _ = response_eval(spec, x)
        assert isocline_eval(spec, x)[0] == pytest.approx(spec.r * x * (1 - x / spec.K) / p,
                                                          rel=1e-13)


@pytest.mark.parametrize("name", ["ivlev-ak3", "log"])
def test_isocline_smooth_through_series_switch(name):
    # the small-argument series and the closed form meet without a jump
    spec = instances.get(name)
    z_switch = 1e-3 / spec.a
    lo, hi = isocline_eval(spec, z_switch * (1 - 1e-9)), isocline_eval(spec, z_switch * (1 + 1e-9))
    assert lo[0] == pytest.approx(hi[0], rel=1e-12)
    assert lo[1] == pytest.approx(hi[1], rel=1e-7)


def test_ybar_is_F_at_zero():
    spec = instances.get("holling2")
    assert ybar(spec) == pytest.approx(4.0 / 3.0, rel=1e-15)
    assert isocline_eval(spec, 0.0)[0] == ybar(spec)


def test_ivlev_slope_formula_at_origin():
    # F'(0) = r (K a - 2) / (2 K m a)
    spec = ModelSpec("ivlev", r=1, K=3, c=0.5, m=1, a=1)
    assert isocline_eval(spec, 0.0)[1] == pytest.approx(1.0 / 6.0, rel=1e-12)


@pytest.mark.parametrize("aK,sign", [(1.9, -1), (2.1, 1)])
def test_ivlev_dichotomy_boundary(aK, sign):
    spec = ModelSpec("ivlev", r=1, K=3, c=0.5, m=1, a=aK / 3)
    assert np.sign(isocline_eval(spec, 0.0)[1]) == sign


def test_custom_family_agrees_with_builtin():
    base = instances.get("holling2")
    custom = ModelSpec("custom", r=2, K=3, c=0.5, p=lambda x: 1.5 * x / (1 + x),
                       dp=lambda x: 1.5 / (1 + x) ** 2)
    for x in (0.0, 0.3, 1.0, 2.5):
        a, b = isocline_eval(base, x), isocline_eval(custom, x)
        assert b[0] == pytest.approx(a[0], rel=1e-12)
        assert b[1] == pytest.approx(a[1], rel=1e-6, abs=1e-8)
        assert b[2] == pytest.approx(a[2], rel=1e-4, abs=1e-5)


# --------------------------------------------------------------------------
# validation

@pytest.mark.parametrize("kwargs", [
    dict(family="holling2", r=-1, K=3, c=0.5),
    dict(family="holling2", r=1, K=0, c=0.5),
    dict(family="holling2", r=1, K=3, c=0.5, a=-1),
    dict(family="holling2", r=1, K=3, c=0.5, b=1),
    dict(family="gen-holling4", r=1, K=3, c=0.5, a=1, b=-2),
    dict(family="custom", r=1, K=3, c=0.5),
    dict(family="nonsense", r=1, K=3, c=0.5),
])
def test_invalid_specs_rejected(kwargs):
    with pytest.raises(ValueError):
        ModelSpec(**kwargs)


def test_family_aliases():
    assert ModelSpec("HollingII", r=1, K=1, c=1).family is Family.HOLLING2
    assert ModelSpec("GeneralizedHollingIV", r=1, K=1, c=1, b=0.5).family is Family.GEN_HOLLING4


def test_negative_x_rejected():
    with pytest.raises(ValueError):
        response_eval(instances.get("holling2"), -0.1)
    with pytest.raises(ValueError):
        isocline_eval(instances.get("holling2"), -0.1)


# --------------------------------------------------------------------------
# shape classification

def test_holling2_one_hump():
    shape = classify_isocline(instances.get("holling2"))
    assert shape.hump_class is HumpClass.ONE_HUMP
    assert shape.x_hat == pytest.approx(1.0, abs=1e-10)  # (K - a) / 2
    assert shape.x_bar == pytest.approx(2.0, abs=1e-10)  # F(x) = F(0) at x = K - a


def test_holling2_exact_grid_root_raises_no_warning(recwarn):
    classify_isocline(instances.get("holling2"))
    assert not [w for w in recwarn if issubclass(w.category, RuntimeWarning)]


def test_holling2_a_above_K_is_monotone():
    shape = classify_isocline(instances.get("holling2-a-gt-k"))
    assert shape.hump_class is HumpClass.MONOTONE
    assert shape.f_prime_at_zero < 0


def test_holling4_two_humps_closed_form_extrema():
    spec = instances.get("holling4")
    shape = classify_isocline(spec)
    assert shape.hump_class is HumpClass.TWO_HUMP
    root = math.sqrt(1 - 3 / spec.kappa)
    assert shape.x_check == pytest.approx(spec.K * (1 - root) / 3, abs=1e-10)
    assert shape.x_hat == pytest.approx(spec.K * (1 + root) / 3, abs=1e-10)
    assert shape.x_check < shape.x_bar < shape.x_hat < shape.x_tilde < spec.K


def test_holling4_low_kappa_is_monotone():
    spec = instances.holling4_at_kappa(2.7)
    assert classify_isocline(spec).hump_class is HumpClass.MONOTONE


def test_gen_holling4_large_b_is_one_hump():
    assert classify_isocline(instances.get("gen-holling4")).hump_class is HumpClass.ONE_HUMP


def test_flat_origin_noted():
    # a = K makes F'(0) vanish for Holling II
    shape = classify_isocline(ModelSpec("holling2", r=2, K=3, c=0.5, m=1.5, a=3))
    assert any("boundary-degenerate" in n for n in shape.notes)


def test_three_extrema_unsupported():
    # a wiggly custom response gives F two maxima
    p = lambda x: x / (1 + 0.3 * math.sin(4 * x))
    dp = lambda x: ((1 + 0.3 * math.sin(4 * x)) - x * 1.2 * math.cos(4 * x)) / (
        1 + 0.3 * math.sin(4 * x)) ** 2
    spec = ModelSpec("custom", r=1, K=6, c=0.5, p=p, dp=dp)
    assert classify_isocline(spec).hump_class is HumpClass.UNSUPPORTED


# --------------------------------------------------------------------------
# H and its conjugate

yb_st = st.floats(0.05, 20.0)


@given(yb=yb_st, y=st.floats(1e-3, 50.0))
def test_H_nonnegative_and_zero_only_at_ybar(yb, y):
    h = H_eval(yb, y)
    assert h >= -1e-12 * yb
    if abs(y - yb) > 1e-3 * yb:
        assert h > 0


@given(yb=yb_st, f=st.floats(0.02, 0.98))
@settings(max_examples=200)
def test_H_conjugate_involution(yb, f):
    y = yb * f
    z = H_conjugate(yb, y)
    assert z > yb
    assert H_eval(yb, z) == pytest.approx(H_eval(yb, y), rel=1e-10, abs=1e-12)
    assert H_conjugate(yb, z) == pytest.approx(y, rel=1e-10)


@given(yb=yb_st, f=st.floats(1.02, 40.0))
def test_H_conjugate_maps_above_to_below(yb, f):
    z = H_conjugate(yb, yb * f)
    assert 0 < z < yb


def test_H_conjugate_fixed_point_and_value():
    assert H_conjugate(1.0, 1.0) == 1.0
    assert H_conjugate(1.0, 2.0) == pytest.approx(0.40637573995996, rel=1e-12)


def test_H_rejects_nonpositive():
    with pytest.raises(ValueError):
        H_eval(1.0, 0.0)
    with pytest.raises(ValueError):
        H_conjugate(1.0, -1.0)


def test_H_accepts_arrays():
    out = H_eval(1.0, np.array([0.5, 1.0, 2.0]))
    assert out.shape == (3,) and out[1] == 0.0


# --------------------------------------------------------------------------
# config files

def test_config_round_trip(tmp_path):
    spec = instances.get("gen-holling4")
    path = tmp_path / "m.cfg"
    path.write_text(dump_config(spec))
    assert load_config(path) == spec


def test_config_comments_and_blank_lines():
    parsed = parse_config("# header\n\nfamily = holling2  # inline\nr = 2\n")
    assert parsed["family"] == ("holling2", 3)


@pytest.mark.parametrize("text,line", [
    ("family = holling2\nr = two\n", 2),
    ("family = holling2\nr = 1\nr = 2\n", 3),
    ("family = holling2\nspeed = 3\n", 2),
    ("family = holling2\njust words\n", 2),
    ("r = 1e-3\n", 1),
])
def test_config_errors_carry_line_numbers(text, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_config_missing_family():
    with pytest.raises(ConfigError):
        spec_from_mapping({"r": "1", "k": "2", "c": "0.5"})
