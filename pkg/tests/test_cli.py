import json
from types import SimpleNamespace

import pytest

from relaxosc import cli
from relaxosc.model import HumpClass

H2 = ["--family", "holling2", "--r", "2", "--k", "3", "--c", "0.5", "--m", "1.5", "--a", "1"]
IVLEV_SMALL = ["--family", "ivlev", "--r", "1", "--k", "3", "--c", "0.5", "--m", "1", "--a", "0.5"]
H4 = ["--family", "holling4", "--r", "4", "--c", "0.1", "--m", "2", "--a", "0.75"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def body(out):
    return json.loads(out)


def csv_rows(out):
    lines = [ln for ln in out.splitlines() if not ln.startswith("#")]
    cols = lines[0].split(",")
    return [dict(zip(cols, ln.split(","))) for ln in lines[1:]]


# --------------------------------------------------------------------------
# exit codes

def test_missing_model_parameter_is_usage_error(capsys):
    code, _, err = run(capsys, "analyze", "--family", "holling2", "--r", "2")
    assert code == 1 and "--k" in err and "--c" in err


def test_unknown_flag_exits_one():
    with pytest.raises(SystemExit) as info:
        cli.main(["analyze", "--bogus", "1"])
    assert info.value.code == 1


def test_config_parse_error_reports_line(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("family = holling2\nr = 2\nk = three\n")
    code, _, err = run(capsys, "analyze", "--config", str(cfg))
    assert code == 1 and "line 3" in err


def test_unreadable_config(tmp_path, capsys):
    code, _, _ = run(capsys, "analyze", "--config", str(tmp_path / "missing.cfg"))
    assert code == 1


@pytest.mark.parametrize("eps", ["0", "-0.01"])
def test_nonpositive_epsilon_rejected(capsys, eps):
    code, _, err = run(capsys, "simulate", *H2, "--epsilon", eps)
    assert code == 1 and "positive" in err


def test_epsilon_required(capsys):
    code, _, _ = run(capsys, "cycles", *H2)
    assert code == 1


def test_empty_sweep_rejected(capsys):
    code, _, err = run(capsys, "sweep", *H2, "--param", "a", "--start", "2", "--stop", "1",
                       "--num", "5")
    assert code == 1 and "empty" in err
    code, _, _ = run(capsys, "sweep", *H2, "--param", "a", "--start", "1", "--stop", "2",
                     "--num", "0")
    assert code == 1


def test_empty_scan_range_rejected(capsys):
    code, _, err = run(capsys, "chi-scan", *H2, "--x-min", "2.5", "--x-max", "2.0")
    assert code == 1 and "range" in err


def test_bad_thread_count(capsys, monkeypatch):
    monkeypatch.setenv("RELAXOSC_THREADS", "zero")
    code, _, _ = run(capsys, "sweep", *H2, "--param", "a", "--start", "1", "--stop", "2",
                     "--num", "2")
    assert code == 1


def test_unsupported_shape_exits_two(capsys, monkeypatch):
    fake = SimpleNamespace(hump_class=HumpClass.UNSUPPORTED, extrema=[1.0, 1.5, 2.0],
                           to_dict=lambda: {"hump_class": "unsupported"})
    monkeypatch.setattr(cli, "classify_isocline", lambda spec: fake)
    code, out, err = run(capsys, "analyze", *H2)
    assert code == 2 and "unsupported" in err
    assert body(out)["result"]["verdict"] is None


def test_failed_verification_exits_three(capsys):
    code, out, _ = run(capsys, "verify", "--filter", "^stability-agreement$",
                       "--fault", "wrong-sign-lambda")
    assert code == 3
    assert "FAIL" in out and "stability-agreement" in out


def test_unknown_fault_and_empty_filter(capsys):
    assert run(capsys, "verify", "--fault", "nonsense")[0] == 1
    assert run(capsys, "verify", "--filter", "^no-such-check$")[0] == 1


# --------------------------------------------------------------------------
# output contents

def test_analyze_holling2(capsys):
    code, out, _ = run(capsys, "analyze", *H2)
    doc = body(out)
    assert code == 0 and doc["tool"] == "relaxosc" and doc["command"] == "analyze"
    assert doc["config"]["k"] == 3.0 and doc["config"]["grid_n"] == 200
    res = doc["result"]
    assert res["verdict"] == "NOscillations(1)"
    assert res["roots"][0]["x0"] == pytest.approx(2.441958838, abs=1e-7)


def test_analyze_ivlev_small_aK(capsys):
    code, out, _ = run(capsys, "analyze", *IVLEV_SMALL)
    assert code == 0 and body(out)["result"]["verdict"] == "GloballyStableEquilibrium"


def test_analyze_writes_polylines(capsys, tmp_path):
    code, _, _ = run(capsys, "analyze", *H2, "--polylines", str(tmp_path / "poly"))
    text = (tmp_path / "poly" / "gamma_0.csv").read_text()
    assert code == 0 and text.startswith("# relaxosc") and "\ny,x\n" in text


def test_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "m.cfg"
    cfg.write_text("family = holling2\nr = 2\nk = 3\nc = 0.5\nm = 1.5\na = 5\n")
    code, out, _ = run(capsys, "analyze", "--config", str(cfg), "--a", "1")
    doc = body(out)
    assert code == 0 and doc["config"]["a"] == 1.0
    assert doc["result"]["verdict"] == "NOscillations(1)"


def test_chi_scan_header_and_sign_changes(capsys):
    code, out, _ = run(capsys, "chi-scan", *H4, "--k", "3", "--grid-n", "120")
    assert code == 0
    header = [ln for ln in out.splitlines() if ln.startswith("#")]
    assert header[0].startswith("# relaxosc ") and header[0].endswith("chi-scan")
    assert "# grid_n = 120" in header
    rows = csv_rows(out)
    assert len(rows) == 120
    signs = [float(r["chi"]) > 0 for r in rows]
    changes = sum(a != b for a, b in zip(signs, signs[1:]))
    assert "# note: sign changes: 2" in header and changes == 2


def test_chi_scan_monotone_note(capsys):
    # kappa = a K^2 = 0.75 * 1.8^2 < 3
    code, out, _ = run(capsys, "chi-scan", *H4, "--k", "1.8", "--grid-n", "100")
    assert code == 0 and "# note: isocline shape: Monotone" in out


def test_simulate_csv(capsys, tmp_path):
    path = tmp_path / "traj.csv"
    code, out, _ = run(capsys, "simulate", *H2, "--epsilon", "0.05", "--t-max", "40",
                       "--out", str(path))
    text = path.read_text()
    assert code == 0 and out == ""
    assert "# x0 = 1.5" in text and "# note: termination:" in text
    rows = csv_rows(text)
    assert list(rows[0]) == ["t", "x", "y", "u"] and float(rows[-1]["t"]) == 40.0


def test_cycles_json(capsys):
    code, out, _ = run(capsys, "cycles", *H2, "--epsilon", "0.01")
    res = body(out)["result"]
    assert code == 0 and len(res["cycles"]) == 1
    assert res["cycles"][0]["stability"] == "stable"


def test_threshold_k4_deterministic(capsys):
    first = run(capsys, "threshold-k4")
    second = run(capsys, "threshold-k4")
    assert first == second and first[0] == 0
    res = body(first[1])["result"]
    assert 4.5 < res["kappa_star"] < 4.55 and res["q_at_4"] < 0


def test_sweep_thread_count_does_not_change_bytes(capsys, monkeypatch):
    argv = ["sweep", *H2, "--param", "a", "--start", "0.5", "--stop", "4", "--num", "4"]
    monkeypatch.setenv("RELAXOSC_THREADS", "1")
    serial = run(capsys, *argv)
    monkeypatch.setenv("RELAXOSC_THREADS", "2")
    parallel = run(capsys, *argv)
    assert serial == parallel and serial[0] == 0
    verdicts = [r["verdict"] for r in csv_rows(serial[1])]
    assert verdicts[0] == "NOscillations(1)" and verdicts[-1] == "GloballyStableEquilibrium"


def test_sweep_kappa_small_c_flag_flips_around_threshold(capsys, monkeypatch):
    monkeypatch.setenv("RELAXOSC_THREADS", "1")
    code, out, _ = run(capsys, "sweep", *H4, "--k", "3", "--param", "kappa", "--start", "4.0",
                       "--stop", "5.0", "--num", "5", "--grid-n", "100")
    rows = csv_rows(out)
    flags = [r["small_c_two_roots"] for r in rows]
    values = [float(r["value"]) for r in rows]
    assert code == 0 and flags == ["false", "false", "false", "true", "true"]
    assert values[2] < 4.519149918 < values[3]


def test_verify_filter_passes(capsys):
    code, out, _ = run(capsys, "verify", "--filter", "^kappa4-identity$")
    assert code == 0 and "PASS" in out and "kappa-star" not in out
