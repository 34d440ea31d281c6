import json
import subprocess
import sys

import pytest

from singular_symplectic import systems
from singular_symplectic.cli import main
from singular_symplectic.formats import format_form, parse_form
from singular_symplectic.forms import pullback


def run(capsys, *args):
    code = main(list(args))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("entry, verdict", [
    ("r3bp-mcgehee", "b^3"), ("darboux-bm:4", "b^4"), ("mcgehee-collapse", "7/2-folded"),
])
def test_classify(capsys, entry, verdict):
    code, out, _ = run(capsys, "classify", entry, "--format", "json")
    assert code == 0
    assert json.loads(out)["verdict"] == verdict


def test_classify_text_and_m_flag(capsys):
    code, out, _ = run(capsys, "classify", "--entry", "darboux-bm:m", "--m", "5")
    assert code == 0 and out.startswith("verdict: b^5")


def test_classify_json_is_deterministic(capsys):
    a = run(capsys, "classify", "projective-two-center", "--format", "json", "--seed", "3")[1]
    b = run(capsys, "classify", "projective-two-center", "--format", "json", "--seed", "3")[1]
    assert a == b


def test_classify_user_form(capsys, tmp_path):
    f = tmp_path / "bm.form"
    f.write_text("chart c: x1 x2 y1 y2\nform:\ndx1 ^ dy1 = 1/y1^2\ndx2 ^ dy2 = 1\n")
    code, out, _ = run(capsys, "classify", "--form", str(f))
    assert code == 0 and "verdict: b^2" in out


def test_parse_error_reports_location(capsys, tmp_path):
    f = tmp_path / "bad.form"
    f.write_text("chart c: x y\nform:\ndx ^ dy = 1/(x +\n")
    code, _, err = run(capsys, "classify", "--form", str(f))
    assert code == 1
    assert "line 3" in err and "column" in err


def test_unresolvable_coefficient_exit_code(capsys, tmp_path):
    f = tmp_path / "odd.form"
    f.write_text("chart c: x y\nform:\ndx ^ dy = x^3 + y^3 + x*y + 1/5\n")
    code, _, err = run(capsys, "classify", "--form", str(f))
    assert code == 2 and "inconclusive" in err


def test_missing_file_is_usage_error(capsys):
    assert run(capsys, "classify", "--form", "/nonexistent/x.form")[0] == 1


def test_unknown_entry_is_usage_error(capsys):
    assert run(capsys, "classify", "no-such-entry")[0] == 1


@pytest.mark.parametrize("mapname", ["levi-civita", "ks", "levi-civita-symplectic"])
def test_pullback_canonical(capsys, mapname):
    code, out, _ = run(capsys, "pullback", mapname, "canonical")
    assert code == 0
    phi = systems.get_map(mapname)
    want = pullback(phi, phi.target.canonical_form())
    assert out == format_form(want)
    assert parse_form(out) == want


def test_pullback_identity(capsys):
    code, out, _ = run(capsys, "pullback", "identity", "canonical")
    assert code == 0
    assert parse_form(out) == systems.KEPLER_CHART.canonical_form()


def test_pullback_chart_mismatch(capsys, tmp_path):
    f = tmp_path / "other.form"
    f.write_text("chart other: a b\nform:\nda ^ db = 1\n")
    code, _, err = run(capsys, "pullback", "levi-civita", str(f))
    assert code == 1 and "targets" in err


def test_simulate_circular(capsys, tmp_path):
    out_file = tmp_path / "c.csv"
    code, out, _ = run(capsys, "simulate", "kepler-planar", "--circular", "--out", str(out_file))
    summary = json.loads(out)
    assert code == 0
    assert summary["drift"]["radius"] < 1e-8
    assert out_file.read_text().startswith("tau,t,w1,w2,W1,W2,")


def test_simulate_two_center(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "two-fixed-center", "--out", str(tmp_path / "t.csv"))
    summary = json.loads(out)
    assert code == 0
    assert summary["drift"]["H"] < 1e-7 and summary["drift"]["G"] < 1e-7


def test_simulate_collision(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "kepler-planar", "--collision", "--format", "json",
                       "--out", str(tmp_path / "k.json"))
    assert code == 0
    assert json.loads(out)["termination"] == "singular_guard_triggered"
    data = json.loads((tmp_path / "k.json").read_text())
    assert data["trajectory"]["termination"] == "singular_guard_triggered"


def test_simulate_drift_violation(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "kepler-planar", "--rel-tol", "1e-4", "--out", str(tmp_path / "x.csv"))
    assert code == 3
    assert json.loads(out)["violations"]


def test_simulate_needs_system(capsys):
    assert run(capsys, "simulate", "ks")[0] == 1


def test_config_file_and_flag_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# batch settings\nentry = darboux-bm:m\nm = 3\nformat = json\n")
    code, out, _ = run(capsys, "classify", "--config", str(cfg))
    assert code == 0 and json.loads(out)["verdict"] == "b^3"
    code, out, _ = run(capsys, "classify", "--config", str(cfg), "--m", "6")
    assert json.loads(out)["verdict"] == "b^6"


def test_bad_config_line(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("colour = blue\n")
    assert run(capsys, "classify", "--config", str(cfg))[0] == 1


def test_check_levi_civita_reports_morse(capsys):
    code, out, _ = run(capsys, "check", "--entry", "levi-civita")
    assert code == 0
    assert "Morse signature (+,+)" in out


def test_check_perturbed_golden(capsys, tmp_path):
    golden = tmp_path / "golden.json"
    golden.write_text(json.dumps({"r3bp-mcgehee": {"verdict": "b^2", "orders": {"x": "-2"}}}))
    code, out, _ = run(capsys, "check", "--entry", "r3bp-mcgehee", "--golden", str(golden))
    assert code == 3
    assert "r3bp-mcgehee" in out and "expected b^2, got b^3" in out


def test_check_full_catalog(capsys):
    code, out, _ = run(capsys, "check", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["failed"] == 0
    assert {r["entry"] for r in data["results"]} >= {"kepler-planar", "two-fixed-center", "mcgehee-collapse"}


def test_list(capsys):
    code, out, _ = run(capsys, "list", "--format", "json")
    data = json.loads(out)
    assert code == 0
    assert [e["name"] for e in data["entries"]] == list(systems.ENTRY_NAMES)


def test_no_command_is_usage_error(capsys):
    assert run(capsys)[0] == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "singular_symplectic", "classify", "darboux-b"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "verdict: b^1" in proc.stdout
