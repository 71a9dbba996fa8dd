import json
import subprocess
import sys

import pytest

from strichlab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_thresholds_examples(capsys):
    code, out, _ = run(capsys, "thresholds", "--spheres", "2", "--torus", "2", "--k", "1")
    assert code == 0
    assert "S2xT2,1,0,3,1,subcritical,1,>,5/4" in out and "s>d/2-3/4" in out
    code, out, _ = run(capsys, "thresholds", "--spheres", "4,5", "--k", "1")
    assert code == 0 and "critical,7/2,>=,7/2" in out
    code, out, _ = run(capsys, "thresholds", "--spheres", "3", "--torus", "1", "--k", "1", "--format", "json")
    rows = json.loads(out[: out.rindex("]") + 1])
    assert rows[0]["s_c"] == "1" and rows[0]["s_bound"] == "1" and rows[0]["regime"] == "almost-critical"


def test_thresholds_invalid(capsys):
    code, _, err = run(capsys, "thresholds", "--spheres", "1")
    assert code == 2 and "error" in err
    code, _, _ = run(capsys, "thresholds", "--spheres", "2", "--k", "0")
    assert code == 2


def test_count_example(capsys):
    code, out, _ = run(capsys, "count", "--N", "2", "--A", "257:512", "--exhaustive-b")
    assert code == 0 and out.strip().endswith("PASS count: max_count=2 limit=2")


def test_count_violation_exit_1(capsys):
    code, out, _ = run(capsys, "count", "--N", "2", "--A", "0:30", "--exhaustive-b", "--max-count", "1")
    assert code == 1 and "FAIL count" in out


def test_expsum_example(capsys):
    code, out, _ = run(capsys, "expsum", "--r", "2", "--r1", "0", "--p", "4", "--N", "4:64")
    assert code == 0
    verdict = out.strip().splitlines()[-1]
    slope = float(verdict.split("slope=")[1].split()[0])
    assert verdict.startswith("PASS") and slope <= 0.65


def test_outputs_and_idempotence(tmp_path, capsys):
    out = tmp_path / "o"
    args = ["weyl", "--arc", "major", "--N", "64:256", "--out", str(out), "--gnuplot"]
    assert run(capsys, *args)[0] == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["weyl.gp", "weyl.manifest.json", "weyl.rows.csv", "weyl.summary.csv"]
    first = {n: (out / n).read_bytes() for n in names}
    assert run(capsys, *args)[0] == 0
    assert {n: (out / n).read_bytes() for n in names} == first
    man = json.loads(first["weyl.manifest.json"])
    assert man["config"]["N"] == "64:256" and man["fit"] is not None
    assert first["weyl.rows.csv"].startswith(b"# config {")


def test_budget_error_writes_nothing(tmp_path, capsys):
    out = tmp_path / "o"
    code, _, err = run(capsys, "count", "--N", "8:64", "--budget", "500", "--out", str(out))
    assert code == 2 and "BudgetExceeded" in err
    assert not out.exists() or list(out.iterdir()) == []


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"count": {"N": "2", "exhaustive-b": True, "A": "0:30", "max_count": 1}}))
    assert run(capsys, "count", "--config", str(cfg))[0] == 1
    # flags override the file
    assert run(capsys, "count", "--config", str(cfg), "--max-count", "5")[0] == 0


@pytest.mark.parametrize("doc", [
    {"count": {"bogus": 1}},
    {"count": {"N": "2", "max_count": "many"}},
    {"count": {"exhaustive_b": "yes"}},
    {"count": []},
    [],
])
def test_malformed_config_exit_2(tmp_path, capsys, doc):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(doc))
    out = tmp_path / "o"
    code, _, err = run(capsys, "count", "--config", str(cfg), "--out", str(out))
    assert code == 2 and "error" in err
    assert not out.exists()


def test_unreadable_config(tmp_path, capsys):
    bad = tmp_path / "c.json"
    bad.write_text("{not json")
    assert run(capsys, "count", "--config", str(bad))[0] == 2
    assert run(capsys, "count", "--config", str(tmp_path / "missing.json"))[0] == 2


def test_bad_flags_exit_2(capsys):
    assert run(capsys, "count", "--N", "8:4")[0] == 2
    assert run(capsys, "expsum", "--p", "1")[0] == 2
    assert run(capsys, "count", "--nope")[0] == 2
    assert run(capsys, "projector", "--spheres", "")[0] == 2


def test_dry_run(capsys, tmp_path):
    code, out, _ = run(capsys, "expsum", "--N", "4:64", "--dry-run", "--out", str(tmp_path / "o"))
    assert code == 0 and "schedule=[4, 8, 16, 32, 64]" in out
    assert not (tmp_path / "o").exists()


def test_fit_command(tmp_path, capsys):
    data = tmp_path / "d.csv"
    data.write_text("# comment\nN,value\n2,2\n4,4\n8,8\n")
    code, out, _ = run(capsys, "fit", "--input", str(data), "--expect", "1", "--slope-tol", "1e-9")
    assert code == 0 and "PASS fit" in out
    code, _, _ = run(capsys, "fit", "--input", str(data), "--expect", "0", "--slope-tol", "0.1")
    assert code == 1
    assert run(capsys, "fit", "--input", str(data), "--y", "missing")[0] == 2


def test_help_documents_columns(capsys):
    assert main(["count", "--help"]) == 0
    assert "max_count" in capsys.readouterr().out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "strichlab", "count", "--N", "2", "--A", "257:300",
                          "--exhaustive-b"], capture_output=True, text=True)
    assert res.returncode == 0 and "PASS" in res.stdout
