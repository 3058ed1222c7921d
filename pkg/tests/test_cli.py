import pytest

from stealthsim.harness.cli import main

ARGS = ["--nodes", "20", "--duration", "60", "--emergency-time", "30", "--focal", "3,7,11"]


def test_taxonomy_table(capsys):
    assert main(["taxonomy"]) == 0
    out = capsys.readouterr().out
    for line in ("doctor=1.000", "nurse=0.333", "caregiver=0.286", "other=0.000"):
        assert line in out.splitlines()


def test_run_happy_path(tmp_path, capsys):
    out = tmp_path / "r"
    assert main(["run", "--scenario", "senack", "--synthetic", "--seed", "7", "--reps", "2", *ARGS,
                 "--out", str(out)]) == 0
    assert (out / "report.csv").exists() and (out / "logs" / "rep_1.log").exists()
    assert "3.hr=" in capsys.readouterr().out
    # the manifest doubles as a config file
    again = tmp_path / "again"
    assert main(["run", "--config", str(out / "manifest.txt"), "--out", str(again)]) == 0
    assert (out / "report.txt").read_bytes() == (again / "report.txt").read_bytes()
    assert main(["metrics", str(out)]) == 0


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("scenario=seack\nreps=5\n")
    assert main(["run", "--config", str(cfg), "--reps", "1", *ARGS, "--out", str(tmp_path / "o")]) == 0
    assert "reps=1" in (tmp_path / "o" / "manifest.txt").read_text().splitlines()
    assert "scenario=seack" in (tmp_path / "o" / "manifest.txt").read_text().splitlines()


@pytest.mark.parametrize("argv", [
    ["run", "--scenario", "bogus", "--out", "x"],
    ["run", "--scenario", "senack", "--nodes", "20", "--out", "x"],  # focal ids out of range
    ["frobnicate"],
    [],
])
def test_usage_errors(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 1


def test_bad_config_key_is_usage_error(tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("colour=blue\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_runtime_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,node,x,y\n0.6,0,1,1\n0.0,0,1,1\n")
    assert main(["validate-trace", str(bad)]) == 2
    assert main(["run", "--trace", str(bad), *ARGS, "--out", str(tmp_path / "o")]) == 2
    assert main(["run", "--trace", str(tmp_path / "missing.csv"), *ARGS, "--out", str(tmp_path / "o")]) == 2
    assert main(["metrics", str(tmp_path / "nothing")]) == 2


def test_validate_trace_ok(tmp_path, capsys):
    good = tmp_path / "good.csv"
    good.write_text("t,node,x,y\n0.0,0,1,1\n0.6,0,2,1\n")
    assert main(["validate-trace", str(good), "--area", "10x10"]) == 0
    assert capsys.readouterr().out.startswith("ok snapshots=2")
