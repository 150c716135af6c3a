"""The rssforge command-line front end, exercised end to end on oneway."""

import json

import pytest

from rssforge import cli
from rssforge.symbolic import parse_assertion


def run(argv):
    return cli.main(argv)


@pytest.fixture(scope="module")
def derived(tmp_path_factory):
    out = tmp_path_factory.mktemp("derived")
    code = run(["derive", "--scenario", "oneway", "--out", str(out)])
    assert code == cli.EXIT_OK
    return out


def test_derive_writes_artifacts(derived):
    for name in ("rss_condition.txt", "rss_condition.smt2",
                 "gamma.json", "synthesis_report.json"):
        assert (derived / name).exists(), name
    cond = parse_assertion((derived / "rss_condition.txt").read_text())
    assert cond is not None
    report = json.loads((derived / "synthesis_report.json").read_text())
    assert "timing" in report and "dead_edges" in report
    assert report["quantified"] == []


def test_check_passes_on_derived_gamma(derived, tmp_path):
    code = run(["check", str(derived / "gamma.json"),
                "--scenario", "oneway", "--timeout", "10",
                "--out", str(tmp_path)])
    assert code == cli.EXIT_OK


def test_experiment_small_grid(tmp_path, capsys):
    cond = tmp_path / "cond.txt"
    # comply exactly when the SV starts more than 20 m from the CZ
    cond.write_text("(< (poly (-1 (x_SV 1)) (20)) 0)\n")
    out = tmp_path / "exp"
    code = run(["experiment", str(cond), "--scenario", "intersection",
                "--grid", "small", "--out", str(out)])
    assert code == cli.EXIT_OK
    text = capsys.readouterr().out
    assert "instances=16" in text
    files = {p.name for p in out.iterdir()}
    assert any(n.endswith(".csv") for n in files)
    assert any(n.endswith(".json") for n in files)


def test_simulate_single_instance(tmp_path, capsys):
    code = run(["simulate", "--scenario", "intersection",
                "--x-sv", "5", "--v-sv", "18", "--x-pov", "5",
                "--v-pov", "18", "--a-pov", "0", "--out", str(tmp_path)])
    assert code == cli.EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["collision"] is True


def test_simulate_safe_instance(tmp_path, capsys):
    code = run(["simulate", "--scenario", "intersection",
                "--x-sv", "45", "--v-sv", "3", "--x-pov", "45",
                "--v-pov", "3", "--out", str(tmp_path)])
    assert code == cli.EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["collision"] is False


def test_export_model(tmp_path):
    code = run(["export", "--scenario", "oneway", "--out", str(tmp_path)])
    assert code == cli.EXIT_OK
    files = {p.name for p in tmp_path.iterdir()}
    assert "oneway.json" in files
    assert "oneway.dot" in files
    assert any(n.endswith("_program.txt") for n in files)


def test_parse_error_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["derive", "--model", str(bad), "--out", str(tmp_path)]) == \
        cli.EXIT_PARSE


def test_unknown_scenario_exit_code(tmp_path):
    assert run(["derive", "--scenario", "nonsense",
                "--out", str(tmp_path)]) == cli.EXIT_PARSE


def test_scenario_and_model_are_exclusive(tmp_path):
    assert run(["derive", "--scenario", "oneway", "--model", "x.json",
                "--out", str(tmp_path)]) == cli.EXIT_PARSE


def test_config_file_with_flag_override(tmp_path, derived):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"scenario": "oneway", "timeout": 5.0}))
    out = tmp_path / "out"
    code = run(["export", "--config", str(cfg), "--out", str(out)])
    assert code == cli.EXIT_OK
    assert (out / "oneway.json").exists()
