import json

import numpy as np
import pytest

from aeflow import cli, flow, io, presets
from aeflow.geometry import flat_profile, make_grid

SMALL = ["--set", "grid.N=400", "--set", "t_end=2"]


@pytest.fixture()
def schw_file(tmp_path):
    path = tmp_path / "schw.csv"
    io.write_profile(path, presets.schwarzschild(1.0).profile(make_grid(3, 2000)))
    return path


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_run_writes_a_run_directory(tmp_path, capsys):
    out = tmp_path / "run"
    assert cli.main(["run", *SMALL, "--out", str(out)]) == 0
    summary = _json(capsys)
    assert summary["pass"] and summary["status"] == "ok"
    for name in ("config.txt", "series.csv", "summary.json", "timing.json"):
        assert (out / name).is_file()
    assert len(list((out / "snapshots").glob("*.csv"))) == len(io.read_series(out / "series.csv")[0])
    assert json.loads((out / "summary.json").read_text()) == summary


def test_run_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    cli.main(["run", *SMALL, "--out", str(a)])
    cli.main(["run", *SMALL, "--out", str(b)])
    capsys.readouterr()
    for name in ("summary.json", "series.csv", "snapshots/00003.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_config_file_and_invalid_input(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("n=2\n")
    assert cli.main(["run", "--config", str(cfg)]) == 2
    assert cli.main(["run", "--set", "bogus=1"]) == 2
    assert cli.main(["run", "--set", "t_end"]) == 2
    assert cli.main(["mass", "--profile", str(tmp_path / "missing.csv")]) == 2
    assert cli.main(["frobnicate"]) == 2
    assert cli.main(["mu", "--profile", str(cfg), "--tau", "x"]) == 2
    capsys.readouterr()


def test_monitor_failure_exit_code(capsys):
    assert cli.main(["run", *SMALL, "--set", "monitors.mass_tol=1e-12"]) == 4
    assert not _json(capsys)["pass"]


def test_singular_run_exit_code(monkeypatch, capsys):
    def boom(*_, **__):
        raise flow.SingularityError(7, 0.5)

    monkeypatch.setattr(flow, "run", boom)
    assert cli.main(["run", *SMALL]) == 3
    assert _json(capsys)["status"] == "singular"


def test_mass_subcommand(schw_file, tmp_path, capsys):
    out = tmp_path / "m"
    assert cli.main(["mass", "--profile", str(schw_file), "--out", str(out)]) == 0
    rep = _json(capsys)
    assert rep["extrapolated"] == pytest.approx(16 * np.pi, rel=1e-3)
    lines = (out / "mass.csv").read_text().splitlines()
    assert lines[0] == "radius,estimate" and len(lines) == 5
    assert cli.main(["mass", "--profile", str(schw_file), "--rmax-list", "100,200,400,800"]) == 0
    assert len(_json(capsys)["mass_estimates"]) == 4


def test_mu_subcommands(tmp_path, capsys):
    path = tmp_path / "flat.csv"
    io.write_profile(path, flat_profile(make_grid(3, 1000)))
    assert cli.main(["mu", "--profile", str(path), "--tau", "1"]) == 0
    rep = _json(capsys)
    assert abs(rep["mu_value"]) < 1e-6 and rep["converged"]
    out = tmp_path / "mus"
    assert cli.main(["mu-sweep", "--profile", str(path), "--taus", "1,10", "--out", str(out)]) == 0
    assert len(_json(capsys)["solutions"]) == 2
    assert (out / "mu_tau_1.0.csv").is_file() and (out / "mu_tau_10.0.csv").is_file()


def test_heat_subcommand(tmp_path, capsys):
    run_dir = tmp_path / "run"
    cli.main(["run", "--set", "grid.N=400", "--set", "t_end=20", "--out", str(run_dir)])
    capsys.readouterr()
    code = cli.main(["heat", "--run-dir", str(run_dir), "--sigma", "1"])
    rep = _json(capsys)
    assert code == 0 and rep["lp_nonincreasing"] and rep["decay"]["pass"]
    assert (run_dir / "heat_series.csv").is_file() and (run_dir / "heat_summary.json").is_file()


def test_soliton_subcommand(tmp_path, capsys):
    prof = flat_profile(make_grid(3, 500))
    io.write_profile(tmp_path / "p.csv", prof)
    io.write_field(tmp_path / "f.csv", prof.r, -(prof.r**2) / 4, "f")
    io.write_field(tmp_path / "z.csv", prof.r, 0 * prof.r, "f")
    assert cli.main(["soliton", "--profile", str(tmp_path / "p.csv"), "--potential", str(tmp_path / "f.csv"),
                     "--lambda", "1"]) == 0
    assert _json(capsys)["is_soliton"]
    assert cli.main(["soliton", "--profile", str(tmp_path / "p.csv"), "--potential", str(tmp_path / "z.csv"),
                     "--lambda", "0"]) == 0
    assert _json(capsys)["hamilton"]["deviation"] == 0.0
    io.write_field(tmp_path / "short.csv", prof.r[:10], prof.r[:10], "f")
    assert cli.main(["soliton", "--profile", str(tmp_path / "p.csv"), "--potential",
                     str(tmp_path / "short.csv"), "--lambda", "0"]) == 2
    capsys.readouterr()


def test_sweep_subcommand(tmp_path, capsys):
    out = tmp_path / "sw"
    assert cli.main(["sweep", *SMALL, "--axis", "scenario.amplitude", "--values", "0.2,0.1",
                     "--out", str(out)]) == 0
    rep = _json(capsys)
    assert [item["value"] for item in rep["items"]] == ["0.2", "0.1"]
    assert (out / "scenario.amplitude=0.2" / "summary.json").is_file()
    assert (out / "sweep.json").is_file()
