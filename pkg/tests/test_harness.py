import numpy as np
import pytest

from aeflow import io
from aeflow.config import ConfigError, parse_config
from aeflow.harness import EXIT_MONITOR, EXIT_OK, convergence_table, run_scenario, sweep, threads_from_env


def small(extra: str = "") -> object:
    return parse_config("grid.N=500\nt_end=2\n" + extra)


def test_flat_scenario_passes_every_monitor():
    cfg = small("scenario=flat\nmonitors.entropy=true\nmonitors.heat=true\nmonitors.noncollapse=true\n"
                "monitors.taus=1,100")
    rep = run_scenario(None, cfg)
    assert rep.status == "ok" and rep.passed and rep.exit_code == EXIT_OK
    for name, m in rep.monitors.items():
        assert m.passed, name
        assert isinstance(m.reason, str) and m.reason
    assert rep.constants["masses"] == [0.0] * len(rep.trajectory.times)
    assert np.allclose(rep.constants["mu_series"]["mu"], 0.0, atol=1e-6)


def test_schwarzschild_run_conserves_mass():
    rep = run_scenario("schwarzschild", parse_config("grid.N=1000\nt_end=10\nsigma=1"))
    assert rep.monitors["mass_drift"].passed
    assert rep.monitors["mass_drift"].values["relative_drift"] <= 1e-2


def test_bump_run_reports_constants():
    rep = run_scenario(None, parse_config("grid.N=1000\nt_end=20"))
    assert rep.passed
    for key in ("masses", "delta0", "eps"):
        assert key in rep.constants
    d = rep.to_dict()
    assert d["provenance"]["grid"]["N"] == 1000
    assert "timing" not in d and "wall_time" in rep.timing


def test_failing_monitor_gives_exit_code_four():
    rep = run_scenario(None, parse_config("grid.N=500\nt_end=2\nmonitors.mass_tol=1e-12"))
    assert rep.status == "ok" and not rep.monitors["mass_drift"].passed
    assert rep.exit_code == EXIT_MONITOR


def test_undefined_mass_is_skipped_not_failed():
    rep = run_scenario(None, parse_config("grid.N=500\nt_end=2\nsigma=0.6"))
    m = rep.monitors["mass_drift"]
    assert m.passed and m.skipped


def test_identical_configs_give_identical_summaries():
    cfg = small()
    a = io.to_json(run_scenario(None, cfg))
    b = io.to_json(run_scenario(None, cfg))
    assert a == b


def test_sweep_keeps_order_and_matches_serial_runs():
    cfg = small()
    values = ["0.3", "0.1", "0.2"]
    par = sweep("scenario.amplitude", values, cfg, max_workers=3)
    ser = sweep("scenario.amplitude", values, cfg, max_workers=1)
    assert [r.config.scenario_params["amplitude"] for r in par] == [0.3, 0.1, 0.2]
    assert [io.to_json(r) for r in par] == [io.to_json(r) for r in ser]


def test_sweep_rejects_bad_axis():
    with pytest.raises(ConfigError):
        sweep("grid.M", ["1"], small())


def test_sigma_sweep_decay_exceeds_half_sigma():
    reps = sweep("sigma", ["0.6", "0.8", "1.0"], parse_config("grid.N=1000\nt_end=100"))
    for r in reps:
        assert r.monitors["type_iii_decay"].passed
        assert r.constants["delta0"] >= r.config.sigma / 2


def test_grid_sweep_convergence_table():
    reps = sweep("grid.N", ["500", "1000", "2000"], small())
    rows = convergence_table(reps, "masses")
    assert len(rows) == 1 and rows[0]["N"] == 500 and np.isfinite(rows[0]["value"])


def test_threads_from_env(monkeypatch):
    monkeypatch.setenv("AEFLOW_THREADS", "3")
    assert threads_from_env() == 3
    monkeypatch.setenv("AEFLOW_THREADS", "zero")
    with pytest.raises(ConfigError):
        threads_from_env()
    monkeypatch.delenv("AEFLOW_THREADS")
    assert threads_from_env() >= 1
