import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aeflow.config import Config, ConfigError, load_config, parse_config


def test_empty_file_gives_defaults():
    assert parse_config("") == Config()
    assert parse_config("# only a comment\n\n") == Config()


def test_overrides():
    cfg = parse_config("n=3\nsigma=1.0")
    assert cfg.n == 3 and cfg.sigma == 1.0
    cfg = parse_config("grid.N = 500\nmonitors.entropy=true\nmonitors.taus=1,10,100\nsnapshot_dt=none")
    assert cfg.grid_N == 500 and cfg.monitors.entropy and cfg.monitors.taus == (1.0, 10.0, 100.0)
    assert cfg.snapshot_dt is None


def test_dimension_two_is_rejected():
    with pytest.raises(ConfigError, match="at least 3"):
        parse_config("n=2")


@pytest.mark.parametrize("text", ["bogus=1", "monitors.bogus=1", "grid.M=3", "scenario.mass=1",
                                  "n=3\nn=4", "sigma", "=1", "n=three", "method=euler",
                                  "scenario=torus", "monitors.entropy=maybe"])
def test_bad_input_is_rejected(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_scenario_parameters_follow_the_preset():
    cfg = parse_config("scenario.m=2.0\nscenario=schwarzschild")
    assert cfg.scenario == "schwarzschild" and cfg.scenario_params == {"m": 2.0}
    cfg = parse_config("scenario=schwarzschild\nscenario.k=4")
    assert cfg.scenario_params["k"] == 4 and isinstance(cfg.scenario_params["k"], int)


def test_text_round_trip():
    cfg = parse_config("scenario=conformal_bump\nscenario.amplitude=0.2\nmonitors.radii=0.25,0.5\nt_end=12.5")
    assert parse_config(cfg.to_text()) == cfg


@settings(max_examples=40, deadline=None)
@given(N=st.integers(16, 10**5), sigma=st.floats(0.01, 5.0), t_end=st.floats(0.0, 1e4),
       entropy=st.booleans(), k=st.integers(0, 3))
def test_round_trip_property(N, sigma, t_end, entropy, k):
    cfg = (Config().with_value("grid.N", N).with_value("sigma", sigma).with_value("t_end", t_end)
           .with_value("monitors.entropy", entropy).with_value("monitors.k_max", k))
    assert parse_config(cfg.to_text()) == cfg


def test_load_config(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("t_end=3\n")
    assert load_config(p).t_end == 3.0
