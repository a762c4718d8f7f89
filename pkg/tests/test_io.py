import numpy as np
import pytest

from aeflow import io
from aeflow.geometry import InvalidProfileError


def test_profile_round_trip_is_bit_exact(tmp_path, bump, grid2000):
    p = bump.areal_profile(grid2000).with_time(1.25)
    io.write_profile(tmp_path / "p.csv", p)
    q = io.read_profile(tmp_path / "p.csv")
    assert np.array_equal(p.r, q.r) and np.array_equal(p.phi, q.phi) and np.array_equal(p.psi, q.psi)
    assert (q.n, q.sigma, q.time) == (p.n, p.sigma, p.time)
    assert q.grid.mapping["L"] == p.grid.mapping["L"] and q.grid.N == p.grid.N


def test_profile_text_is_deterministic(bump, grid2000):
    p = bump.profile(grid2000)
    assert io.profile_to_text(p) == io.profile_to_text(bump.profile(grid2000))


def test_series_and_field_round_trip(tmp_path):
    t = np.array([0.0, 0.1, 1 / 3])
    s = {"a": np.array([1.0, np.pi, -2e-300]), "b": np.array([np.nan, 0.0, 1e300])}
    io.write_series(tmp_path / "s.csv", t, s)
    t2, s2 = io.read_series(tmp_path / "s.csv")
    assert np.array_equal(t, t2)
    assert np.array_equal(s["a"], s2["a"]) and np.array_equal(s["b"], s2["b"], equal_nan=True)
    r = np.linspace(0, 1, 5)
    io.write_field(tmp_path / "f.csv", r, r**2, "f")
    r2, f2 = io.read_field(tmp_path / "f.csv")
    assert np.array_equal(r, r2) and np.array_equal(r**2, f2)


def test_json_is_canonical():
    a = io.to_json({"b": np.float64(1.0), "a": [np.nan, np.inf, np.True_, np.int64(3)]})
    assert a == io.to_json({"a": [float("nan"), float("inf"), True, 3], "b": 1.0})
    assert a.index('"a"') < a.index('"b"')
    with pytest.raises(TypeError):
        io.to_json({"x": object()})


def test_run_dir_round_trip(tmp_path, flat_run):
    io.write_run_dir(tmp_path / "run", flat_run, {"ok": True})
    tr = io.read_run_dir(tmp_path / "run")
    assert np.array_equal(tr.times, flat_run.times)
    for a, b in zip(tr.snapshots, flat_run.snapshots):
        assert np.array_equal(a.profile.phi, b.profile.phi)
    for k in flat_run.series:
        assert np.array_equal(tr.series[k], flat_run.series[k])


def test_malformed_files_are_rejected(tmp_path):
    (tmp_path / "bad.csv").write_text("# n=3\nr,phi\n0,1\n")
    with pytest.raises(InvalidProfileError):
        io.read_profile(tmp_path / "bad.csv")
    with pytest.raises(InvalidProfileError):
        io.read_run_dir(tmp_path)
