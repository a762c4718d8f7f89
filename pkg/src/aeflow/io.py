"""Plain-text serialization: profile CSV, series CSV and JSON summaries.

Floats are written with ``repr`` (shortest round-trip form, at most 17
significant digits), so a profile written and read back is bit-identical.
Files are written to a temporary name and renamed into place.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .geometry import InvalidProfileError, MetricProfile, RadialGrid


def _fmt(x: float) -> str:
    return repr(float(x))


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` through a same-directory temporary file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_table(path, expect: list[str] | None = None):
    meta: dict[str, str] = {}
    header = None
    rows = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    k, v = body.split("=", 1)
                    meta[k.strip()] = v.strip()
                continue
            if header is None:
                header = [c.strip() for c in line.split(",")]
                if expect is not None and header != expect:
                    raise InvalidProfileError(f"{path}: expected header {','.join(expect)}, got {line}")
                continue
            parts = line.split(",")
            if len(parts) != len(header):
                raise InvalidProfileError(f"{path}:{lineno}: expected {len(header)} columns")
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise InvalidProfileError(f"{path}:{lineno}: non-numeric entry") from None
    if header is None:
        raise InvalidProfileError(f"{path}: missing header line")
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return header, data, meta


def profile_to_text(profile: MetricProfile) -> str:
    lines = [f"# n={profile.n}", f"# sigma={_fmt(profile.sigma)}", f"# time={_fmt(profile.time)}"]
    m = profile.grid.mapping
    if m.get("rule") == "sinh":
        lines.append(f"# grid.L={_fmt(m['L'])}")
    lines.append("r,phi,psi")
    lines += [f"{_fmt(a)},{_fmt(b)},{_fmt(c)}" for a, b, c in zip(profile.r, profile.phi, profile.psi)]
    return "\n".join(lines) + "\n"


def write_profile(path, profile: MetricProfile) -> None:
    """Write ``r,phi,psi`` rows with ``n``, ``sigma`` and ``time`` metadata."""
    atomic_write(path, profile_to_text(profile))


def read_profile(path) -> MetricProfile:
    """Read a profile file; the grid is rebuilt from the ``r`` column.

    Raises
    ------
    InvalidProfileError
        On a malformed file, a missing ``n``, or non-positive ``phi``/``psi``.
    """
    _, data, meta = _read_table(path, ["r", "phi", "psi"])
    if "n" not in meta:
        raise InvalidProfileError(f"{path}: missing '# n=' metadata")
    try:
        n = int(meta["n"])
        sigma = float(meta.get("sigma", n - 2))
        time = float(meta.get("time", 0.0))
    except ValueError:
        raise InvalidProfileError(f"{path}: bad metadata") from None
    mapping = {}
    if "grid.L" in meta and data.shape[0] > 1:
        mapping = {"rule": "sinh", "L": float(meta["grid.L"]), "r_max": float(data[-1, 0]), "N": data.shape[0] - 1}
    try:
        grid = RadialGrid(n, data[:, 0], mapping)
    except ValueError as exc:
        raise InvalidProfileError(f"{path}: {exc}") from None
    prof = MetricProfile(grid, data[:, 1], data[:, 2], sigma, time)
    prof.check_positive()
    return prof


def write_field(path, r: np.ndarray, values: np.ndarray, name: str = "u", meta: dict | None = None) -> None:
    """Two-column ``r,<name>`` file in the profile format."""
    lines = [f"# {k}={v}" for k, v in (meta or {}).items()]
    lines.append(f"r,{name}")
    lines += [f"{_fmt(a)},{_fmt(b)}" for a, b in zip(r, values)]
    atomic_write(path, "\n".join(lines) + "\n")


def read_field(path, name: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    header, data, _ = _read_table(path)
    if len(header) != 2 or header[0] != "r" or (name is not None and header[1] != name):
        raise InvalidProfileError(f"{path}: expected a two-column 'r,<field>' file")
    return data[:, 0], data[:, 1]


def write_series(path, times, series: dict) -> None:
    """CSV with header ``t,<name>...`` and one row per time."""
    names = list(series)
    lines = [",".join(["t"] + names)]
    cols = [np.asarray(series[k], dtype=float) for k in names]
    for i, t in enumerate(times):
        lines.append(",".join([_fmt(t)] + [_fmt(c[i]) for c in cols]))
    atomic_write(path, "\n".join(lines) + "\n")


def read_series(path) -> tuple[np.ndarray, dict]:
    header, data, _ = _read_table(path)
    return data[:, 0], {k: data[:, i] for i, k in enumerate(header) if i > 0}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_json(obj) -> str:
    """Deterministic JSON (sorted keys, non-finite floats as strings or null)."""
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    atomic_write(path, to_json(obj))


def write_run_dir(path, trajectory, summary: dict | None = None) -> Path:
    """Run directory: ``series.csv``, ``snapshots/NNNNN.csv``, ``summary.json``."""
    path = Path(path)
    (path / "snapshots").mkdir(parents=True, exist_ok=True)
    for i, s in enumerate(trajectory.snapshots):
        write_profile(path / "snapshots" / f"{i:05d}.csv", s.profile)
    write_series(path / "series.csv", trajectory.times, trajectory.series)
    if summary is not None:
        write_json(path / "summary.json", summary)
    return path


def read_run_dir(path):
    """Rebuild a :class:`~aeflow.flow.FlowTrajectory` from a run directory.

    The result has no dense interpolant; the metric is linear in time
    between snapshots.
    """
    from .flow import FlowState, FlowTrajectory

    path = Path(path)
    files = sorted((path / "snapshots").glob("*.csv"))
    if not files:
        raise InvalidProfileError(f"{path}: no snapshots found")
    profs = [read_profile(f) for f in files]
    base = profs[0].grid
    states = []
    for i, p in enumerate(profs):
        if not np.array_equal(p.r, base.nodes):
            raise InvalidProfileError(f"{files[i]}: grid differs from the first snapshot")
        states.append(FlowState(MetricProfile(base, p.phi, p.psi, p.sigma, p.time), p.time, 0))
    series = {}
    if (path / "series.csv").exists():
        _, series = read_series(path / "series.csv")
    return FlowTrajectory(states, series)
