"""Scenario runs, report assembly and parameter sweeps."""

from __future__ import annotations

import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import entropy, flow, heat, mass
from .config import Config, ConfigError, validate_config
from .geometry import InvalidProfileError, MassUndefinedError, make_grid
from .presets import Scenario, make_scenario

#: Exit codes shared with the command line.
EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL, EXIT_MONITOR = 0, 2, 3, 4


@dataclass
class MonitorResult:
    passed: bool
    reason: str
    values: dict = field(default_factory=dict)
    skipped: bool = False

    def to_dict(self) -> dict:
        return {"pass": self.passed, "reason": self.reason, "skipped": self.skipped, "values": self.values}


@dataclass
class RunReport:
    """Outcome of one scenario run.

    ``status`` is ``"ok"``, ``"singular"`` or ``"failed"``.  ``timing`` holds
    wall-clock figures and is kept out of :meth:`to_dict` so that identical
    configurations give identical summaries.
    """

    config: Config
    status: str
    monitors: dict
    constants: dict
    provenance: dict
    timing: dict = field(default_factory=dict)
    trajectory: object = field(default=None, repr=False)
    message: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "ok" and all(m.passed for m in self.monitors.values())

    @property
    def exit_code(self) -> int:
        if self.status != "ok":
            return EXIT_NUMERICAL
        return EXIT_OK if self.passed else EXIT_MONITOR

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "status": self.status,
            "message": self.message,
            "pass": self.passed,
            "monitors": {k: v.to_dict() for k, v in self.monitors.items()},
            "constants": self.constants,
            "provenance": self.provenance,
        }


def _versions() -> dict:
    import scipy

    try:
        from importlib.metadata import version

        own = version("artifact")
    except Exception:
        own = "unknown"
    return {"aeflow": own, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}


def build_scenario(config: Config) -> Scenario:
    params = dict(config.scenario_params)
    if config.scenario == "positive_R_bump" and "sigma" not in params:
        params["sigma"] = config.sigma
    try:
        return make_scenario(config.scenario, n=config.n, **params)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def controls_for(config: Config) -> flow.RunControls:
    m = config.monitors
    return flow.RunControls(
        method=config.method,
        c_cfl=config.cfl,
        snapshot_dt=config.snapshot_dt,
        k_max=m.k_max,
        sigma_prime=m.sigma_prime,
    )


def _sigma_prime(config: Config, sigma: float) -> float:
    if config.monitors.sigma_prime is not None:
        return config.monitors.sigma_prime
    return 0.9 * sigma


def _guard(name: str, fn, results: dict) -> None:
    try:
        results[name] = fn()
    except (flow.WindowError, ValueError, entropy.ContractError) as exc:
        results[name] = MonitorResult(True, f"skipped: {exc}", skipped=True)
    except (heat.HeatError, ArithmeticError, RuntimeError) as exc:
        results[name] = MonitorResult(False, f"numerical failure: {exc}")


def run_scenario(scenario: Scenario | str | None, config: Config) -> RunReport:
    """Run the flow for ``scenario`` and evaluate the configured monitors.

    ``scenario`` may be a :class:`~aeflow.presets.Scenario`, a preset name,
    or ``None`` to build the preset named in ``config``.
    """
    config = validate_config(config)
    if scenario is None:
        scn = build_scenario(config)
    elif isinstance(scenario, str):
        scn = build_scenario(replace(config, scenario=scenario))
    else:
        scn = scenario
    grid = make_grid(config.n, config.grid_N, config.grid_L, config.r_max)
    prov = {
        "grid": {"n": config.n, "N": config.grid_N, "L": config.grid_L, "r_max": config.r_max, "rule": "sinh"},
        "scenario": {"name": scn.name, "params": scn.params, "sigma": scn.sigma},
        "gauge": "areal",
        "versions": _versions(),
    }
    t_start = time.perf_counter()
    try:
        prof = scn.areal_profile(grid)
    except InvalidProfileError as exc:
        raise ConfigError(f"scenario cannot be written in the areal gauge: {exc}") from None
    try:
        traj = flow.run(prof, config.t_end, controls_for(config))
    except flow.SingularityError as exc:
        return RunReport(config, "singular", {}, {}, prov, {"wall_time": time.perf_counter() - t_start},
                         getattr(exc, "trajectory", None), str(exc))
    t_flow = time.perf_counter() - t_start
    monitors: dict = {}
    constants: dict = {}
    mon = config.monitors
    sigma = scn.sigma

    if mon.positivity:
        def _pos():
            p = flow.scalar_positivity(traj)
            if not p["applies"]:
                return MonitorResult(True, "skipped: initial R is not nonnegative", p, skipped=True)
            ok = p["pass"]
            return MonitorResult(ok, f"min R {p['min_R']:.3e} {'>=' if ok else '<'} bound {p['bound']:.3e}", p)
        _guard("scalar_positivity", _pos, monitors)

    if mon.mass:
        def _mass():
            try:
                m0 = mass.adm_mass(traj.snapshots[0].profile).extrapolated
            except MassUndefinedError as exc:
                constants["masses"] = None
                return MonitorResult(True, f"skipped: mass undefined ({exc})", skipped=True)
            tol = mon.mass_tol * abs(m0) if abs(m0) > 1e-12 else 1e-10
            d = mass.mass_drift(traj, tol=tol)
            constants["masses"] = d.masses.tolist()
            vals = {"m0": float(d.masses[0]), "max_drift": d.max_drift, "relative_drift": d.relative_drift, "tol": tol}
            return MonitorResult(d.passed, f"max drift {d.max_drift:.3e} vs tol {tol:.3e}", vals)
        _guard("mass_drift", _mass, monitors)

    if mon.decay:
        def _decay():
            fits = {}
            for k in range(0, min(mon.k_max, 1) + 1):
                fits[k] = flow.monitor_decay(traj, k=k, window=(mon.decay_t_min, None))
            f0 = fits[0]
            if f0.degenerate:
                constants["delta0"] = None
                return MonitorResult(True, "curvature vanishes identically", {"degenerate": True})
            constants["delta0"] = f0.delta0
            vals = {f"slope_k{k}": f.slope for k, f in fits.items()}
            vals.update({f"delta0_k{k}": f.delta0 for k, f in fits.items()})
            ok = f0.delta0 > 0
            return MonitorResult(ok, f"sup|Rm| slope {f0.slope:.4f} ({'Type III' if ok else 'no Type III decay'})", vals)
        _guard("type_iii_decay", _decay, monitors)
        try:
            constants["eps"] = heat.type_iii_epsilon(traj)
        except Exception:
            constants["eps"] = None

    if mon.ae_order:
        def _ae():
            reps = flow.ae_order_series(traj, sigma)
            bad = [float(t) for t, r in zip(traj.times, reps) if not r.passed]
            orders = [r.fitted_order for r in reps]
            return MonitorResult(not bad, "order preserved" if not bad else f"order lost at t={bad[:3]}",
                                 {"min_fitted_order": float(np.min(orders))})
        _guard("ae_order", _ae, monitors)

    if mon.weighted:
        def _wc():
            sp_ = _sigma_prime(config, sigma)
            wc = flow.monitor_weighted_convergence(traj, sp_, k=1)
            return MonitorResult(wc.decreasing, f"C^1 weighted distance to g(t_end) "
                                 f"{'non-increasing' if wc.decreasing else 'increases'} after transient",
                                 {"sigma_prime": sp_, "first": float(wc.values[0])})
        _guard("weighted_convergence", _wc, monitors)

    if mon.mass_identity:
        def _mi():
            t = traj.times
            t_ref = 5.0
            if t[-1] < 10 * t_ref:
                return MonitorResult(True, f"skipped: needs t_end >= {10 * t_ref:g} for the gap trend",
                                     skipped=True)
            m0 = mass.adm_mass(traj.snapshots[0].profile).extrapolated
            mi = mass.scalar_mass_identity(traj, eta_radius=mon.eta_radius, m0=m0)
            ref = int(np.argmin(np.abs(t - t_ref)))
            g_ref, g_end = float(abs(mi.gap[ref])), float(abs(mi.gap[-1]))
            ok = bool(g_end < 0.5 * g_ref or g_end <= 1e-10)
            return MonitorResult(ok, f"|gap| {g_ref:.3e} at t={t[ref]:g} -> {g_end:.3e} at t={t[-1]:g}",
                                 {"gap_ref": g_ref, "gap_end": g_end, "t_ref": float(t[ref])})
        _guard("mass_identity", _mi, monitors)

    if mon.entropy:
        def _mu():
            tail = entropy.mu_tail(traj.snapshots[0].profile, mon.taus)
            constants["mu_series"] = {"taus": tail.taus.tolist(), "mu": tail.mus.tolist()}
            flat = bool(np.all(np.abs(tail.mus) <= 1e-6))
            ok = bool(tail.converged.all()) and (flat or (tail.trend_ok and tail.final_ok))
            why = (f"mu {tail.mus[0]:.4g} at tau={tail.taus[0]:g} -> {tail.mus[-1]:.4g} at tau={tail.taus[-1]:g}"
                   f"{', strictly increasing' if tail.increasing else ''}")
            if not tail.converged.all():
                why = "minimizer did not converge at some tau"
            return MonitorResult(ok, why,
                                 {"increasing": tail.increasing, "final_ok": tail.final_ok})
        _guard("mu_tail", _mu, monitors)

    if mon.heat:
        def _heat():
            sol = heat.solve_heat(traj, config.sigma)
            ly = heat.li_yau_check(sol)
            constants["c1"] = ly.c1
            vals = {"c1": ly.c1}
            lp_ok, _ = heat.lp_dissipation(sol)
            vals["lp_nonincreasing"] = lp_ok
            try:
                d = heat.decay_fit(sol)
                vals["sup_u_slope"] = d.slope
                ok = d.passed and lp_ok
                why = f"sup u slope {d.slope:.4f}, L^p {'non-increasing' if lp_ok else 'increases'}"
            except flow.WindowError as exc:
                ok, why = lp_ok, f"decay fit skipped ({exc})"
            return MonitorResult(ok, why, vals)
        _guard("heat", _heat, monitors)

    if mon.noncollapse:
        def _nc():
            rep = entropy.noncollapse_check(traj, list(mon.radii))
            constants["kappa"] = rep.kappa
            ok = bool(np.isfinite(rep.kappa) and rep.kappa > 0)
            return MonitorResult(ok, f"kappa = {rep.kappa:.4g}", {"kappa": rep.kappa})
        _guard("noncollapse", _nc, monitors)

    timing = {"wall_time": time.perf_counter() - t_start, "flow_time": t_flow}
    return RunReport(config, "ok", monitors, constants, prov, timing, traj, traj.message)


def threads_from_env(default: int | None = None) -> int:
    """Parallelism cap from ``AEFLOW_THREADS`` (default: CPU count)."""
    raw = os.environ.get("AEFLOW_THREADS")
    if raw:
        try:
            v = int(raw)
        except ValueError:
            raise ConfigError(f"AEFLOW_THREADS must be an integer, got {raw!r}") from None
        if v < 1:
            raise ConfigError("AEFLOW_THREADS must be at least 1")
        return v
    return default or os.cpu_count() or 1


def sweep(axis: str, values, config: Config, max_workers: int | None = None, runner=None) -> list:
    """Run one scenario per value of ``axis``; results keep the order of ``values``.

    ``axis`` is any config key, for example ``grid.N`` or ``scenario.amplitude``.
    ``runner`` maps a config to a result and defaults to
    ``run_scenario(None, cfg)``.
    """
    cfgs = [validate_config(config.with_value(axis, v)) for v in values]
    runner = runner or (lambda c: run_scenario(None, c))
    workers = max_workers or threads_from_env()
    if workers <= 1 or len(cfgs) <= 1:
        return [runner(c) for c in cfgs]
    with ThreadPoolExecutor(max_workers=min(workers, len(cfgs))) as ex:
        return list(ex.map(runner, cfgs))


def convergence_table(reports: list, key: str = "masses") -> list:
    """Observed orders ``log2(|q_N - q_2N| / |q_2N - q_4N|)`` of a scalar constant.

    Expects reports from a ``grid.N`` sweep with doubling values.
    """
    def scalar(rep):
        v = rep.constants.get(key)
        return v[-1] if isinstance(v, list) else v

    q = [scalar(r) for r in reports]
    rows = []
    for i in range(len(q) - 2):
        a, b = q[i] - q[i + 1], q[i + 1] - q[i + 2]
        order = float(np.log2(abs(a) / abs(b))) if a and b else float("nan")
        rows.append({"N": reports[i].config.grid_N, "value": q[i], "order": order})
    return rows
