"""Ricci flow of rotationally symmetric metrics and trajectory monitors.

The flow is integrated in the areal gauge ``psi = r``: the Ricci flow is
modified by the Lie derivative along ``X = xi(r, t) d/dr`` with

    xi = phi_r / phi^3 - (n - 2) (phi^-2 - 1) / r,

which keeps the orbit spheres at fixed coordinate radius.  Only ``phi``
evolves:

    phi_t = phi_rr / phi^2 - 2 phi_r^2 / phi^3 - (n-1) phi_r / (r phi^2)
            + (n-2) (1/phi^2 + 1) phi_r / r + (n-2) (1/phi - phi) / r^2.

Every geometric quantity monitored here is diffeomorphism invariant, so the
gauge does not change the observables.  The center is a Dirichlet node
(``phi = 1``) and the outer node obeys the Robin condition
``r q_r = -sigma q`` for ``q = phi - 1``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.integrate import BDF
from scipy.interpolate import CubicSpline

from . import _fd
from .geometry import (
    InvalidProfileError,
    MetricProfile,
    RadialField,
    ae_order_check,
    curvature,
    integrate,
    metric_deviation,
    weighted_norm,
)

log = logging.getLogger(__name__)


class SingularityError(RuntimeError):
    """The flow produced a non-positive or non-finite ``phi``.

    Attributes
    ----------
    node : int
        Offending node index.
    time : float
        Flow time at detection.
    trajectory : FlowTrajectory or None
        Partial trajectory up to the last good snapshot, when available.
    """

    def __init__(self, node: int, time: float, message: str = ""):
        super().__init__(message or f"singularity detected at node {node}, t={time:.6g}")
        self.node = node
        self.time = time
        self.trajectory = None


class WindowError(ValueError):
    """A fit window does not span enough time."""


# ---------------------------------------------------------------------------
# gauge handling
# ---------------------------------------------------------------------------


def is_areal(profile: MetricProfile) -> bool:
    return bool(np.array_equal(profile.psi, profile.r))


def to_areal(profile: MetricProfile) -> MetricProfile:
    """Rewrite a profile with ``psi = r`` on the same node set.

    The areal radius ``rho = psi(r)`` is used as coordinate; the new lapse is
    ``phi / psi_r`` evaluated at ``r(rho)`` by cubic-spline inversion.

    Raises
    ------
    InvalidProfileError
        If ``psi`` is not strictly increasing or does not reach ``r_max``.
    """
    if is_areal(profile):
        return profile
    profile.check_positive()
    r = profile.r
    psi = profile.psi
    pr = profile.jet.psi_r
    if np.any(pr <= 0) or np.any(np.diff(psi) <= 0):
        raise InvalidProfileError("psi is not monotone; areal radius is not a coordinate")
    if psi[-1] < r[-1]:
        raise InvalidProfileError("psi(r_max) < r_max; areal grid would leave the data range")
    r_of_rho = CubicSpline(psi, r)
    lapse = CubicSpline(r, profile.phi / pr)
    rho = profile.r
    phi = lapse(r_of_rho(rho))
    phi[0] = 1.0
    return MetricProfile(profile.grid, phi, rho.copy(), profile.sigma, profile.time)


def gauge_field(profile: MetricProfile) -> np.ndarray:
    """Radial component ``xi`` of the areal gauge vector field."""
    n = profile.n
    phi = profile.phi
    r = profile.r
    fr = profile.jet.phi_r
    out = np.zeros_like(r)
    out[1:] = fr[1:] / phi[1:] ** 3 - (n - 2) * (phi[1:] ** -2 - 1.0) / r[1:]
    return out


class _ArealSystem:
    """Method-of-lines right-hand side for the areal-gauge lapse."""

    def __init__(self, grid, n: int, sigma: float):
        self.grid = grid
        self.n = n
        self.sigma = sigma
        self.r = grid.nodes
        self.N = grid.N
        w = _fd.robin_weights()
        c = self.r[-1] / (grid.h * grid.r_xi[-1])
        self._rw = c * w[:-1]
        self._rden = c * w[-1] + sigma

    def close(self, phi: np.ndarray) -> np.ndarray:
        """Impose the center and Robin conditions in place."""
        phi[0] = 1.0
        q = phi[-5:-1] - 1.0
        phi[-1] = 1.0 - (self._rw @ q) / self._rden
        return phi

    def full(self, y: np.ndarray) -> np.ndarray:
        phi = np.empty(self.N + 1)
        phi[1 : self.N] = y
        return self.close(phi)

    def rates(self, phi: np.ndarray) -> np.ndarray:
        n, r = self.n, self.r
        fr, frr = self.grid.dr(phi - 1.0, +1)
        out = np.zeros_like(phi)
        p, a, b, rr = phi[1:], fr[1:], frr[1:], r[1:]
        out[1:] = (
            b / p**2
            - 2 * a**2 / p**3
            - (n - 1) * a / (rr * p**2)
            + (n - 2) * (1 / p**2 + 1) * a / rr
            + (n - 2) * (1 / p - p) / rr**2
        )
        return out

    def fun(self, t: float, y: np.ndarray) -> np.ndarray:
        return self.rates(self.full(y))[1 : self.N]

    def sparsity(self):
        m = self.N - 1
        return sp.diags([np.ones(m - abs(k)) for k in range(-5, 6)], list(range(-5, 6)))


def _check_phi(phi: np.ndarray, t: float) -> None:
    bad = np.flatnonzero(~np.isfinite(phi) | (phi <= 0))
    if bad.size:
        raise SingularityError(int(bad[0]), t)


# ---------------------------------------------------------------------------
# state and stepping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FlowState:
    profile: MetricProfile
    time: float = 0.0
    step_count: int = 0

    @classmethod
    def initial(cls, profile: MetricProfile) -> "FlowState":
        prof = to_areal(profile)
        return cls(prof, prof.time, 0)


def stability_bound(profile: MetricProfile, c_cfl: float = 0.2) -> float:
    """Largest explicit step ``c_cfl * min(ds)^2`` for the profile."""
    ds = np.diff(profile.r) * 0.5 * (profile.phi[1:] + profile.phi[:-1])
    return c_cfl * float(ds.min()) ** 2


def step(state: FlowState, dt: float, c_cfl: float = 0.2) -> FlowState:
    """One explicit RK4 step of the areal-gauge flow.

    Raises
    ------
    ValueError
        If ``dt`` exceeds the stability bound.
    SingularityError
        If ``phi`` becomes non-positive or non-finite.
    """
    prof = to_areal(state.profile)
    bound = stability_bound(prof, c_cfl)
    if dt > bound * (1 + 1e-12):
        raise ValueError(f"dt={dt:.3e} exceeds the stability bound {bound:.3e}")
    sys_ = _ArealSystem(prof.grid, prof.n, prof.sigma)
    phi = np.array(prof.phi)
    t = state.time
    phi = _rk4(sys_, phi, dt, t)
    new = MetricProfile(prof.grid, phi, prof.psi, prof.sigma, t + dt)
    return FlowState(new, t + dt, state.step_count + 1)


def _rk4(sys_: _ArealSystem, phi: np.ndarray, dt: float, t: float) -> np.ndarray:
    def f(p):
        return sys_.rates(sys_.close(p))

    k1 = f(phi.copy())
    k2 = f(phi + 0.5 * dt * k1)
    k3 = f(phi + 0.5 * dt * k2)
    k4 = f(phi + dt * k3)
    out = sys_.close(phi + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))
    _check_phi(out, t + dt)
    return out


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

SERIES_NAMES = (
    "mass",
    "min_R",
    "sup_R",
    "sup_rm",
    "sup_t_rm",
    "weighted_norm_sigma_prime",
    "integral_R_dV",
    "integral_2Ric2_minus_R2",
    "integral_R2_dV",
)


@dataclass
class RunControls:
    """Integration and monitoring settings for :func:`run`.

    Attributes
    ----------
    method : {"bdf", "rk4"}
        Time integrator.  ``"bdf"`` is an adaptive implicit scheme whose
        error is controlled by ``rtol``/``atol``; ``"rk4"`` is explicit with
        ``dt = c_cfl * min(ds)^2``.
    snapshot_times : sequence of float, optional
        Explicit output times.  When omitted, outputs are placed every
        ``snapshot_dt`` (if set) and at ``per_decade`` log-spaced times.
    k_max : int
        Highest derivative order ``k`` tracked as ``sup |nabla^k Rm|``.
    sigma_prime : float, optional
        Weight for the ``C^1_{-sigma'}`` norm series; default ``0.9 sigma``.
    track_steps : bool
        Record ``min R`` after every accepted step.
    """

    method: str = "bdf"
    rtol: float = 1e-10
    atol: float = 1e-13
    c_cfl: float = 0.2
    snapshot_dt: float | None = None
    snapshot_times: tuple | None = None
    per_decade: int = 8
    t_min_log: float = 0.1
    k_max: int = 1
    sigma_prime: float | None = None
    monitors: bool = True
    track_steps: bool = True
    max_steps: int = 10_000_000

    def times(self, t0: float, t_end: float) -> np.ndarray:
        if self.snapshot_times is not None:
            ts = np.asarray(sorted(self.snapshot_times), dtype=float)
        else:
            pts = [t0, t_end]
            if self.snapshot_dt:
                pts.extend(np.arange(t0, t_end, self.snapshot_dt)[1:])
            if self.per_decade and t_end > self.t_min_log:
                lo = math.log10(max(self.t_min_log, t0) if t0 > 0 else self.t_min_log)
                hi = math.log10(t_end)
                k = max(int(math.ceil((hi - lo) * self.per_decade)), 1)
                pts.extend(10 ** np.linspace(lo, hi, k + 1))
            ts = np.unique(np.round(np.asarray(pts, dtype=float), 12))
        ts = ts[(ts >= t0) & (ts <= t_end)]
        if ts.size == 0 or ts[0] != t0:
            ts = np.r_[t0, ts]
        return ts


@dataclass
class FlowTrajectory:
    """Time-ordered snapshots with monitor series.

    Attributes
    ----------
    snapshots : list of FlowState
    series : dict of str -> ndarray
        One entry per snapshot for every name in :data:`SERIES_NAMES`
        and ``sup_grad_rm_<k>``.
    step_min_R : ndarray, shape (m, 2)
        ``(t, min R)`` after every accepted step.
    interpolant : callable or None
        ``t -> phi`` at all nodes, continuous in time (dense output of the
        integrator).  ``None`` for trajectories read from disk.
    """

    snapshots: list
    series: dict
    step_min_R: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    interpolant: Callable | None = None
    controls: RunControls | None = None
    status: str = "ok"
    message: str = ""
    initial_profile: MetricProfile | None = None

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])

    @property
    def n(self) -> int:
        return self.snapshots[0].profile.n

    @property
    def grid(self):
        return self.snapshots[0].profile.grid

    def profile_at(self, t: float) -> MetricProfile:
        """Areal profile at time ``t`` (dense output or linear in time)."""
        base = self.snapshots[0].profile
        phi = self.phi_at(t)
        return MetricProfile(base.grid, phi, base.psi, base.sigma, float(t))

    def phi_at(self, t: float) -> np.ndarray:
        ts = self.times
        if t < ts[0] - 1e-12 or t > ts[-1] + 1e-12:
            raise ValueError(f"time {t} outside the trajectory")
        if self.interpolant is not None:
            return self.interpolant(t)
        j = int(np.searchsorted(ts, t))
        if j < ts.size and abs(ts[j] - t) <= 1e-12:
            return np.array(self.snapshots[j].profile.phi)
        j = min(max(j, 1), ts.size - 1)
        t0, t1 = ts[j - 1], ts[j]
        w = (t - t0) / (t1 - t0)
        return (1 - w) * self.snapshots[j - 1].profile.phi + w * self.snapshots[j].profile.phi

    def snapshot_near(self, t: float) -> FlowState:
        return self.snapshots[int(np.argmin(np.abs(self.times - t)))]


def snapshot_monitors(profile: MetricProfile, sigma_prime: float, k_max: int = 1) -> dict:
    """Monitor values of one profile (see :data:`SERIES_NAMES`)."""
    from .mass import adm_mass

    n = profile.n
    t = profile.time
    cf = curvature(profile, k_max)
    try:
        m = adm_mass(profile, check=False).extrapolated
    except Exception as exc:  # mass fit failure is a monitor value, not a crash
        log.debug("mass extrapolation failed at t=%g: %s", t, exc)
        m = float("nan")
    dev = metric_deviation(profile, 1)
    wn = weighted_norm(dev, -sigma_prime, 1, 1.0).value
    ric2 = cf.ric_sq(n)
    out = {
        "mass": m,
        "min_R": float(cf.R.min()),
        "sup_R": float(np.abs(cf.R).max()),
        "sup_rm": float(cf.rm_norm.max()),
        "sup_t_rm": float((1 + t) * cf.rm_norm.max()),
        "weighted_norm_sigma_prime": wn,
        "integral_R_dV": integrate(profile, cf.R),
        "integral_2Ric2_minus_R2": integrate(profile, 2 * ric2 - cf.R**2),
        "integral_R2_dV": integrate(profile, cf.R**2),
    }
    for k in range(1, k_max + 1):
        out[f"sup_grad_rm_{k}"] = float(cf.grad_rm_norms[k].max())
    return out


def run(state: FlowState | MetricProfile, t_end: float, controls: RunControls | None = None) -> FlowTrajectory:
    """Integrate the flow to ``t_end`` and collect monitored snapshots.

    Raises
    ------
    SingularityError
        If ``phi`` degenerates; ``err.trajectory`` holds the partial result.
    """
    controls = controls or RunControls()
    if isinstance(state, MetricProfile):
        state = FlowState.initial(state)
    initial_profile = state.profile
    prof = to_areal(state.profile)
    if t_end <= state.time:
        raise ValueError("t_end must exceed the initial time")
    sigma_prime = controls.sigma_prime if controls.sigma_prime is not None else 0.9 * prof.sigma
    sys_ = _ArealSystem(prof.grid, prof.n, prof.sigma)
    out_times = controls.times(state.time, t_end)
    snapshots: list[FlowState] = []
    step_log: list[tuple[float, float]] = []

    def record(t, phi, count):
        p = MetricProfile(prof.grid, phi, prof.psi, prof.sigma, float(t))
        snapshots.append(FlowState(p, float(t), count))

    def track(t, phi):
        if controls.track_steps:
            p = MetricProfile(prof.grid, phi, prof.psi, prof.sigma, float(t))
            step_log.append((float(t), float(curvature(p).R.min())))

    phi0 = sys_.close(np.array(prof.phi))
    record(state.time, phi0, state.step_count)
    track(state.time, phi0)
    interp = None
    status, message = "ok", ""
    try:
        if controls.method == "bdf":
            interp = _run_bdf(sys_, phi0, state, t_end, out_times, controls, record, track)
        elif controls.method == "rk4":
            _run_rk4(sys_, phi0, state, t_end, out_times, controls, record, track)
        else:
            raise ValueError(f"unknown method {controls.method!r}")
    except SingularityError as err:
        status, message = "singular", str(err)
        traj = _assemble(snapshots, step_log, None, controls, sigma_prime, status, message, initial_profile)
        err.trajectory = traj
        raise
    return _assemble(snapshots, step_log, interp, controls, sigma_prime, status, message, initial_profile)


def _run_bdf(sys_, phi0, state, t_end, out_times, controls, record, track):
    N = sys_.N
    solver = BDF(
        sys_.fun,
        state.time,
        phi0[1:N].copy(),
        t_end,
        rtol=controls.rtol,
        atol=controls.atol,
        jac_sparsity=sys_.sparsity(),
    )
    ts_dense = [state.time]
    dense = []
    j = 1
    count = state.step_count
    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            raise SingularityError(-1, solver.t, f"integrator failed at t={solver.t:.6g}: {msg}")
        count += 1
        if count - state.step_count > controls.max_steps:
            raise RuntimeError("maximum number of steps exceeded")
        phi = sys_.full(solver.y)
        _check_phi(phi, solver.t)
        track(solver.t, phi)
        do = solver.dense_output()
        ts_dense.append(solver.t)
        dense.append(do)
        while j < out_times.size and out_times[j] <= solver.t + 1e-14:
            tj = out_times[j]
            y = solver.y if tj >= solver.t else do(tj)
            record(tj, sys_.full(np.array(y)), count)
            j += 1
    return _PiecewiseDense(np.array(ts_dense), dense, sys_)


class _PiecewiseDense:
    def __init__(self, ts, pieces, sys_):
        self.ts = ts
        self.pieces = pieces
        self.sys_ = sys_

    def __call__(self, t: float) -> np.ndarray:
        i = int(np.searchsorted(self.ts, t, side="left")) - 1
        i = min(max(i, 0), len(self.pieces) - 1)
        return self.sys_.full(np.asarray(self.pieces[i](t)))


def _run_rk4(sys_, phi0, state, t_end, out_times, controls, record, track):
    base = MetricProfile(sys_.grid, phi0, sys_.r.copy(), sys_.sigma, state.time)
    phi = phi0
    t = state.time
    count = state.step_count
    j = 1
    while j < out_times.size:
        dt_max = stability_bound(MetricProfile(base.grid, phi, base.psi, base.sigma), controls.c_cfl)
        target = out_times[j]
        dt = min(dt_max, target - t)
        phi = _rk4(sys_, phi, dt, t)
        t = target if dt == target - t else t + dt
        count += 1
        track(t, phi)
        if t >= target:
            record(target, phi.copy(), count)
            j += 1


def _assemble(snapshots, step_log, interp, controls, sigma_prime, status, message, initial_profile):
    series: dict[str, list] = {}
    if controls.monitors:
        for s in snapshots:
            vals = snapshot_monitors(s.profile, sigma_prime, controls.k_max)
            for k, v in vals.items():
                series.setdefault(k, []).append(v)
    series = {k: np.asarray(v) for k, v in series.items()}
    return FlowTrajectory(
        snapshots,
        series,
        np.asarray(step_log).reshape(-1, 2),
        interp,
        controls,
        status,
        message,
        initial_profile,
    )


# ---------------------------------------------------------------------------
# monitors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    """Power-law fit ``sup |nabla^k Rm| ~ C0 (1 + t)^slope``.

    ``delta0 = -slope - 1 - k/2``; ``degenerate`` marks an identically flat
    trajectory, for which no exponent is defined.
    """

    C0: float
    delta0: float
    k: int
    window: tuple
    residual: float
    slope: float
    degenerate: bool = False


def monitor_decay(trajectory: FlowTrajectory, k: int = 0, window: tuple = (1.0, None)) -> DecayFit:
    """Fit the decay exponent of ``sup |nabla^k Rm|`` against ``1 + t``.

    Raises
    ------
    WindowError
        If the window holds fewer than three snapshots or spans less than a
        decade in ``t``.
    """
    key = "sup_rm" if k == 0 else f"sup_grad_rm_{k}"
    if key not in trajectory.series:
        raise ValueError(f"trajectory has no series {key!r}; rerun with k_max >= {k}")
    t = trajectory.times
    y = np.asarray(trajectory.series[key])
    lo = window[0]
    hi = window[1] if window[1] is not None else t[-1]
    if np.all(y <= 1e-12):
        return DecayFit(0.0, float("nan"), k, (lo, hi), 0.0, float("nan"), True)
    m = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    if m.sum() < 3 or lo <= 0 or hi / lo < 10 - 1e-9:
        raise WindowError(f"decay fit needs a window of at least one decade, got [{lo}, {hi}]")
    X = np.log1p(t[m])
    Y = np.log(y[m])
    slope, icpt = np.polyfit(X, Y, 1)
    res = float(np.sqrt(np.mean((Y - (slope * X + icpt)) ** 2)))
    return DecayFit(float(np.exp(icpt)), float(-slope - 1 - k / 2), k, (lo, hi), res, float(slope))


@dataclass(frozen=True)
class WeightedConvergence:
    times: np.ndarray
    values: np.ndarray
    decreasing: bool


def monitor_weighted_convergence(
    trajectory: FlowTrajectory, sigma_prime: float, k: int = 1, t_transient: float = 1.0, r_floor: float = 1.0
) -> WeightedConvergence:
    """``C^k_{-sigma'}`` norms of ``g(t) - g(t_end)`` along the trajectory."""
    n = trajectory.n
    sigma = trajectory.snapshots[0].profile.sigma
    if not ((n - 2) / 2 < sigma_prime < sigma):
        raise ValueError(f"sigma' must lie in (({n}-2)/2, sigma={sigma})")
    last = trajectory.snapshots[-1].profile
    dev_last = metric_deviation(last, k)
    vals = []
    for s in trajectory.snapshots:
        dev = metric_deviation(s.profile, k)
        diff = RadialField(dev.r, tuple(a - b for a, b in zip(dev.derivs, dev_last.derivs)))
        vals.append(weighted_norm(diff, -sigma_prime, k, r_floor).value)
    vals = np.asarray(vals)
    t = trajectory.times
    tail = vals[t >= t_transient]
    decreasing = bool(np.all(np.diff(tail) <= 1e-14 * max(1.0, tail.max(initial=0.0))))
    return WeightedConvergence(t, vals, decreasing)


@dataclass(frozen=True)
class RigidityReport:
    """``int (2|Rc|^2 - R^2) dV`` against ``d/dt int R dV``.

    ``rel_err`` compares the series with a centered time difference of
    ``int R dV``; ``lower_bound_ok`` checks ``>= -((n-2)/n) int R^2 dV``.
    """

    times: np.ndarray
    integrand: np.ndarray
    dIdt: np.ndarray
    rel_err: float
    lower_bound_ok: bool


def rigidity_integrand(trajectory: FlowTrajectory, t_min: float = 0.5) -> RigidityReport:
    """Series of ``int (2|Rc|^2 - R^2) dV`` with its consistency checks."""
    n = trajectory.n
    t = trajectory.times
    s = trajectory.series
    if "integral_2Ric2_minus_R2" in s:
        J = np.asarray(s["integral_2Ric2_minus_R2"])
        R2 = np.asarray(s["integral_R2_dV"])
    else:
        J, R2 = [], []
        for st in trajectory.snapshots:
            cf = curvature(st.profile)
            J.append(integrate(st.profile, 2 * cf.ric_sq(n) - cf.R**2))
            R2.append(integrate(st.profile, cf.R**2))
        J, R2 = np.asarray(J), np.asarray(R2)
    ok = bool(np.all(J >= -((n - 2) / n) * R2 - 1e-12 * (1 + np.abs(R2))))

    def IR(tt):
        p = trajectory.profile_at(tt)
        return integrate(p, curvature(p).R)

    dI = np.full(t.size, np.nan)
    for i, ti in enumerate(t):
        if ti < t_min or ti <= t[0]:
            continue
        if trajectory.interpolant is not None:
            d = 1e-3 * max(ti, 1.0)
            if ti + d > t[-1]:
                d = min(d, t[-1] - ti) if t[-1] > ti else d
                if ti + d > t[-1] or d <= 0:
                    continue
            dI[i] = (IR(ti + d) - IR(ti - d)) / (2 * d)
        elif 0 < i < t.size - 1:
            dI[i] = (IR(t[i + 1]) - IR(t[i - 1])) / (t[i + 1] - t[i - 1])
    m = np.isfinite(dI)
    if m.any():
        scale = np.maximum(np.abs(J[m]), 1e-300)
        rel = float(np.max(np.abs(dI[m] - J[m]) / scale))
    else:
        rel = float("nan")
    return RigidityReport(t, J, dI, rel, ok)


def scalar_positivity(trajectory: FlowTrajectory, tol_factor: float = 1e-8) -> dict:
    """Minimum of ``R`` over all accepted steps against ``-tol * max(1, sup|R(0)|)``."""
    sl = trajectory.step_min_R
    minR = float(sl[:, 1].min()) if sl.size else float(np.min(trajectory.series["min_R"]))
    R0 = curvature(trajectory.snapshots[0].profile).R
    bound = -tol_factor * max(1.0, float(np.abs(R0).max()))
    applies = bool(R0.min() >= -1e-10 * max(1.0, np.abs(R0).max()))
    return {"min_R": minR, "bound": bound, "applies": applies, "pass": (not applies) or minR >= bound}


def ae_order_series(trajectory: FlowTrajectory, sigma: float | None = None) -> list:
    """AE-order reports at every snapshot."""
    sig = trajectory.snapshots[0].profile.sigma if sigma is None else sigma
    return [ae_order_check(s.profile, sig) for s in trajectory.snapshots]


def rescaled_state(state: FlowState, lam: float) -> FlowState:
    """State of ``lam^2 g`` via the dilation ``r -> lam r``."""
    from .geometry import dilate_profile

    p = dilate_profile(state.profile, lam)
    return replace(state, profile=p, time=state.time * lam**2)
