"""Heat equation coupled to a flow trajectory and its a-priori estimates.

Along an areal-gauge trajectory the scalar heat equation becomes

    u_t = Lap_{g(t)} u + xi u_r,

where ``xi`` is the gauge field of :mod:`aeflow.flow`; a point of the
manifold that is fixed in the original flow moves in the areal coordinate
with ``dr/dt = -xi``.  On a static metric ``xi = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import BDF, solve_ivp
from scipy.interpolate import CubicSpline

from . import _fd
from .flow import FlowState, FlowTrajectory, gauge_field
from .geometry import MetricProfile, curvature, integrate, radial_distance


class HeatError(RuntimeError):
    """The heat solution lost positivity or the integrator failed."""


#: Values below this fraction of ``sup u`` are unresolved (underflow or
#: integrator noise); ratio diagnostics skip them and only values below its
#: negative count as lost positivity.
POSITIVITY_FLOOR = 1e-14


def resolved(u: np.ndarray) -> np.ndarray:
    """Mask of nodes where ``u`` exceeds :data:`POSITIVITY_FLOOR` times its sup."""
    return u > POSITIVITY_FLOOR * np.max(u)


def capped_power(r: np.ndarray, sigma: float, r_cap: float = 1.0) -> np.ndarray:
    """``r^(-2-sigma)`` outside ``r_cap``; an even quartic inside.

    The quartic matches value, first and second derivative at ``r_cap`` and
    is smooth through the center.
    """
    p = 2.0 + sigma
    r = np.asarray(r, dtype=float)
    x = r / r_cap
    c4 = p * (p + 2) / 8.0
    c2 = (-p - 4 * c4) / 2.0
    c0 = 1.0 - c2 - c4
    inner = (c0 + c2 * x**2 + c4 * x**4) * r_cap ** (-p)
    with np.errstate(divide="ignore"):
        outer = np.where(r > 0, r, 1.0) ** (-p)
    return np.where(x < 1.0, inner, outer)


def static_trajectory(profile: MetricProfile, t_end: float) -> FlowTrajectory:
    """Trajectory of a metric held fixed in time (no flow, no gauge field)."""
    p0 = profile.with_time(0.0)
    p1 = profile.with_time(float(t_end))
    phi = np.array(profile.phi)
    traj = FlowTrajectory([FlowState(p0, 0.0, 0), FlowState(p1, float(t_end), 0)], {}, interpolant=lambda t: phi)
    traj.static = True
    return traj


@dataclass
class HeatSolution:
    """Heat solution sampled at ``times`` with its diagnostic series.

    Attributes
    ----------
    trajectory : FlowTrajectory
    sigma : float
        Decay order of the initial datum and of the outer Robin condition.
    times : ndarray
    u : ndarray, shape (len(times), N + 1)
    diagnostics : dict of str -> ndarray
        ``sup_u_decay`` (``sup u``), ``li_yau_sup`` (sup of the Li-Yau quantity),
        ``w_ratio_sup`` (``sup |Rm|^2 / u^2``), ``lp_integral``.
    p : float
        Exponent of the ``L^p`` monitor.
    """

    trajectory: FlowTrajectory
    sigma: float
    times: np.ndarray
    u: np.ndarray
    diagnostics: dict
    p: float
    dense: object = field(default=None, repr=False)
    static: bool = False

    def u_at(self, t: float) -> np.ndarray:
        if self.dense is not None:
            return self.dense(t)
        j = int(np.clip(np.searchsorted(self.times, t), 1, self.times.size - 1))
        t0, t1 = self.times[j - 1], self.times[j]
        w = (t - t0) / (t1 - t0)
        return (1 - w) * self.u[j - 1] + w * self.u[j]


class _HeatSystem:
    def __init__(self, trajectory: FlowTrajectory, sigma: float, static: bool):
        self.traj = trajectory
        base = trajectory.snapshots[0].profile
        self.base = base
        self.grid = base.grid
        self.n = base.n
        self.N = self.grid.N
        self.static = static
        w = _fd.robin_weights()
        c = self.grid.r_max / (self.grid.h * self.grid.r_xi[-1])
        self._rw = c * w[:-1]
        self._rden = c * w[-1] + (2.0 + sigma)
        self._cache_t = None
        self._cache = None
        if static:
            self._static_ops = self._ops_for(base)

    def close(self, u: np.ndarray) -> np.ndarray:
        u[-1] = -(self._rw @ u[-5:-1]) / self._rden
        return u

    def full(self, y: np.ndarray) -> np.ndarray:
        u = np.empty(self.N + 1)
        u[: self.N] = y
        return self.close(u)

    def _ops_for(self, prof: MetricProfile):
        j = prof.jet
        n = self.n
        phi = prof.phi
        coef = np.zeros_like(phi)
        coef[1:] = (n - 1) * j.psi_s[1:] / prof.psi[1:] / phi[1:]
        xi = np.zeros_like(phi) if self.static else gauge_field(prof)
        return phi, j.phi_r, coef, xi

    def ops(self, t: float):
        if self.static:
            return self._static_ops
        if self._cache_t != t:
            self._cache = self._ops_for(self.traj.profile_at(min(max(t, 0.0), self.traj.times[-1])))
            self._cache_t = t
        return self._cache

    def laplacian(self, u: np.ndarray, ops) -> tuple[np.ndarray, np.ndarray]:
        phi, phi_r, coef, _ = ops
        ur, urr = self.grid.dr(u, +1)
        lap = urr / phi**2 - phi_r * ur / phi**3 + coef * ur
        lap[0] = self.n * urr[0] / phi[0] ** 2
        return lap, ur

    def fun(self, t: float, y: np.ndarray) -> np.ndarray:
        u = self.full(y)
        ops = self.ops(t)
        lap, ur = self.laplacian(u, ops)
        return (lap + ops[3] * ur)[: self.N]

    def sparsity(self):
        m = self.N
        return sp.diags([np.ones(m - abs(k)) for k in range(-5, 6)], list(range(-5, 6)))


class _Dense:
    def __init__(self, ts, pieces, sys_):
        self.ts, self.pieces, self.sys_ = np.asarray(ts), pieces, sys_

    def __call__(self, t):
        i = int(np.clip(np.searchsorted(self.ts, t) - 1, 0, len(self.pieces) - 1))
        return self.sys_.full(np.asarray(self.pieces[i](t)))


def _sample_times(trajectory: FlowTrajectory, per_decade: int = 16, t_min: float = 0.1) -> np.ndarray:
    t = trajectory.times
    T = t[-1]
    pts = [t]
    if T > t_min:
        k = max(int(math.ceil(math.log10(T / t_min) * per_decade)), 1)
        pts.append(np.geomspace(t_min, T, k + 1))
    return np.unique(np.round(np.concatenate(pts), 12))


def solve_heat(
    trajectory: FlowTrajectory,
    sigma: float,
    u0=None,
    times=None,
    p: float | None = None,
    rtol: float = 1e-10,
    atol: float = 1e-18,
    method: str = "bdf",
) -> HeatSolution:
    """Solve the heat equation along a trajectory.

    Parameters
    ----------
    trajectory : FlowTrajectory
        Areal-gauge flow, or a :func:`static_trajectory`.
    sigma : float
        Initial datum ``r^(-2-sigma)`` (capped) and Robin exponent ``2 + sigma``.
    u0 : ndarray or callable, optional
        Replaces the default initial datum.
    times : sequence of float, optional
        Output times; default merges the trajectory times with a log grid.
    p : float, optional
        ``L^p`` exponent; default the midpoint of ``(n/(2+sigma), n/2)``.
    method : {"bdf", "rk4"}

    Raises
    ------
    ValueError
        If ``p`` lies outside ``(n/(2+sigma), n/2)``.
    HeatError
        If ``u`` becomes non-positive or non-finite.
    """
    static = bool(getattr(trajectory, "static", False))
    base = trajectory.snapshots[0].profile
    n = base.n
    r = base.r
    if u0 is None:
        v0 = capped_power(r, sigma)
    else:
        v0 = np.asarray(u0(r) if callable(u0) else u0, dtype=float)
    if p is None:
        p = 0.5 * (n / (2 + sigma) + n / 2)
    if not (n / (2 + sigma) < p < n / 2):
        raise ValueError(f"p={p} must lie in (n/(2+sigma), n/2) = ({n / (2 + sigma):.6g}, {n / 2:.6g})")
    sys_ = _HeatSystem(trajectory, sigma, static)
    v0 = sys_.close(v0.copy())
    t0, T = trajectory.times[0], trajectory.times[-1]
    ts = _sample_times(trajectory) if times is None else np.asarray(sorted(times), dtype=float)
    ts = ts[(ts >= t0) & (ts <= T)]
    if ts[0] != t0:
        ts = np.r_[t0, ts]
    out = np.empty((ts.size, r.size))
    out[0] = v0
    dense = None
    if method == "bdf":
        solver = BDF(sys_.fun, t0, v0[: sys_.N].copy(), T, rtol=rtol, atol=atol, jac_sparsity=sys_.sparsity())
        dts, pieces = [t0], []
        j = 1
        while solver.status == "running":
            msg = solver.step()
            if solver.status == "failed":
                raise HeatError(f"heat integrator failed at t={solver.t:.6g}: {msg}")
            do = solver.dense_output()
            dts.append(solver.t)
            pieces.append(do)
            while j < ts.size and ts[j] <= solver.t + 1e-14:
                y = solver.y if ts[j] >= solver.t else do(ts[j])
                out[j] = sys_.full(np.array(y))
                j += 1
        dense = _Dense(dts, pieces, sys_)
    elif method == "rk4":
        _rk4_heat(sys_, v0, ts, out)
    else:
        raise ValueError(f"unknown method {method!r}")
    bad = ~np.isfinite(out) | (out < -POSITIVITY_FLOOR * np.abs(out).max(axis=1, keepdims=True))
    if bad.any():
        k, i = np.argwhere(bad)[0]
        raise HeatError(f"positivity lost at node {i}, t={ts[k]:.6g}")
    sol = HeatSolution(trajectory, float(sigma), ts, out, {}, float(p), dense, static)
    sol.diagnostics = _diagnostics(sol, sys_)
    return sol


def _rk4_heat(sys_: _HeatSystem, v0, ts, out):
    u = v0.copy()
    t = ts[0]
    j = 1

    def f(tt, uu):
        g = np.zeros_like(uu)
        g[: sys_.N] = sys_.fun(tt, uu[: sys_.N])
        return g

    while j < ts.size:
        phi = sys_.ops(t)[0]
        ds = np.diff(sys_.grid.nodes) * 0.5 * (phi[1:] + phi[:-1])
        dt = min(0.2 * float(ds.min()) ** 2, ts[j] - t)
        k1 = f(t, u)
        k2 = f(t + dt / 2, sys_.close(u + dt / 2 * k1))
        k3 = f(t + dt / 2, sys_.close(u + dt / 2 * k2))
        k4 = f(t + dt, sys_.close(u + dt * k3))
        u = sys_.close(u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4))
        t = ts[j] if dt == ts[j] - t else t + dt
        if t >= ts[j]:
            out[j] = u
            j += 1


def _profile_at(sol: HeatSolution, t: float) -> MetricProfile:
    if sol.static:
        return sol.trajectory.snapshots[0].profile.with_time(t)
    return sol.trajectory.profile_at(t)


def li_yau_field(sol: HeatSolution, u: np.ndarray, t: float, sys_: _HeatSystem | None = None) -> np.ndarray:
    """``|grad u|^2 / u^2 - 2 u_t / u`` with ``u_t = Lap u`` (gauge invariant)."""
    sys_ = sys_ or _HeatSystem(sol.trajectory, sol.sigma, sol.static)
    prof = _profile_at(sol, t)
    ops = sys_._ops_for(prof)
    lap, ur = sys_.laplacian(u, ops)
    us = ur / prof.phi
    out = np.full_like(u, np.nan)
    m = resolved(u)
    out[m] = us[m] ** 2 / u[m] ** 2 - 2 * lap[m] / u[m]
    return out


def _diagnostics(sol: HeatSolution, sys_: _HeatSystem) -> dict:
    sup_u, ly, wr, lp = [], [], [], []
    for t, u in zip(sol.times, sol.u):
        prof = _profile_at(sol, t)
        sup_u.append(float(u.max()))
        ly.append(float(np.nanmax(li_yau_field(sol, u, t, sys_))))
        rm = curvature(prof).rm_norm
        m = resolved(u)
        wr.append(float(np.max(rm[m] ** 2 / u[m] ** 2)))
        lp.append(integrate(prof, np.clip(u, 0.0, None) ** sol.p))
    return {
        "sup_u_decay": np.array(sup_u),
        "li_yau_sup": np.array(ly),
        "w_ratio_sup": np.array(wr),
        "lp_integral": np.array(lp),
    }


@dataclass(frozen=True)
class LiYauReport:
    times: np.ndarray
    series: np.ndarray
    c1: float
    t_min: float


def li_yau_check(sol: HeatSolution, t_min: float = 0.1, t_origin: float = 0.0) -> LiYauReport:
    """Series ``(t - t_origin) sup (|grad u|^2/u^2 - 2 u_t/u)`` and ``c1``, its sup for ``t >= t_min``.

    ``t_origin`` is the time at which the solution started; a heat kernel
    datum ``H(., t0)`` imposed at ``t = 0`` has ``t_origin = -t0``.
    """
    t = sol.times
    s = (t - t_origin) * sol.diagnostics["li_yau_sup"]
    m = t >= t_min - 1e-12
    return LiYauReport(t[m], s[m], float(s[m].max()), t_min)


def type_iii_epsilon(trajectory: FlowTrajectory, t_lo: float = 0.0) -> float:
    """Smallest ``eps`` with ``sup |Rm| <= eps / (1 + t)`` over the window."""
    t = trajectory.times
    if "sup_t_rm" in trajectory.series:
        s = np.asarray(trajectory.series["sup_t_rm"])
    else:
        s = np.array([(1 + st.time) * curvature(st.profile).rm_norm.max() for st in trajectory.snapshots])
    return float(s[t >= t_lo].max())


def transport(sol: HeatSolution, r0: float, t1: float, t2: float) -> float:
    """Areal coordinate at ``t2`` of the point sitting at ``r0`` at ``t1``."""
    if sol.static or t2 == t1:
        return float(r0)

    def rhs(t, y):
        prof = sol.trajectory.profile_at(t)
        xi = gauge_field(prof)
        return [-float(np.interp(y[0], prof.r, xi))]

    res = solve_ivp(rhs, (t1, t2), [r0], rtol=1e-9, atol=1e-12)
    return float(res.y[0, -1])


def _u_at_r(sol: HeatSolution, t: float, r: float) -> float:
    u = sol.u_at(t)
    grid = sol.trajectory.snapshots[0].profile.grid
    return float(np.exp(CubicSpline(grid.nodes, np.log(u))(r)))


@dataclass(frozen=True)
class HarnackPair:
    x: float
    t1: float
    y: float
    t2: float
    margin: float


def harnack_check(sol: HeatSolution, pairs=None, c1: float | None = None, eps: float | None = None,
                  n_pairs: int = 100, seed: int = 0, r_range=(0.0, 50.0), t_range=None) -> list:
    """Margins ``log LHS - log RHS`` of the Harnack inequality.

    ``pairs`` holds ``(x, t1, y, t2)`` with ``x`` and ``y`` areal radii on
    one ray, both read at time ``t1``.  The point ``y`` is transported with
    the gauge flow to ``t2`` before ``u`` is evaluated.  Random pairs are
    drawn when ``pairs`` is ``None``.
    """
    if c1 is None:
        c1 = li_yau_check(sol).c1
    if eps is None:
        eps = 0.0 if sol.static else type_iii_epsilon(sol.trajectory)
    if pairs is None:
        rng = np.random.default_rng(seed)
        lo, hi = t_range or (0.1, float(sol.times[-1]))
        pairs = []
        for _ in range(n_pairs):
            t1, t2 = np.sort(rng.uniform(lo, hi, 2))
            x, y = rng.uniform(*r_range, 2)
            pairs.append((float(x), float(t1), float(y), float(t2)))
    out = []
    for x, t1, y, t2 in pairs:
        prof1 = _profile_at(sol, t1)
        d = abs(radial_distance(prof1, y) - radial_distance(prof1, x))
        y2 = transport(sol, y, t1, t2)
        lhs = math.log(_u_at_r(sol, t2, y2)) - math.log(_u_at_r(sol, t1, x))
        dt = t2 - t1
        if dt <= 0:
            rhs = 0.0 if d == 0 else -math.inf
        else:
            rhs = -0.5 * c1 * math.log(t2 / t1) - d**2 * (1 + dt) ** (2 * eps) / (2 * dt)
        out.append(HarnackPair(x, t1, y, t2, lhs - rhs))
    return out


@dataclass(frozen=True)
class HeatDecay:
    slope: float
    delta: float
    C: float
    decaying: bool
    passed: bool
    window: tuple


def decay_fit(sol: HeatSolution, window: tuple = (1.0, None)) -> HeatDecay:
    """Log-log fit of ``sup u`` against ``1 + t``; passes when the slope is ``<= -1``."""
    from .flow import WindowError

    t = sol.times
    lo = window[0]
    hi = window[1] if window[1] is not None else t[-1]
    m = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    if m.sum() < 3 or hi / lo < 10 - 1e-9:
        raise WindowError(f"heat decay fit needs a decade, got [{lo}, {hi}]")
    X = np.log1p(t[m])
    Y = np.log(sol.diagnostics["sup_u_decay"][m])
    slope, icpt = np.polyfit(X, Y, 1)
    decaying = bool(slope < -1e-8)
    return HeatDecay(float(slope), float(-slope - 1), float(np.exp(icpt)), decaying, bool(slope <= -1), (lo, hi))


@dataclass(frozen=True)
class RmOverU:
    times: np.ndarray
    series: np.ndarray
    normalized: np.ndarray
    bound: float
    eps: float
    C0: float
    spot_checks: list


def rm_over_u_bound(sol: HeatSolution, eps: float | None = None, spot_times=None) -> RmOverU:
    """``sup |Rm|^2/u^2`` and its normalization by ``(1 + t)^(16 eps)``.

    ``C0 = sqrt(bound)`` gives ``|Rm| <= C0 u (1 + t)^(8 eps)``; the pointwise
    inequality is re-checked on the full grid at ``spot_times``.
    """
    if eps is None:
        eps = 0.0 if sol.static else type_iii_epsilon(sol.trajectory)
    t = sol.times
    W = sol.diagnostics["w_ratio_sup"]
    norm = W * (1 + t) ** (-16 * eps)
    bound = float(norm.max())
    C0 = math.sqrt(bound)
    if spot_times is None:
        spot_times = np.geomspace(max(t[1], 0.1), t[-1], 5)
    checks = []
    for ts in spot_times:
        j = int(np.argmin(np.abs(t - ts)))
        prof = _profile_at(sol, t[j])
        rm = curvature(prof).rm_norm
        rhs = C0 * sol.u[j] * (1 + t[j]) ** (8 * eps)
        checks.append((float(t[j]), bool(np.all(rm <= rhs * (1 + 1e-12)))))
    return RmOverU(t, W, norm, bound, float(eps), C0, checks)


def sandwich_bounds(sol: HeatSolution, T: float | None = None, r_lo: float = 10.0, r_hi: float | None = None):
    """Constants ``c1, c2`` with ``c1 r^(-2-sigma) <= u(T) <= c2 r^(-2-sigma)`` on ``[r_lo, r_hi]``."""
    grid = sol.trajectory.snapshots[0].profile.grid
    r = grid.nodes
    r_hi = grid.r_max / 2 if r_hi is None else r_hi
    T = sol.times[-1] if T is None else T
    u = sol.u_at(T)
    m = (r >= r_lo) & (r <= r_hi)
    q = u[m] * r[m] ** (2 + sol.sigma)
    return float(q.min()), float(q.max())


def lp_dissipation(sol: HeatSolution, rel_tol: float = 1e-9) -> tuple[bool, np.ndarray]:
    """Whether ``int u^p dV`` is non-increasing between output times."""
    L = sol.diagnostics["lp_integral"]
    inc = np.diff(L)
    return bool(np.all(inc <= rel_tol * np.abs(L[:-1]))), L
