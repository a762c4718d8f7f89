"""Perelman's W-functional, the mu-functional and noncollapsing witnesses.

For a profile ``g`` and scale ``tau > 0`` the functional is

    W(g, u, tau) = int [tau (4 |grad u|^2 + R u^2) - u^2 log u^2 - n u^2] dm,

with ``dm = (4 pi tau)^(-n/2) dV`` and the constraint ``int u^2 dm = 1``.
``mu(g, tau)`` is its infimum over rotationally symmetric ``u``; minimizers
solve ``tau (-4 Lap u + R u) - u log u^2 - n u = mu u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla
from scipy.interpolate import CubicSpline
from scipy.integrate import solve_ivp

from . import _fd
from .geometry import (
    MetricProfile,
    arclength,
    centered_volume,
    curvature,
    sphere_area,
    volume_weights,
)

_TINY = 1e-300
# the solve domain stops where the Gaussian guess falls below exp(-_CUT)
_CUT = 345.0


class ContractError(ValueError):
    """A precondition on the test function was violated."""


@dataclass
class EntropySolution:
    """Result of one mu-minimization.

    Attributes
    ----------
    tau : float
    u : ndarray
        Minimizer at every node (zero outside the solve domain).
    mu_value : float
        ``W`` at the returned minimizer.
    w_value : float
        ``W`` at the Gaussian initial guess.
    multiplier : float
        Lagrange multiplier of the normalization constraint.
    el_residual : float
        Sup-norm of the Euler-Lagrange defect.
    iterations : int
        Descent plus Newton iterations.
    converged : bool
    """

    tau: float
    u: np.ndarray
    mu_value: float
    w_value: float
    multiplier: float
    el_residual: float
    iterations: int
    converged: bool
    r: np.ndarray = field(repr=False, default=None)
    n: int = 3

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "mu_value": self.mu_value,
            "w_value": self.w_value,
            "multiplier": self.multiplier,
            "el_residual": self.el_residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "lambda_equivalent": lambda_from_mu(self.mu_value, self.n) if self.tau == 1.0 else None,
        }


def lambda_from_mu(mu1: float, n: int | None) -> float | None:
    """Reporting conversion ``lambda = mu(g, 1) + (n/2) log(4 pi) + n``."""
    if n is None:
        return None
    return mu1 + 0.5 * n * math.log(4 * math.pi) + n


class _Operators:
    """Laplacian, curvature and quadrature of one profile."""

    def __init__(self, profile: MetricProfile):
        g = profile.grid
        n = profile.n
        self.profile = profile
        self.n = n
        phi = profile.phi
        j = profile.jet
        D1, D2 = _fd.matrices(g.N + 1, g.h, +1)
        rx, rxx = g.r_xi, g.r_xixi
        Dr = sp.diags(1 / rx) @ D1
        Drr = sp.diags(1 / rx**2) @ (D2 - sp.diags(rxx) @ Dr)
        coef = np.zeros_like(phi)
        coef[1:] = (n - 1) * j.psi_s[1:] / profile.psi[1:] / phi[1:]
        lap = sp.diags(1 / phi**2) @ Drr - sp.diags(j.phi_r / phi**3) @ Dr + sp.diags(coef) @ Dr
        lap = lap.tolil()
        lap[0, :] = (n / phi[0] ** 2) * Drr[0, :]
        self.lap = lap.tocsr()
        self.Ds = (sp.diags(1 / phi) @ Dr).tocsr()
        self.R = curvature(profile).R
        self.c = volume_weights(profile)
        self.s = arclength(profile)

    def dm(self, tau: float) -> np.ndarray:
        return self.c * (4 * math.pi * tau) ** (-self.n / 2)


def _ulogu2(u: np.ndarray) -> np.ndarray:
    """``u^2 log u^2`` with the value 0 at ``u = 0``."""
    out = np.zeros_like(u)
    m = u > 0
    out[m] = u[m] ** 2 * 2.0 * np.log(u[m])
    return out


def _normalization(ops: _Operators, u: np.ndarray, tau: float) -> float:
    return float(ops.dm(tau) @ (u * u))


def _w(ops: _Operators, u: np.ndarray, tau: float) -> float:
    us = ops.Ds @ u
    integrand = tau * (4 * us**2 + ops.R * u * u) - _ulogu2(u) - ops.n * u * u
    return float(ops.dm(tau) @ integrand)


def w_functional(profile: MetricProfile, u, tau: float, norm_tol: float = 1e-6) -> float:
    """Evaluate ``W(g, u, tau)``.

    Parameters
    ----------
    u : ndarray or callable
        Node values, or a function of the radius evaluated at the nodes.

    Raises
    ------
    ContractError
        If ``int u^2 dm`` differs from 1 by more than ``norm_tol``.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    ops = _Operators(profile)
    uu = np.asarray(u(profile.r) if callable(u) else u, dtype=float)
    nrm = _normalization(ops, uu, tau)
    if abs(nrm - 1) > norm_tol:
        raise ContractError(f"test function is not normalized: int u^2 dm = {nrm:.10g}")
    return _w(ops, uu, tau)


def el_residual(profile: MetricProfile, u, tau: float, mu: float = 0.0) -> float:
    """Sup-norm of ``tau (-4 Lap u + R u) - u log u^2 - n u - mu u`` over the nodes.

    Parameters
    ----------
    u : ndarray or callable
        Node values, or a function of the radius evaluated at the nodes.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    ops = _Operators(profile)
    uu = np.asarray(u(profile.r) if callable(u) else u, dtype=float)
    ulog = np.zeros_like(uu)
    m = uu > 0
    ulog[m] = uu[m] * 2.0 * np.log(uu[m])
    F = tau * (-4 * (ops.lap @ uu) + ops.R * uu) - ulog - ops.n * uu - mu * uu
    return float(np.max(np.abs(F)))


def gaussian_guess(profile: MetricProfile, tau: float) -> np.ndarray:
    """Normalized ``exp(-s^2 / (8 tau))`` with ``s`` the distance to the center."""
    ops = _Operators(profile)
    return _gaussian(ops, tau)


def _gaussian(ops: _Operators, tau: float) -> np.ndarray:
    u = np.exp(-ops.s**2 / (8 * tau))
    return u / math.sqrt(_normalization(ops, u, tau))


@dataclass
class MuControls:
    descent_dt: float = 1.0
    descent_tol: float = 1e-6
    descent_max: int = 400
    newton_max: int = 40
    tol: float = 1e-7


def minimize_mu(profile: MetricProfile, tau: float, controls: MuControls | None = None) -> EntropySolution:
    """Minimize ``W(g, ., tau)`` over normalized radial test functions.

    A semi-implicit normalized gradient descent from the Gaussian guess is
    followed by Newton's method on the Euler-Lagrange system with the
    multiplier as an extra unknown.  The solve domain ends where the
    Gaussian guess drops below ``exp(-345)``; ``u = 0`` is imposed there.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    controls = controls or MuControls()
    ops = _Operators(profile)
    return _minimize(ops, tau, controls)


def _minimize(ops: _Operators, tau: float, ctl: MuControls) -> EntropySolution:
    n = ops.n
    Nn = ops.s.size
    J = int(min(Nn - 1, np.searchsorted(ops.s, math.sqrt(8 * tau * _CUT))))
    act = slice(0, J + 1)
    dm = ops.dm(tau)[act]
    u0 = np.exp(-ops.s[act] ** 2 / (8 * tau))
    u0[-1] = 0.0
    u0 /= math.sqrt(dm @ (u0 * u0))

    lap = ops.lap[act, act]
    Rv = ops.R[act]
    H = (tau * (-4 * lap + sp.diags(Rv))).tocsr()

    def full(v):
        out = np.zeros(Nn)
        out[act] = v
        return out

    w0 = _w(ops, full(u0), tau)

    # (a) normalized gradient descent
    A = (sp.eye(J + 1) + ctl.descent_dt * H).tolil()
    A[J, :] = 0
    A[J, J] = 1.0
    lu = sla.splu(A.tocsc())
    u = u0.copy()
    it = 0
    for it in range(1, ctl.descent_max + 1):
        rhs = u + ctl.descent_dt * (2 * u * np.log(np.maximum(u, _TINY)) + n * u)
        rhs[J] = 0.0
        un = np.maximum(lu.solve(rhs), 0.0)
        un /= math.sqrt(dm @ (un * un))
        change = float(np.max(np.abs(un - u)))
        u = un
        if change < ctl.descent_tol:
            break

    # (b) Newton polish on [E-L; constraint]
    mu = _w(ops, full(u), tau)
    res = np.inf
    k = 0
    for k in range(1, ctl.newton_max + 1):
        lg = np.log(np.maximum(u, _TINY))
        F = H @ u - 2 * u * lg - n * u - mu * u
        F[J] = u[J]
        G = dm @ (u * u) - 1.0
        res = float(np.max(np.abs(F[:J])))
        Jm = (H - sp.diags(2 * lg + 2 + n + mu)).tolil()
        Jm[J, :] = 0
        Jm[J, J] = 1.0
        col = -u.copy()
        col[J] = 0.0
        big = sp.bmat([[Jm.tocsr(), col[:, None]], [(2 * dm * u)[None, :], None]]).tocsc()
        d = sla.spsolve(big, -np.r_[F, G])
        if not np.all(np.isfinite(d)):
            break
        u = np.maximum(u + d[:-1], 0.0)
        mu += d[-1]
        if res < ctl.tol and np.max(np.abs(d)) < 1e-10:
            break
    lg = np.log(np.maximum(u, _TINY))
    F = H @ u - 2 * u * lg - n * u - mu * u
    res = float(np.max(np.abs(F[:J])))
    u /= math.sqrt(dm @ (u * u))
    uf = full(u)
    wv = _w(ops, uf, tau)
    conv = bool(np.isfinite(res) and res <= ctl.tol)
    return EntropySolution(float(tau), uf, wv, w0, float(mu), res, it + k, conv, ops.profile.r, n)


@dataclass(frozen=True)
class MuTail:
    taus: np.ndarray
    mus: np.ndarray
    converged: np.ndarray
    increasing: bool
    trend_ok: bool
    final_ok: bool
    eps_tail: float


def mu_tail(profile: MetricProfile, taus, eps_tail: float = 0.05, controls: MuControls | None = None) -> MuTail:
    """``mu(g, tau_k)`` on an increasing list spanning two decades."""
    taus = np.asarray(taus, dtype=float)
    if np.any(np.diff(taus) <= 0):
        raise ValueError("taus must be increasing")
    if taus[-1] / taus[0] < 100 - 1e-9:
        raise ValueError("taus must span at least two decades")
    ops = _Operators(profile)
    sols = [_minimize(ops, t, controls or MuControls()) for t in taus]
    mus = np.array([s.mu_value for s in sols])
    conv = np.array([s.converged for s in sols])
    return MuTail(
        taus,
        mus,
        conv,
        bool(np.all(np.diff(mus) > 0)),
        bool(mus[-1] > mus[0]),
        bool(mus[-1] >= -eps_tail),
        eps_tail,
    )


@dataclass(frozen=True)
class MonotonicityResult:
    t1: float
    t2: float
    tau_bar: float
    mu1: float
    mu2: float
    margin: float
    passed: bool | None


def monotonicity_check(trajectory, tau_bar: float, t1: float, t2: float, tol: float = 1e-5,
                       controls: MuControls | None = None) -> MonotonicityResult:
    """Check ``mu(g(t2), tau_bar - t2) >= mu(g(t1), tau_bar - t1) - tol``.

    ``passed`` is ``None`` when either minimization fails to converge.
    """
    if not (t1 <= t2 < tau_bar):
        raise ValueError("need t1 <= t2 < tau_bar")
    s1 = minimize_mu(trajectory.profile_at(t1), tau_bar - t1, controls)
    s2 = s1 if t2 == t1 else minimize_mu(trajectory.profile_at(t2), tau_bar - t2, controls)
    margin = s2.mu_value - s1.mu_value
    verdict = None if not (s1.converged and s2.converged) else bool(margin >= -tol)
    return MonotonicityResult(t1, t2, tau_bar, s1.mu_value, s2.mu_value, margin, verdict)


# ---------------------------------------------------------------------------
# noncollapsing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Witness:
    time: float
    center_index: int
    radius: float
    vol_ratio: float
    curvature_bound_ok: bool


@dataclass(frozen=True)
class NoncollapseReport:
    """``kappa`` is the least ``Vol B / radius^n`` over admissible witnesses."""

    kappa: float
    witnesses: list
    kappa_by_time: dict


class _Meridian:
    """Totally geodesic meridian surface ``ds^2 + psi(s)^2 dtheta^2``.

    ``s`` is signed radial arclength; ``psi`` is extended oddly and the Gauss
    curvature ``K_rad`` evenly, so geodesics may pass through the center.
    """

    def __init__(self, profile: MetricProfile):
        s = arclength(profile)
        psi = np.array(profile.psi, dtype=float)
        psi_s = np.array(profile.jet.psi_s, dtype=float)
        K = np.array(curvature(profile).K_rad, dtype=float)
        S = np.r_[-s[:0:-1], s]
        self.psi = CubicSpline(S, np.r_[-psi[:0:-1], psi])
        self.psi_s = CubicSpline(S, np.r_[psi_s[:0:-1], psi_s])
        self.K = CubicSpline(S, np.r_[K[:0:-1], K])
        self.s_max = float(s[-1])
        self.n = profile.n

    def shoot(self, s0: float, alphas: np.ndarray, length: float) -> np.ndarray:
        """``int_0^length j (psi sin theta)^(n-2) ds`` along the geodesics at angles ``alphas``."""
        m = self.n - 2
        alphas = np.asarray(alphas, dtype=float)
        k = alphas.size
        c = float(self.psi(s0)) * np.sin(alphas)

        def rhs(_, y):
            sg, sp_, th, j, jp = y[:5 * k].reshape(5, k)
            ps = self.psi(sg)
            ps2 = ps * ps
            return np.concatenate([
                sp_,
                c * c * self.psi_s(sg) / (ps2 * ps),
                c / ps2,
                jp,
                -self.K(sg) * j,
                np.abs(j) * np.abs(ps * np.sin(th)) ** m,
            ])

        y0 = np.concatenate([np.full(k, s0), np.cos(alphas), np.zeros(k), np.zeros(k), np.ones(k), np.zeros(k)])
        res = solve_ivp(rhs, (0.0, length), y0, method="RK45", rtol=1e-10, atol=1e-12)
        if not res.success:
            raise RuntimeError(f"geodesic integration failed: {res.message}")
        return res.y[5 * k:, -1]


def ball_volume(profile: MetricProfile, center_index: int, radius: float, n_alpha: int = 48,
                meridian: _Meridian | None = None) -> float:
    """Volume of the geodesic ball ``B(x, radius)`` with ``x`` at node ``center_index``.

    Uses geodesic polar coordinates on the meridian surface: the in-plane
    Jacobi field ``j`` solves ``j'' + K_rad j = 0`` and the rotations about
    the axis through ``x`` contribute ``(psi sin theta)^(n-2)``.  Directions
    are not truncated at the cut locus, which is void when the admissibility
    bound ``|Rm| <= radius^-2`` keeps conjugate points beyond ``radius``.
    """
    n = profile.n
    if center_index == 0:
        return float(centered_volume(profile, _radius_for_distance(profile, radius)))
    mer = meridian or _Meridian(profile)
    s0 = float(arclength(profile)[center_index])
    if s0 + radius > mer.s_max:
        raise ValueError("ball leaves the grid")
    x, w = np.polynomial.legendre.leggauss(n_alpha)
    alphas = 0.5 * np.pi * (x + 1)
    vals = mer.shoot(s0, alphas, radius)
    return float(sphere_area(n - 1) * 0.5 * np.pi * (w @ vals))


def _radius_for_distance(profile: MetricProfile, dist: float) -> float:
    s = arclength(profile)
    if dist > s[-1]:
        raise ValueError("ball leaves the grid")
    return float(CubicSpline(s, profile.r)(dist))


def noncollapse_check(trajectory, radii, centers=None, times=None) -> NoncollapseReport:
    """Volume ratios ``Vol B(x, rad) / rad^n`` over snapshots, centers and radii.

    Balls are geodesic balls (see :func:`ball_volume`).  A witness is
    admissible when ``|Rm| <= rad^-2`` on the radial shell of distances
    ``[d(x) - rad, d(x) + rad]``, which contains the ball.

    Parameters
    ----------
    radii : sequence of float
        Geodesic radii.
    centers : sequence of float, optional
        Center radii (nearest nodes are used); default ``(0, 0.5, 1, 2, 5)``.
    times : sequence of float, optional
        Snapshot times to examine; default all snapshots.
    """
    centers = (0.0, 0.5, 1.0, 2.0, 5.0) if centers is None else centers
    snaps = trajectory.snapshots
    if times is not None:
        snaps = [trajectory.snapshot_near(t) for t in times]
    wit = []
    by_time = {}
    for st in snaps:
        p = st.profile
        n = p.n
        rm = curvature(p).rm_norm
        s = arclength(p)
        mer = _Meridian(p)
        kt = np.inf
        for c in centers:
            ci = int(np.argmin(np.abs(p.r - c)))
            for rad in radii:
                if s[ci] + rad > s[-1]:
                    continue
                shell = np.abs(s - s[ci]) <= rad
                ok = bool(rm[shell].max() <= rad**-2)
                vol = ball_volume(p, ci, float(rad), meridian=mer)
                ratio = vol / rad**n
                wit.append(Witness(st.time, ci, float(rad), ratio, ok))
                if ok:
                    kt = min(kt, ratio)
        by_time[st.time] = kt
    kappa = min((w.vol_ratio for w in wit if w.curvature_bound_ok), default=float("nan"))
    return NoncollapseReport(kappa, wit, by_time)
