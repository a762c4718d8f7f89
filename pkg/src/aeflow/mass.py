"""ADM mass, its constancy along the flow, and the scalar-curvature identity.

The mass uses the unnormalized flux ``lim int_{S_r} (d_i g_ij - d_j g_ii) dA^j``.
Writing the metric in its Cartesian chart ``g_ij = A delta_ij + B x_i x_j / r^2``
with ``A = (psi/r)^2``, ``B = phi^2 - A``, the flux through ``S_r`` is

    m(r) = omega_{n-1} (n - 1) r^(n-1) (B / r - A'),

and the limit is estimated by fitting ``m(r) = m_inf + a r^(-p)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .geometry import (
    MassUndefinedError,
    MetricProfile,
    ae_order_check,
    curvature,
    integrate,
    sphere_area,
)


@dataclass(frozen=True)
class MassReport:
    """Surface-integral estimates and their extrapolated limit.

    Attributes
    ----------
    mass_estimates : list of (radius, value)
    extrapolated : float
        Fitted limit ``m_inf``.
    model : dict
        Fitted ``{"m_inf", "a", "p"}`` of ``m(r) = m_inf + a r^-p``.
    residual : float
        RMS misfit of the model at the sampled radii.
    eta_radius : float
        Inner radius of the cutoff used by the scalar identity.
    """

    mass_estimates: list
    extrapolated: float
    model: dict
    residual: float
    eta_radius: float = 1.0

    def to_dict(self) -> dict:
        return {
            "mass_estimates": [[float(r), float(v)] for r, v in self.mass_estimates],
            "extrapolated": self.extrapolated,
            "extrapolation_model": self.model,
            "residual": self.residual,
            "eta_radius": self.eta_radius,
        }


def cartesian_coefficients(profile: MetricProfile) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``A``, ``B`` and ``A'`` of ``g_ij = A delta_ij + B x_i x_j / r^2``."""
    j = profile.jet
    a = j.a
    A = a**2
    B = profile.phi**2 - A
    dA = 2 * a * j.a_r
    return A, B, dA


def mass_aspect(profile: MetricProfile) -> np.ndarray:
    """Flux ``m(r)`` through the coordinate sphere at every node."""
    n = profile.n
    r = profile.r
    A, B, dA = cartesian_coefficients(profile)
    out = np.zeros_like(r)
    rr = r[1:]
    out[1:] = sphere_area(n) * (n - 1) * rr ** (n - 1) * (B[1:] / rr - dA[1:])
    return out


def default_radii(profile: MetricProfile, count: int = 4) -> np.ndarray:
    """Dyadic radii ``r_max / 2^k`` for ``k = 1..count``, largest last."""
    return profile.r[-1] / 2.0 ** np.arange(count, 0, -1)


def adm_mass(
    profile: MetricProfile,
    radii=None,
    check: bool = True,
    eta_radius: float = 1.0,
) -> MassReport:
    """ADM mass of a profile by extrapolation of the flux ``m(r)``.

    Parameters
    ----------
    profile : MetricProfile
    radii : sequence of float, optional
        Sampling radii; each is replaced by the nearest grid node.  The
        default is four dyadic radii below ``r_max``.
    check : bool
        Require ``sigma > (n-2)/2`` and a passing AE-order check.

    Raises
    ------
    MassUndefinedError
        If the AE order is too weak, or if the flux grows with ``r``.
    """
    n = profile.n
    sigma = profile.sigma
    if check:
        if sigma <= (n - 2) / 2:
            raise MassUndefinedError(f"sigma={sigma} does not exceed (n-2)/2={(n - 2) / 2}")
        rep = ae_order_check(profile, sigma)
        if not rep.passed:
            raise MassUndefinedError(f"AE order check failed: {rep.slopes}")
    r = profile.r
    radii = default_radii(profile) if radii is None else np.sort(np.asarray(radii, dtype=float))
    idx = np.unique([int(np.argmin(np.abs(r - x))) for x in radii])
    rs = r[idx]
    ms = mass_aspect(profile)[idx]
    est = list(zip(rs.tolist(), ms.tolist()))
    scale = max(np.abs(ms).max(), 1e-300)
    if scale < 1e-12:
        return MassReport(est, float(ms[-1]), {"m_inf": float(ms[-1]), "a": 0.0, "p": float(sigma)}, 0.0, eta_radius)
    if rs.size < 3:
        return MassReport(est, float(ms[-1]), {"m_inf": float(ms[-1]), "a": 0.0, "p": float(sigma)}, float("nan"), eta_radius)
    x = rs / rs[-1]

    def resid(c):
        return (c[0] + c[1] * x ** (-c[2]) - ms) / scale

    a0 = (ms[0] - ms[-1]) / (x[0] ** (-sigma) - 1.0)
    sol = least_squares(
        resid,
        [ms[-1] - a0, a0, sigma],
        bounds=([-np.inf, -np.inf, 1e-3], [np.inf, np.inf, 20.0]),
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
    )
    m_inf, a, p = sol.x
    res = float(np.sqrt(np.mean(sol.fun**2)) * scale)
    model = {"m_inf": float(m_inf), "a": float(a * rs[-1] ** p), "p": float(p)}
    if check and abs(ms[-1] - ms[0]) > 1e-6 * scale and p <= 2e-3:
        raise MassUndefinedError("flux does not converge with radius")
    return MassReport(est, float(m_inf), model, res, eta_radius)


@dataclass(frozen=True)
class MassDrift:
    max_drift: float
    relative_drift: float
    times: np.ndarray
    masses: np.ndarray
    tol: float
    passed: bool


def mass_drift(trajectory, tol: float | None = None, radii=None) -> MassDrift:
    """Maximum ``|m(t) - m(0)|`` over the snapshots.

    The default tolerance is ten times the extrapolation residual at ``t = 0``.
    """
    t = trajectory.times
    reps = [adm_mass(s.profile, radii=radii, check=False) for s in trajectory.snapshots]
    m = np.array([rp.extrapolated for rp in reps])
    drift = float(np.max(np.abs(m - m[0])))
    tol_ = 10 * reps[0].residual if tol is None else tol
    scale = abs(m[0]) if m[0] != 0 else 1.0
    return MassDrift(drift, drift / scale, t, m, float(tol_), bool(drift <= tol_))


def eta(r: np.ndarray, eta_radius: float) -> np.ndarray:
    """C^2 quintic ramp: 0 for ``r <= eta_radius``, 1 for ``r >= 2 eta_radius``."""
    x = np.clip((np.asarray(r, dtype=float) - eta_radius) / eta_radius, 0.0, 1.0)
    return x**3 * (10 - 15 * x + 6 * x**2)


def flux_divergence(profile: MetricProfile) -> np.ndarray:
    """``div chi`` of ``chi_j = d_i g_ij - d_j g_ii`` in the Cartesian chart."""
    n = profile.n
    r = profile.r
    A, B, dA = cartesian_coefficients(profile)
    chi = np.zeros_like(r)
    chi[1:] = (n - 1) * (B[1:] / r[1:] - dA[1:])
    # chi_r is odd in r, so r^(n-1) chi_r has parity (-1)^n
    flux = r ** (n - 1) * chi
    dflux, _ = profile.grid.dr(flux, (-1) ** n)
    out = np.zeros_like(r)
    out[1:] = dflux[1:] / r[1:] ** (n - 1)
    out[0] = np.nan
    return out


def e_residual(profile: MetricProfile) -> np.ndarray:
    """Nonlinear remainder ``E(g) = R - div chi`` at every node (NaN at r=0)."""
    return curvature(profile).R - flux_divergence(profile)


def residual_decay_rate(profile: MetricProfile, radii) -> tuple[float, np.ndarray]:
    """Log-log slope of ``|E(g)|`` sampled at the nodes nearest ``radii``."""
    r = profile.r
    idx = np.array([int(np.argmin(np.abs(r - x))) for x in radii])
    E = np.abs(e_residual(profile)[idx])
    slope = float(np.polyfit(np.log(r[idx]), np.log(E), 1)[0])
    return slope, E


@dataclass(frozen=True)
class MassIdentity:
    times: np.ndarray
    integral: np.ndarray
    gap: np.ndarray
    m0: float
    eta_radius: float


def scalar_mass_identity(trajectory, eta_radius: float = 1.0, m0: float | None = None) -> MassIdentity:
    """``int eta R dV`` per snapshot and its gap to the initial mass."""
    if m0 is None:
        m0 = adm_mass(trajectory.snapshots[0].profile, check=False).extrapolated
    vals = []
    for s in trajectory.snapshots:
        p = s.profile
        vals.append(integrate(p, eta(p.r, eta_radius) * curvature(p).R))
    vals = np.asarray(vals)
    return MassIdentity(trajectory.times, vals, m0 - vals, float(m0), eta_radius)

