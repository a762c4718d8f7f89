"""Residual checks for radial gradient Ricci soliton candidates.

A candidate ``(g, f, lam)`` is a gradient Ricci soliton when

    Rc + Hess f + (lam / 2) g = 0.

For radial ``f`` the defect is diagonal in the orthonormal frame: the radial
entry is ``Rc_rad + f_ss + lam/2`` and each of the ``n - 1`` sphere entries is
``Rc_sph + (psi_s / psi) f_s + lam/2``, where ``s`` is arclength.  With
this sign convention the Gaussian shrinker on flat space is ``f = r^2/4``,
``lam = -1``, and the expander is ``f = -r^2/4``, ``lam = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .entropy import ContractError
from .geometry import MetricProfile, curvature

#: Residual above which a candidate is reported as not a soliton.
NOT_A_SOLITON = 0.1


@dataclass(frozen=True)
class SolitonCandidate:
    """Metric, radial potential and soliton constant ``lam`` in ``{0, -1, 1}``."""

    profile: MetricProfile
    f: np.ndarray
    lam: float

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float)
        if f.shape != self.profile.phi.shape:
            raise ValueError("potential must have one value per node")
        if not np.all(np.isfinite(f)):
            raise ValueError("potential must be finite at every node")
        if self.lam not in (0, -1, 1):
            raise ValueError("lambda must be 0, -1 or 1")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "lam", float(self.lam))

    @classmethod
    def from_function(cls, profile: MetricProfile, f, lam: float) -> "SolitonCandidate":
        return cls(profile, np.asarray(f(profile.r), dtype=float), lam)


def _check_mask(profile: MetricProfile) -> np.ndarray:
    return profile.r <= profile.grid.r_max / 2


def _f_derivs(cand: SolitonCandidate):
    prof = cand.profile
    phi = prof.phi
    f_r, f_rr = prof.grid.dr(cand.f, +1)
    f_s = f_r / phi
    f_ss = (f_rr - prof.jet.phi_r * f_r / phi) / phi**2
    return f_s, f_ss


@dataclass(frozen=True)
class SolitonResidual:
    sup_residual: float
    field: np.ndarray

    def to_dict(self) -> dict:
        return {"sup_residual": self.sup_residual}


def soliton_residual(cand: SolitonCandidate) -> SolitonResidual:
    """Node-wise ``g``-norm of ``Rc + Hess f + (lam/2) g``; sup over ``r <= r_max/2``."""
    prof = cand.profile
    n = prof.n
    cf = curvature(prof)
    f_s, f_ss = _f_derivs(cand)
    j = prof.jet
    half = 0.5 * cand.lam
    t_rad = cf.ric_rad + f_ss + half
    hs = np.empty_like(f_s)
    hs[1:] = j.psi_s[1:] / prof.psi[1:] * f_s[1:]
    hs[0] = f_ss[0]
    t_sph = cf.ric_sph + hs + half
    field = np.sqrt(t_rad**2 + (n - 1) * t_sph**2)
    return SolitonResidual(float(field[_check_mask(prof)].max()), field)


@dataclass(frozen=True)
class HamiltonReport:
    Lambda_fit: float
    deviation: float
    values: np.ndarray
    residual: float
    is_soliton: bool

    def to_dict(self) -> dict:
        return {
            "Lambda_fit": self.Lambda_fit,
            "deviation": self.deviation,
            "residual": self.residual,
            "is_soliton": self.is_soliton,
        }


def hamilton_identity_check(cand: SolitonCandidate) -> HamiltonReport:
    """``R + |grad f|^2`` per node, its median ``Lambda_fit`` and sup deviation.

    Raises
    ------
    ContractError
        For a non-steady candidate.
    """
    if cand.lam != 0:
        raise ContractError("the identity R + |grad f|^2 = const holds for steady candidates only")
    prof = cand.profile
    f_s, _ = _f_derivs(cand)
    vals = curvature(prof).R + f_s**2
    m = _check_mask(prof)
    lam_fit = float(np.median(vals[m]))
    dev = float(np.max(np.abs(vals[m] - lam_fit)))
    res = soliton_residual(cand).sup_residual
    return HamiltonReport(lam_fit, dev, vals, res, bool(res <= NOT_A_SOLITON))


def gaussian_candidates(profile: MetricProfile) -> dict:
    """The steady, shrinking and expanding Gaussian candidates on ``profile``."""
    r2 = profile.r**2
    return {
        "steady": SolitonCandidate(profile, np.zeros_like(r2), 0),
        "shrinking": SolitonCandidate(profile, r2 / 4, -1),
        "expanding": SolitonCandidate(profile, -r2 / 4, 1),
    }
