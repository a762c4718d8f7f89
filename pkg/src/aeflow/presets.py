"""Conformally flat scenario presets ``g = w^(4/(n-2)) delta``.

Every preset is defined by a radial conformal factor ``w`` with analytic
first derivative and Laplacian, so that the scalar curvature

    R = -4 (n-1)/(n-2) * w^(-(n+2)/(n-2)) * Lap(w)

is available in closed form for testing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq
from scipy.special import comb

from .geometry import InvalidProfileError, MetricProfile, RadialGrid, curvature


@dataclass(frozen=True)
class Scenario:
    """Named conformally flat metric.

    Attributes
    ----------
    name : str
        Preset name.
    params : dict
        Generator parameters.
    n : int
        Dimension.
    sigma : float
        Declared AE order.
    w, dw, lap_w : callable
        Conformal factor, its radial derivative and its Euclidean Laplacian.
    """

    name: str
    params: dict
    n: int
    sigma: float
    w: Callable[[np.ndarray], np.ndarray]
    dw: Callable[[np.ndarray], np.ndarray]
    lap_w: Callable[[np.ndarray], np.ndarray]
    expected_mass: float | None = field(default=None)

    @property
    def _e(self) -> float:
        return 2.0 / (self.n - 2)

    def exact_R(self, r) -> np.ndarray:
        n = self.n
        r = np.asarray(r, dtype=float)
        return -4.0 * (n - 1) / (n - 2) * self.w(r) ** (-(n + 2) / (n - 2)) * self.lap_w(r)

    def profile(self, grid: RadialGrid) -> MetricProfile:
        """Isotropic-coordinate profile ``phi = psi / r = w^(2/(n-2))``."""
        if grid.n != self.n:
            raise ValueError("grid dimension does not match the scenario")
        r = grid.nodes
        phi = self.w(r) ** self._e
        return MetricProfile(grid, phi, r * phi, self.sigma, 0.0)

    def psi_fn(self, r):
        return r * self.w(r) ** self._e

    def psi_r_fn(self, r):
        w = self.w(r)
        return w**self._e + self._e * r * w ** (self._e - 1) * self.dw(r)

    def areal_profile(self, grid: RadialGrid) -> MetricProfile:
        """Same metric written with ``psi = r`` (areal radius).

        Raises
        ------
        InvalidProfileError
            If the orbit spheres are not monotone in area (minimal sphere).
        """
        probe = np.r_[np.linspace(0.0, 10.0, 4001)[1:], grid.nodes[1:]]
        if np.any(self.psi_r_fn(probe) <= 0):
            raise InvalidProfileError("profile has a minimal sphere; areal radius is not a coordinate")
        r_iso = np.zeros_like(grid.nodes)
        for j, rho in enumerate(grid.nodes[1:], start=1):
            hi = rho
            while self.psi_fn(hi) < rho:
                hi *= 2
            r_iso[j] = brentq(lambda x: self.psi_fn(x) - rho, 0.0, hi, xtol=1e-15, rtol=1e-15)
        pr = self.psi_r_fn(r_iso)
        if np.any(pr <= 0):
            raise InvalidProfileError("profile has a minimal sphere; areal radius is not a coordinate")
        phi = self.w(r_iso) ** self._e / pr
        phi[0] = 1.0
        return MetricProfile(grid, phi, grid.nodes.copy(), self.sigma, 0.0)


def flat(n: int = 3, sigma: float | None = None) -> Scenario:
    one = lambda r: np.ones_like(np.asarray(r, dtype=float))
    zero = lambda r: np.zeros_like(np.asarray(r, dtype=float))
    return Scenario("flat", {}, n, float(n - 2 if sigma is None else sigma), one, zero, zero, 0.0)


def _cap_potential(n: int, k: int):
    """Potential of the density ``(1 - x^2)^k`` on the unit ball, unit total flux.

    Returns ``H, dH, lapH`` with ``H(x) = x^(2-n)`` for ``x >= 1``.
    """
    j = np.arange(k + 1)
    c = comb(k, j) * (-1.0) ** j / (2 * j + n)
    Mtot = c.sum()
    c = c / Mtot

    def H(x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        ins = x < 1
        xi = x[ins]
        s = np.zeros_like(xi)
        for jj, cj in enumerate(c):
            s += cj * (1 - xi ** (2 * jj + 2)) / (2 * jj + 2)
        out[ins] = 1 + (n - 2) * s
        xo = x[~ins]
        out[~ins] = xo ** (2.0 - n)
        return out

    def dH(x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        ins = x < 1
        xi = x[ins]
        s = np.zeros_like(xi)
        for jj, cj in enumerate(c):
            s += cj * xi ** (2 * jj + 1)
        out[ins] = -(n - 2) * s
        xo = x[~ins]
        out[~ins] = (2.0 - n) * xo ** (1.0 - n)
        return out

    def lapH(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        ins = x < 1
        out[ins] = -(n - 2) * (1 - x[ins] ** 2) ** k / Mtot
        return out

    return H, dH, lapH


def schwarzschild(m: float = 1.0, n: int = 3, r_c: float | None = None, k: int = 6) -> Scenario:
    """Schwarzschild slice outside ``r_c`` with a smooth positive-density cap.

    Outside ``r_c`` the factor is ``w = 1 + (m/2) r^(2-n)``, the isotropic
    Schwarzschild slice of mass parameter ``m``.  Inside, ``w`` is the
    potential of a smooth compactly supported positive density, so the
    metric is smooth on R^n, has no horizon and satisfies ``R >= 0``.

    Parameters
    ----------
    m : float
        Mass parameter.
    n : int
    r_c : float, optional
        Cap radius, default ``2 m`` (must exceed the horizon radius).
    k : int
        Smoothness exponent of the density.
    """
    if m <= 0:
        raise ValueError("mass parameter must be positive")
    if r_c is None:
        r_c = 2.0 * m ** (1.0 / (n - 2))
    horizon = (m / 2) ** (1.0 / (n - 2))
    if r_c <= horizon:
        raise ValueError("cap radius must exceed the horizon radius")
    H, dH, lapH = _cap_potential(n, k)
    scale = r_c ** (2.0 - n)
    w = lambda r: 1.0 + 0.5 * m * scale * H(np.asarray(r, dtype=float) / r_c)
    dw = lambda r: 0.5 * m * scale * dH(np.asarray(r, dtype=float) / r_c) / r_c
    lap = lambda r: 0.5 * m * scale * lapH(np.asarray(r, dtype=float) / r_c) / r_c**2
    from .geometry import sphere_area

    mass = 2.0 * (n - 1) * sphere_area(n) * m
    return Scenario("schwarzschild", {"m": m, "r_c": r_c, "k": k}, n, float(n - 2), w, dw, lap, mass)


def conformal_bump(amplitude: float = 0.1, width: float = 1.0, n: int = 3) -> Scenario:
    """Gaussian conformal factor ``w = 1 + A exp(-r^2 / l^2)``."""
    A, l = amplitude, width

    def w(r):
        return 1.0 + A * np.exp(-((np.asarray(r, dtype=float) / l) ** 2))

    def dw(r):
        r = np.asarray(r, dtype=float)
        return -2 * A * r / l**2 * np.exp(-((r / l) ** 2))

    def lap(r):
        r = np.asarray(r, dtype=float)
        return A * np.exp(-((r / l) ** 2)) * (4 * r**2 / l**4 - 2 * n / l**2)

    return Scenario("conformal_bump", {"amplitude": A, "width": l}, n, float(n - 2), w, dw, lap, 0.0)


def positive_R_bump(amplitude: float = 0.5, width: float = 1.0, sigma: float = 1.0, n: int = 3) -> Scenario:
    """Superharmonic factor ``w = 1 + a (1 + (r/l)^2)^(-sigma/2)``.

    ``Lap w < 0`` whenever ``sigma <= n - 2``, hence ``R > 0``.
    """
    if not (0 < sigma <= n - 2):
        raise ValueError("positive_R_bump needs 0 < sigma <= n - 2")
    a, l, s = amplitude, width, sigma / 2.0
    if a < 0:
        raise ValueError("amplitude must be nonnegative")

    def w(r):
        x = np.asarray(r, dtype=float) / l
        return 1.0 + a * (1 + x * x) ** (-s)

    def dw(r):
        x = np.asarray(r, dtype=float) / l
        return -2 * s * a * x * (1 + x * x) ** (-s - 1) / l

    def lap(r):
        x = np.asarray(r, dtype=float) / l
        return -2 * s * a * (1 + x * x) ** (-s - 2) * (n + (n - 2 - 2 * s) * x * x) / l**2

    mass = None
    if abs(sigma - (n - 2)) < 1e-14:
        from .geometry import sphere_area

        mass = 4.0 * (n - 1) * sphere_area(n) * a * l ** (n - 2)
    return Scenario(
        "positive_R_bump", {"amplitude": a, "width": l, "sigma": sigma}, n, float(sigma), w, dw, lap, mass
    )


PRESETS = {
    "flat": flat,
    "schwarzschild": schwarzschild,
    "conformal_bump": conformal_bump,
    "positive_R_bump": positive_R_bump,
}


def make_scenario(name: str, n: int = 3, **params) -> Scenario:
    """Build a preset by name; unknown names or parameters raise ``ValueError``."""
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown scenario preset {name!r}; choose from {sorted(PRESETS)}") from None
    try:
        return factory(n=n, **params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for preset {name!r}: {exc}") from None


def verify_scenario(scn: Scenario, grid: RadialGrid) -> MetricProfile:
    """Build the isotropic profile and check the preset's declared properties."""
    from .geometry import ae_order_check

    prof = scn.profile(grid)
    prof.validate()
    rep = ae_order_check(prof, scn.sigma)
    if not rep.passed:
        raise InvalidProfileError(f"preset {scn.name} fails the AE order check: {rep.slopes}")
    if scn.name == "positive_R_bump":
        R = curvature(prof).R
        if R.min() < -1e-10 * max(1.0, np.abs(R).max()):
            raise InvalidProfileError("positive_R_bump has negative scalar curvature")
        if np.any(scn.exact_R(grid.nodes) < 0):
            raise InvalidProfileError("positive_R_bump has negative scalar curvature")
    return prof
