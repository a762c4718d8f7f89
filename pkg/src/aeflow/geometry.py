"""Rotationally symmetric metrics ``g = phi^2 dr^2 + psi^2 g_sphere`` on R^n.

The module provides the radial grid, the metric profile container and the
pointwise geometry built on them: curvature fields, weighted sup-norms,
AE-order fits, radial distance and volume of centered balls.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import gamma

from . import _fd


class InvalidProfileError(ValueError):
    """Raised when a metric profile violates positivity or regularity."""


class MassUndefinedError(ValueError):
    """Raised when the AE order is too weak for a well-defined mass."""


def sphere_area(n: int) -> float:
    """Area of the unit sphere ``S^{n-1}``."""
    return 2.0 * np.pi ** (n / 2) / gamma(n / 2)


def ball_volume_unit(n: int) -> float:
    """Volume of the unit ball in R^n."""
    return sphere_area(n) / n


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Radial nodes ``0 = r_0 < r_1 < ... < r_N = r_max``.

    Nodes are images of a uniform computational coordinate ``xi in [0, 1]``
    under a smooth map recorded in ``mapping``.
    """

    n: int
    nodes: np.ndarray
    mapping: dict = field(default_factory=dict)

    def __post_init__(self):
        r = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", r)
        r.setflags(write=False)
        if self.n < 3:
            raise ValueError(f"dimension n must be >= 3, got {self.n}")
        if r.size < 8:
            raise ValueError("grid needs at least 8 nodes")
        if r[0] != 0.0:
            raise ValueError("first node must be exactly 0")
        if np.any(np.diff(r) <= 0):
            raise ValueError("nodes must be strictly increasing")

    @property
    def N(self) -> int:
        return self.nodes.size - 1

    @property
    def h(self) -> float:
        return 1.0 / self.N

    @property
    def r_max(self) -> float:
        return float(self.nodes[-1])

    @cached_property
    def xi(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.N + 1)

    @cached_property
    def r_xi(self) -> np.ndarray:
        return _fd.d1(self.nodes, self.h, -1)

    @cached_property
    def r_xixi(self) -> np.ndarray:
        return _fd.d2(self.nodes, self.h, -1)

    def xi_of_r(self, r) -> np.ndarray:
        """Computational coordinate of the radius ``r``."""
        r = np.asarray(r, dtype=float)
        if self.mapping.get("rule") == "sinh":
            L = self.mapping["L"]
            return np.arcsinh(r / self.r_max * np.sinh(L)) / L
        return np.interp(r, self.nodes, self.xi)

    def dr(self, f: np.ndarray, parity: int) -> tuple[np.ndarray, np.ndarray]:
        """First and second ``r``-derivatives of node values ``f``.

        The chain rule uses the discrete derivatives of the node map so that
        functions linear in ``r`` are differentiated exactly.
        """
        f1, f2 = _fd.d12(f, self.h, parity)
        rx = self.r_xi.reshape((-1,) + (1,) * (np.ndim(f) - 1))
        rxx = self.r_xixi.reshape(rx.shape)
        fr = f1 / rx
        frr = (f2 - rxx * fr) / rx**2
        return fr, frr

    def dyadic_annuli_ok(self, min_nodes: int = 4) -> bool:
        """Check the node count in dyadic annuli ``[2^k, 2^(k+1)]``, ``k >= 0``."""
        r = self.nodes
        k = 0
        while 2.0 ** (k + 1) <= self.r_max:
            lo, hi = 2.0**k, 2.0 ** (k + 1)
            if lo >= r[1] and np.count_nonzero((r >= lo) & (r <= hi)) < min_nodes:
                return False
            k += 1
        return True


def make_grid(n: int = 3, N: int = 2000, L: float = 6.0, r_max: float = 1000.0) -> RadialGrid:
    """Sinh-mapped grid ``r(xi) = r_max sinh(L xi) / sinh(L)``.

    Parameters
    ----------
    n : int
        Manifold dimension.
    N : int
        Number of intervals.
    L : float
        Clustering strength; larger values concentrate nodes near the origin.
    r_max : float
        Outer radius.
    """
    if N < 16:
        raise ValueError("N must be at least 16")
    if L <= 0 or r_max <= 0:
        raise ValueError("L and r_max must be positive")
    xi = np.linspace(0.0, 1.0, N + 1)
    r = r_max * np.sinh(L * xi) / np.sinh(L)
    r[0] = 0.0
    r[-1] = r_max
    return RadialGrid(n, r, {"rule": "sinh", "L": float(L), "r_max": float(r_max), "N": int(N)})


def dilate_grid(grid: RadialGrid, lam: float) -> RadialGrid:
    """Grid with every node multiplied by ``lam``."""
    mapping = dict(grid.mapping)
    if "r_max" in mapping:
        mapping["r_max"] = mapping["r_max"] * lam
    return RadialGrid(grid.n, grid.nodes * lam, mapping)


# ---------------------------------------------------------------------------
# profile
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MetricProfile:
    """Warped-product metric sampled on a :class:`RadialGrid`.

    Attributes
    ----------
    grid : RadialGrid
    phi : ndarray
        Radial lapse, ``g_rr = phi^2``.
    psi : ndarray
        Radius of the orbit spheres; ``psi(0) = 0``.
    sigma : float
        Declared AE order.
    time : float
        Flow time at which the profile was sampled.
    """

    grid: RadialGrid
    phi: np.ndarray
    psi: np.ndarray
    sigma: float = 1.0
    time: float = 0.0

    def __post_init__(self):
        for name in ("phi", "psi"):
            a = np.array(getattr(self, name), dtype=float)
            if a.shape != self.grid.nodes.shape:
                raise ValueError(f"{name} has shape {a.shape}, expected {self.grid.nodes.shape}")
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    def with_time(self, time: float) -> "MetricProfile":
        return MetricProfile(self.grid, self.phi, self.psi, self.sigma, time)

    def check_positive(self) -> None:
        """Raise :class:`InvalidProfileError` on non-positive or non-finite data."""
        phi, psi = self.phi, self.psi
        bad = np.flatnonzero(~np.isfinite(phi) | (phi <= 0))
        if bad.size:
            raise InvalidProfileError(f"phi not positive at node {bad[0]} (r={self.r[bad[0]]:g})")
        bad = np.flatnonzero(~np.isfinite(psi[1:]) | (psi[1:] <= 0)) + 1
        if bad.size:
            raise InvalidProfileError(f"psi not positive at node {bad[0]} (r={self.r[bad[0]]:g})")

    def validate(self, origin_tol: float = 1e-4) -> None:
        """Full validity check: positivity, ``psi(0) = 0`` and ``psi_s(0) = 1``."""
        self.check_positive()
        if self.psi[0] != 0.0:
            raise InvalidProfileError("psi(0) must be exactly 0")
        slope = self.jet.psi_s[0]
        if abs(slope - 1.0) > origin_tol:
            raise InvalidProfileError(f"origin not smooth: psi_s(0) = {slope:.8g}")

    @cached_property
    def jet(self) -> "_Jet":
        return _Jet(self)


class _Jet:
    """Radial and arclength derivatives of a profile, computed once.

    Derivatives of ``psi`` are obtained from the even function ``a = psi / r``
    (``psi_r = a + r a_r``), which keeps the curvature near the origin free of
    the cancellations that an odd-parity stencil on ``psi`` would introduce.
    """

    def __init__(self, p: MetricProfile):
        g = p.grid
        r = g.nodes
        self.phi_r, self.phi_rr = g.dr(p.phi, +1)
        a = np.empty_like(r)
        a[1:] = p.psi[1:] / r[1:]
        a[0] = _fd.even_extrapolate(r, a, 4)
        self.a = a
        self.a_r, self.a_rr = g.dr(a, +1)
        self.psi_r = a + r * self.a_r
        self.psi_rr = 2 * self.a_r + r * self.a_rr
        phi = p.phi
        self.psi_s = self.psi_r / phi
        self.psi_ss = (self.psi_rr - self.phi_r * self.psi_r / phi) / phi**2

    def ds(self, p: MetricProfile, f: np.ndarray, parity: int) -> np.ndarray:
        fr, _ = p.grid.dr(f, parity)
        phi = p.phi.reshape((-1,) + (1,) * (np.ndim(f) - 1))
        return fr / phi


# ---------------------------------------------------------------------------
# curvature
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CurvatureFields:
    """Curvature of a warped-product metric at every node.

    ``grad_rm_norms[k]`` holds ``|nabla^k Rm|``; entry 0 equals ``rm_norm``.
    """

    R: np.ndarray
    K_rad: np.ndarray
    K_sph: np.ndarray
    rm_norm: np.ndarray
    ric_rad: np.ndarray
    ric_sph: np.ndarray
    grad_rm_norms: list

    def ric_sq(self, n: int) -> np.ndarray:
        """``|Rc|^2`` for dimension ``n``."""
        return self.ric_rad**2 + (n - 1) * self.ric_sph**2


def _sectional(p: MetricProfile) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    j = p.jet
    psi, phi = p.psi, p.phi
    n_nodes = psi.size
    K_rad = np.empty(n_nodes)
    K_sph = np.empty(n_nodes)
    K_rad[1:] = -j.psi_ss[1:] / psi[1:]
    K_sph[1:] = (phi[1:] - j.psi_r[1:]) * (phi[1:] + j.psi_r[1:]) / (phi[1:] * psi[1:]) ** 2
    # both sectional curvatures share the limit at the center
    K_rad[0] = (j.phi_rr[0] - 3 * j.a_rr[0]) / j.a[0] ** 3
    K_sph[0] = K_rad[0]
    kappa = np.empty(n_nodes)
    kappa[1:] = j.psi_s[1:] / psi[1:]
    kappa[0] = np.inf
    return K_rad, K_sph, kappa


def _rm_tensor(n: int, K_rad: np.ndarray, K_sph: np.ndarray) -> np.ndarray:
    """Riemann tensor in the orthonormal frame ``(nu, e_1, ..., e_{n-1})``."""
    G = np.eye(n)
    P = np.zeros((n, n))
    P[0, 0] = 1.0
    base = np.einsum("ac,bd->abcd", G, G) - np.einsum("ad,bc->abcd", G, G)
    mix = (
        np.einsum("ac,bd->abcd", P, G)
        + np.einsum("ac,bd->abcd", G, P)
        - np.einsum("ad,bc->abcd", P, G)
        - np.einsum("ad,bc->abcd", G, P)
    )
    return K_sph[:, None, None, None, None] * base + (K_rad - K_sph)[:, None, None, None, None] * mix


def _connection(n: int) -> np.ndarray:
    """``Omega[m, a, b]`` with ``nabla_{e_m} e_a = kappa * Omega[m, a, b] e_b``."""
    Om = np.zeros((n, n, n))
    for i in range(1, n):
        Om[i, 0, i] = 1.0
        Om[i, i, 0] = -1.0
    return Om


def _nu_count(shape: tuple[int, ...]) -> np.ndarray:
    idx = np.indices(shape)
    return np.sum(idx == 0, axis=0)


def covariant_derivative(p: MetricProfile, T: np.ndarray, kappa: np.ndarray) -> np.ndarray:
    """Covariant derivative of an SO(n)-invariant tensor field.

    Parameters
    ----------
    p : MetricProfile
    T : ndarray, shape (N + 1, n, ..., n)
        Frame components at every node.
    kappa : ndarray
        Mean-curvature coefficient ``psi_s / psi`` of the orbit spheres.

    Returns
    -------
    ndarray, shape (N + 1, n, n, ..., n)
        ``(nabla T)_{m a_1 ... a_q}`` with the derivative index first.
    """
    n = p.n
    rank = T.ndim - 1
    shape = T.shape[1:]
    flat = T.reshape(T.shape[0], -1)
    odd = (_nu_count(shape).ravel() % 2) == 1
    dT = np.zeros_like(flat)
    ev = ~odd
    if ev.any():
        dT[:, ev] = p.jet.ds(p, flat[:, ev], +1)
    if odd.any():
        dT[:, odd] = p.jet.ds(p, flat[:, odd], -1)
    dT = dT.reshape(T.shape)
    out = np.zeros((T.shape[0], n) + shape)
    out[:, 0] = dT
    Om = _connection(n)
    k = np.where(np.isfinite(kappa), kappa, 0.0)
    letters = "abcdefghijkl"[:rank]
    for slot in range(rank):
        src = letters.replace(letters[slot], "z")
        expr = f"m{letters[slot]}z,N{src}->Nm{letters}"
        out -= k.reshape((-1,) + (1,) * (rank + 1)) * np.einsum(expr, Om, T)
    # origin: odd components vanish, even ones follow from the neighbours
    parity_odd = (_nu_count((n,) + shape) % 2) == 1
    r = p.r
    o = out.reshape(out.shape[0], -1)
    po = parity_odd.ravel()
    o[0, po] = 0.0
    o[0, ~po] = _fd.even_extrapolate(r, o[:, ~po])
    return o.reshape(out.shape)


def curvature(profile: MetricProfile, k_max: int = 0) -> CurvatureFields:
    """Curvature fields of a warped-product profile.

    Parameters
    ----------
    profile : MetricProfile
    k_max : int
        Highest order ``k`` of ``|nabla^k Rm|`` to compute.  The frame
        tensors have ``n^(4+k)`` components per node, so keep ``k_max``
        small when ``n`` is large.

    Raises
    ------
    InvalidProfileError
        If ``phi`` or ``psi`` is non-positive at a node.
    """
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    profile.check_positive()
    n = profile.n
    K_rad, K_sph, kappa = _sectional(profile)
    R = 2 * (n - 1) * K_rad + (n - 1) * (n - 2) * K_sph
    rm = np.sqrt(2 * (n - 1) * K_rad**2 + (n - 1) * (n - 2) * K_sph**2)
    ric_rad = (n - 1) * K_rad
    ric_sph = K_rad + (n - 2) * K_sph
    norms = [rm]
    if k_max >= 1:
        T = _rm_tensor(n, K_rad, K_sph)
        for _ in range(k_max):
            T = covariant_derivative(profile, T, kappa)
            sq = 0.5 * np.sum(T.reshape(T.shape[0], -1) ** 2, axis=1)
            norms.append(np.sqrt(sq))
    return CurvatureFields(R, K_rad, K_sph, rm, ric_rad, ric_sph, norms)


def grad_rm_closed_form(profile: MetricProfile) -> np.ndarray:
    """``|nabla Rm|`` from the explicit warped-product expression.

    Serves as a cross-check of the frame machinery in :func:`curvature`.
    """
    n = profile.n
    K_rad, K_sph, kappa = _sectional(profile)
    j = profile.jet
    dKr = j.ds(profile, K_rad, +1)
    dKs = j.ds(profile, K_sph, +1)
    k = np.where(np.isfinite(kappa), kappa, 0.0)
    sq = (
        2 * (n - 1) * dKr**2
        + (n - 1) * (n - 2) * dKs**2
        + 4 * (n - 1) * (n - 2) * (k * (K_rad - K_sph)) ** 2
    )
    sq[0] = 0.0  # odd-rank invariant tensors vanish at the center
    return np.sqrt(sq)


# ---------------------------------------------------------------------------
# weighted norms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightedNormReport:
    """Weighted sup-norm ``sup r^(-beta+i) |d^i u|`` for ``i = 0..k``."""

    k: int
    beta: float
    value: float
    per_term: tuple


@dataclass(frozen=True, eq=False)
class RadialField:
    """Node values of one or more radial functions with their derivatives.

    ``derivs[i]`` has shape ``(N + 1,)`` or ``(N + 1, c)`` for ``c``
    components and holds the ``i``-th radial derivative.
    """

    r: np.ndarray
    derivs: tuple

    @classmethod
    def from_values(cls, grid: RadialGrid, values: np.ndarray, k: int, parity: int = 1) -> "RadialField":
        """Differentiate ``values`` numerically up to order ``k``."""
        out = [np.asarray(values, dtype=float)]
        cur = out[0]
        p = parity
        for _ in range(k):
            cur = grid.dr(cur, p)[0]
            p = -p
            out.append(cur)
        return cls(grid.nodes, tuple(out))

    def scaled(self, c: float) -> "RadialField":
        return RadialField(self.r, tuple(c * d for d in self.derivs))


def weighted_norm(field: RadialField, beta: float, k: int, r_floor: float) -> WeightedNormReport:
    """Weighted ``C^k_beta`` sup-norm on nodes with ``r >= r_floor``.

    Raises
    ------
    ValueError
        If ``field`` carries fewer than ``k + 1`` derivative levels or
        ``r_floor <= 0``.
    """
    if r_floor <= 0:
        raise ValueError("r_floor must be positive")
    if k >= len(field.derivs):
        raise ValueError(f"order k={k} exceeds available derivative data ({len(field.derivs) - 1})")
    mask = field.r >= r_floor
    rr = field.r[mask]
    terms = []
    for i in range(k + 1):
        d = np.asarray(field.derivs[i])[mask]
        d = np.abs(d).reshape(rr.size, -1).max(axis=1) if d.size else d
        w = rr ** (-beta + i) * d
        terms.append(float(w.max()) if w.size else 0.0)
    return WeightedNormReport(k, float(beta), max(terms), tuple(terms))


def metric_deviation(profile: MetricProfile, k: int = 1) -> RadialField:
    """Eigenvalue coefficients of ``g - delta`` in the Cartesian chart.

    The two components are ``phi^2 - 1`` (radial direction) and
    ``(psi / r)^2 - 1`` (tangential directions).
    """
    r = profile.r
    A = np.empty_like(r)
    A[1:] = (profile.psi[1:] / r[1:]) ** 2
    A[0] = profile.jet.psi_r[0] ** 2
    vals = np.stack([profile.phi**2 - 1.0, A - 1.0], axis=1)
    return RadialField.from_values(profile.grid, vals, k, +1)


# ---------------------------------------------------------------------------
# AE order
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AEOrderReport:
    fitted_order: float
    passed: bool
    slopes: dict

    def to_dict(self) -> dict:
        return {"fitted_order": self.fitted_order, "pass": self.passed, "slopes": self.slopes}


def ae_order_check(profile: MetricProfile, sigma: float, n_annuli: int = 3) -> AEOrderReport:
    """Fit the decay rate of ``phi - 1`` and ``psi / r - 1`` on the outer annuli.

    Both tails must satisfy ``slope <= -sigma + 0.1``.  A tail that is flat
    to roundoff is skipped; if both are flat the order is ``+inf``.
    """
    r = profile.r
    r_max = r[-1]
    if r_max < 100:
        raise ValueError("ae_order_check needs r_max >= 100")
    mask = (r >= r_max / 2**n_annuli) & (r < r_max)
    rr = r[mask]
    slopes = {}
    tails = {"phi": profile.phi[mask] - 1.0, "psi_over_r": profile.psi[mask] / rr - 1.0}
    for name, q in tails.items():
        a = np.abs(q)
        if np.all(a <= 1e-13):
            continue
        if np.any(a <= 0):
            a = np.maximum(a, 1e-300)
        slopes[name] = float(np.polyfit(np.log(rr), np.log(a), 1)[0])
    if not slopes:
        return AEOrderReport(float("inf"), True, {})
    order = -max(slopes.values())
    return AEOrderReport(order, all(s <= -sigma + 0.1 for s in slopes.values()), slopes)


# ---------------------------------------------------------------------------
# distance and volume
# ---------------------------------------------------------------------------


def _cumulative(grid: RadialGrid, density: np.ndarray) -> CubicSpline:
    """Antiderivative in ``xi`` of ``density * r_xi``."""
    return CubicSpline(grid.xi, density * grid.r_xi).antiderivative()


def _eval_at_r(profile: MetricProfile, spline: CubicSpline, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(r > profile.grid.r_max * (1 + 1e-12)):
        raise ValueError("radius outside [0, r_max]")
    return spline(profile.grid.xi_of_r(np.clip(r, 0, profile.grid.r_max)))


def radial_distance(profile: MetricProfile, r):
    """Geodesic distance from the center to radius ``r``, ``int_0^r phi``."""
    s = _eval_at_r(profile, _cumulative(profile.grid, profile.phi), r)
    return float(s) if np.ndim(s) == 0 else s


def arclength(profile: MetricProfile) -> np.ndarray:
    """Radial distance from the center at every node."""
    return _cumulative(profile.grid, profile.phi)(profile.grid.xi)


def centered_volume(profile: MetricProfile, r):
    """Volume of the coordinate ball of radius ``r`` about the center."""
    dens = sphere_area(profile.n) * profile.psi ** (profile.n - 1) * profile.phi
    v = _eval_at_r(profile, _cumulative(profile.grid, dens), r)
    return float(v) if np.ndim(v) == 0 else v


def volume_ratio(profile: MetricProfile, r):
    """``Vol B(center, d(r)) / (w_n r^n)``; tends to 1 on AE profiles."""
    r = np.asarray(r, dtype=float)
    out = centered_volume(profile, r) / (ball_volume_unit(profile.n) * r**profile.n)
    return float(out) if np.ndim(out) == 0 else out


def simpson_weights(N: int, h: float) -> np.ndarray:
    """Composite Simpson weights on ``N + 1`` equispaced nodes.

    For odd ``N`` the last three intervals use Simpson's 3/8 rule.
    """
    w = np.zeros(N + 1)
    m = N if N % 2 == 0 else N - 3
    if m > 0:
        w[0:m + 1:2] += 2.0
        w[1:m:2] += 4.0
        w[0] -= 1.0
        w[m] -= 1.0
        w[: m + 1] *= h / 3.0
    if N % 2 == 1:
        w[m : m + 4] += 3.0 * h / 8.0 * np.array([1.0, 3.0, 3.0, 1.0])
    return w


def volume_weights(profile: MetricProfile) -> np.ndarray:
    """Node weights ``c_j`` with ``int f dV ~ sum_j c_j f_j``."""
    g = profile.grid
    dens = sphere_area(profile.n) * profile.psi ** (profile.n - 1) * profile.phi * g.r_xi
    return simpson_weights(g.N, g.h) * dens


def integrate(profile: MetricProfile, f: np.ndarray) -> float:
    """``int f dV`` over the whole grid (Simpson's rule in ``xi``)."""
    return float(volume_weights(profile) @ f)


def flat_profile(grid: RadialGrid, sigma: float = 1.0) -> MetricProfile:
    """Euclidean metric ``phi = 1, psi = r``."""
    return MetricProfile(grid, np.ones_like(grid.nodes), grid.nodes.copy(), sigma)


def dilate_profile(profile: MetricProfile, lam: float) -> MetricProfile:
    """Profile of ``lam^2 g`` realized by the coordinate dilation ``r -> lam r``."""
    g = dilate_grid(profile.grid, lam)
    return MetricProfile(g, profile.phi.copy(), lam * profile.psi, profile.sigma, profile.time * lam**2)
