import numpy as np
import pytest

import oracles
from aeflow import mass, presets
from aeflow.geometry import MassUndefinedError, MetricProfile, dilate_profile, make_grid, sphere_area


def test_schwarzschild_mass_is_16_pi(grid4000):
    rep = mass.adm_mass(presets.schwarzschild(1.0).profile(grid4000))
    assert rep.extrapolated == pytest.approx(16 * np.pi, rel=1e-3)
    assert len(rep.mass_estimates) == 4
    assert set(rep.model) == {"m_inf", "a", "p"}


def test_schwarzschild_flux_has_closed_form(grid2000):
    scn = presets.schwarzschild(1.0)
    p = scn.profile(grid2000)
    r = p.r
    m = mass.mass_aspect(p)
    ext = r > 3.0
    exact = 16 * np.pi * (1 + 1 / (2 * r[ext])) ** 3
    assert np.allclose(m[ext], exact, rtol=1e-8)


@pytest.mark.parametrize("chart", ["profile", "areal_profile"])
def test_flux_matches_cartesian_oracle(chart, grid2000, bump):
    p = getattr(bump, chart)(grid2000)
    parts = oracles.isotropic_parts(bump) if chart == "profile" else oracles.areal_parts(bump)
    g = oracles.cartesian_metric(*parts, 3)
    m = mass.mass_aspect(p)
    for target in (2.0, 10.0, 40.0):
        i = int(np.argmin(np.abs(p.r - target)))
        x = p.r[i] * np.array([0.0, 0.6, 0.8])
        ref = sphere_area(3) * p.r[i] ** 2 * oracles.flux_integrand(g, x, h=1e-3 * p.r[i])
        assert m[i] == pytest.approx(ref, rel=1e-6)


def test_mass_scales_under_dilation(grid2000, bump):
    p = bump.profile(grid2000)
    lam = 2.0
    q = dilate_profile(p, lam)
    radii = [125.0, 250.0, 500.0, 1000.0]
    m1 = mass.adm_mass(p, radii=radii).extrapolated
    m2 = mass.adm_mass(q, radii=[lam * x for x in radii]).extrapolated
    assert m2 == pytest.approx(lam ** (3 - 2) * m1, rel=1e-10)


@pytest.mark.parametrize("scn", [presets.schwarzschild(1.0), presets.positive_R_bump(0.5, 1.0),
                                 presets.positive_R_bump(0.2, 0.5), presets.flat()])
def test_nonnegative_curvature_gives_nonnegative_mass(scn, grid2000):
    m = mass.adm_mass(scn.profile(grid2000)).extrapolated
    assert m >= -1e-8


def test_flat_mass_is_zero(grid2000):
    rep = mass.adm_mass(presets.flat().profile(grid2000))
    assert rep.extrapolated == 0.0 and rep.residual == 0.0


def test_mass_undefined_for_weak_decay(grid2000):
    r = grid2000.nodes
    phi = 1 + 0.1 * (1 + r**2) ** -0.2
    with pytest.raises(MassUndefinedError):
        mass.adm_mass(MetricProfile(grid2000, phi, r * phi, 0.4))
    with pytest.raises(MassUndefinedError):
        mass.adm_mass(MetricProfile(grid2000, phi, r * phi, 1.0))


def test_extrapolation_stable_under_doubling_r_max():
    scn = presets.schwarzschild(1.0)
    a = mass.adm_mass(scn.profile(make_grid(3, 4000, 6.0, 1000.0)))
    b = mass.adm_mass(scn.profile(make_grid(3, 4400, 6.0, 2000.0)))
    assert abs(a.extrapolated - b.extrapolated) < a.residual


def test_mass_drift_along_bump_run(bump_run50):
    d = mass.mass_drift(bump_run50)
    assert d.relative_drift <= 1e-2
    assert d.masses.shape == bump_run50.times.shape


def test_scalar_mass_identity_gap_shrinks(bump_run50):
    mi = mass.scalar_mass_identity(bump_run50)
    t = bump_run50.times
    i5 = int(np.argmin(np.abs(t - 5.0)))
    assert abs(mi.gap[-1]) < 0.5 * abs(mi.gap[i5])
    assert mi.integral[0] < mi.m0


def test_eta_is_a_c2_ramp():
    r = np.linspace(0, 3, 3001)
    e = mass.eta(r, 1.0)
    assert np.all(e[r <= 1] == 0) and np.all(e[r >= 2] == 1)
    assert np.all(np.diff(e) >= 0)
    d2 = np.diff(e, 2) / (r[1] - r[0]) ** 2
    assert np.abs(np.diff(d2)).max() < 1e-1


def test_e_residual_decays_fast(bump):
    p = bump.profile(make_grid(3, 2000))
    slope, E = mass.residual_decay_rate(p, np.geomspace(10, 100, 10))
    assert slope <= -(2 * bump.sigma + 1.8)
    assert np.all(np.isfinite(E))
