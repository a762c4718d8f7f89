import numpy as np
import pytest

import oracles
from aeflow import flow, heat
from aeflow.geometry import flat_profile, make_grid


@pytest.fixture(scope="module")
def kernel_solution(grid4000):
    prof = flat_profile(grid4000)
    t0 = 1.0
    sol = heat.solve_heat(heat.static_trajectory(prof, 20.0), 1.0,
                          u0=lambda r: oracles.heat_kernel(r, t0, 3), times=[0, 0.5, 1, 2, 5, 10, 20])
    return sol, t0


def test_flat_heat_kernel_is_reproduced(kernel_solution, grid4000):
    sol, t0 = kernel_solution
    for t, u in zip(sol.times, sol.u):
        H = oracles.heat_kernel(grid4000.nodes, t + t0, 3)
        assert np.abs(u - H).max() <= 1e-6 * H.max()


def test_heat_kernel_li_yau_quantity(kernel_solution, grid4000):
    sol, t0 = kernel_solution
    r = grid4000.nodes
    j = int(np.argmin(np.abs(sol.times - 2.0)))
    ly = heat.li_yau_field(sol, sol.u[j], sol.times[j])
    m = r < 5
    assert np.allclose(ly[m], oracles.heat_kernel_li_yau(r[m], sol.times[j] + t0, 3), atol=1e-6)
    rep = heat.li_yau_check(sol, t_origin=-t0)
    assert rep.c1 == pytest.approx(3.0, abs=1e-6)


def test_capped_power_is_c2():
    f = lambda r: heat.capped_power(np.asarray(r, dtype=float), 1.0)
    x = np.array([1.5, 3.0, 10.0])
    assert np.allclose(f(x), x**-3.0, rtol=1e-14)
    e = 1e-4
    left = np.array([1 - 2 * e, 1 - e, 1.0 - 1e-12])
    right = np.array([1.0, 1 + e, 1 + 2 * e])
    fl, fr = f(left), f(right)
    assert fl[2] == pytest.approx(fr[0], rel=1e-10)
    d1l, d1r = (fl[2] - fl[1]) / e, (fr[1] - fr[0]) / e
    assert d1l == pytest.approx(d1r, rel=1e-3)
    d2l = (fl[2] - 2 * fl[1] + fl[0]) / e**2
    d2r = (fr[2] - 2 * fr[1] + fr[0]) / e**2
    assert d2l == pytest.approx(d2r, rel=1e-2)
    assert np.all(f(np.linspace(0, 5, 101)) > 0)


def test_positivity_along_bump_run(bump_heat50):
    for u in bump_heat50.u:
        assert np.all(u > 0)


def test_li_yau_and_harnack(bump_heat50):
    ly = heat.li_yau_check(bump_heat50)
    assert np.isfinite(ly.c1) and ly.c1 > 0
    pairs = heat.harnack_check(bump_heat50, n_pairs=30, seed=1)
    assert len(pairs) == 30
    assert min(p.margin for p in pairs) >= -1e-6


def test_same_point_same_time_has_zero_margin(bump_heat50):
    (p,) = heat.harnack_check(bump_heat50, pairs=[(3.0, 2.0, 3.0, 2.0)])
    assert p.margin == pytest.approx(0.0, abs=1e-12)


def test_heat_decay_and_sandwich(bump_heat50):
    d = heat.decay_fit(bump_heat50)
    assert d.passed and d.decaying and d.slope <= -1
    lo, hi = heat.sandwich_bounds(bump_heat50)
    assert 0 < lo <= hi < np.inf
    with pytest.raises(flow.WindowError):
        heat.decay_fit(bump_heat50, (10.0, 50.0))


def test_lp_dissipation(bump_heat50):
    ok, L = heat.lp_dissipation(bump_heat50)
    assert ok and L[-1] < L[0]
    n, sigma = 3, 1.0
    assert n / (2 + sigma) < bump_heat50.p < n / 2


def test_lp_exponent_outside_interval_is_rejected(flat_run):
    with pytest.raises(ValueError):
        heat.solve_heat(flat_run, 1.0, p=0.5)


def test_curvature_over_u_bound(bump_heat50):
    rep = heat.rm_over_u_bound(bump_heat50)
    assert rep.bound > 0 and rep.eps == heat.type_iii_epsilon(bump_heat50.trajectory)
    assert all(ok for _, ok in rep.spot_checks)


def test_transport_is_trivial_on_static_metric(grid2000):
    sol = heat.solve_heat(heat.static_trajectory(flat_profile(grid2000), 1.0), 1.0, times=[0, 1])
    assert heat.transport(sol, 2.5, 0.0, 1.0) == 2.5


def test_rk4_matches_bdf_on_short_run(bump):
    g = make_grid(3, 200)
    tr = flow.run(bump.areal_profile(g), 0.05, flow.RunControls(monitors=False))
    a = heat.solve_heat(tr, 1.0, times=[0, 0.05])
    b = heat.solve_heat(tr, 1.0, times=[0, 0.05], method="rk4")
    assert np.abs(a.u[-1] - b.u[-1]).max() <= 1e-6 * a.u[-1].max()


def test_diagnostics_converge_under_refinement(bump):
    sups = {}
    for N in (1000, 2000, 4000):
        tr = flow.run(bump.areal_profile(make_grid(3, N)), 5.0, flow.RunControls(monitors=False))
        sol = heat.solve_heat(tr, 1.0, times=[0, 1, 5])
        sups[N] = np.array([sol.diagnostics[k][1:] for k in ("sup_u_decay", "li_yau_sup", "lp_integral")])
    e1 = np.abs(sups[1000] - sups[2000]).max(axis=1)
    e2 = np.abs(sups[2000] - sups[4000]).max(axis=1)
    assert np.all(np.log2(e1 / e2) >= 3.0)
