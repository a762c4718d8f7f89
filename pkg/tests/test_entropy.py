import math

import numpy as np
import pytest

from aeflow import entropy, presets
from aeflow.geometry import dilate_profile, flat_profile, make_grid


@pytest.fixture(scope="module")
def curved(grid2000):
    return presets.positive_R_bump(0.2, 0.5).profile(grid2000)


@pytest.mark.parametrize("tau", [0.5, 1.0, 10.0])
def test_flat_log_sobolev_baseline(tau, grid4000):
    p = flat_profile(grid4000)
    sol = entropy.minimize_mu(p, tau)
    assert sol.converged
    assert abs(sol.mu_value) <= 1e-6
    assert np.abs(sol.u - entropy.gaussian_guess(p, tau)).max() <= 1e-4


@pytest.mark.parametrize("tau", [0.5, 1.0, 10.0])
def test_gaussian_solves_flat_euler_lagrange(tau, grid4000):
    p = flat_profile(grid4000)
    res = entropy.el_residual(p, lambda r: np.exp(-r**2 / (8 * tau)), tau, 0.0)
    assert res <= 1e-8


def test_minimizer_is_self_consistent(curved):
    tau = 1.0
    sol = entropy.minimize_mu(curved, tau)
    assert sol.converged and sol.el_residual <= 1e-7
    assert entropy.w_functional(curved, sol.u, tau) == pytest.approx(sol.mu_value, abs=1e-10)
    assert sol.mu_value <= sol.w_value
    assert np.all(sol.u >= 0)
    lam = sol.to_dict()["lambda_equivalent"]
    assert lam == pytest.approx(sol.mu_value + 1.5 * math.log(4 * math.pi) + 3)


def test_curved_mu_is_negative_and_increases(curved):
    tail = entropy.mu_tail(curved, (1.0, 10.0, 100.0, 1000.0))
    assert tail.mus[0] < -1e-4
    assert tail.increasing and tail.trend_ok and tail.final_ok
    assert abs(tail.mus[-1]) <= 0.05
    assert np.all(tail.converged)


def test_mu_is_dilation_invariant(grid2000):
    p = presets.positive_R_bump(0.2, 0.5).profile(grid2000)
    lam = 2.0
    a = entropy.minimize_mu(p, 1.0)
    b = entropy.minimize_mu(dilate_profile(p, lam), lam**2)
    assert b.mu_value == pytest.approx(a.mu_value, abs=1e-8)


def test_unnormalized_test_function_is_rejected(grid2000):
    p = flat_profile(grid2000)
    with pytest.raises(entropy.ContractError):
        entropy.w_functional(p, lambda r: 2 * np.exp(-r**2 / 8), 1.0)
    with pytest.raises(ValueError):
        entropy.minimize_mu(p, 0.0)


def test_mu_tail_needs_two_decades(curved):
    with pytest.raises(ValueError):
        entropy.mu_tail(curved, (1.0, 10.0))
    with pytest.raises(ValueError):
        entropy.mu_tail(curved, (10.0, 1.0, 1000.0))


def test_monotonicity_along_bump_run(bump_run100):
    for t1, t2 in [(0.0, 1.0), (1.0, 5.0)]:
        res = entropy.monotonicity_check(bump_run100, 100.0, t1, t2)
        assert res.passed is True and res.margin >= -1e-5


def test_flat_geodesic_balls_are_euclidean(grid2000):
    p = flat_profile(grid2000)
    for c in (0.0, 0.5, 2.0):
        ci = int(np.argmin(np.abs(p.r - c)))
        for rad in (0.5, 1.0, 2.0):
            vol = entropy.ball_volume(p, ci, rad)
            assert vol == pytest.approx(4 * np.pi / 3 * rad**3, rel=1e-8)


def test_noncollapse_on_bump_run(bump_run50):
    rep = entropy.noncollapse_check(bump_run50, [0.5, 1.0, 2.0], times=[1.0, 5.0, 20.0, 50.0])
    vals = np.array([v for v in rep.kappa_by_time.values()])
    assert rep.kappa > 0
    assert (vals.max() - vals.min()) / vals.max() < 0.1
    assert rep.kappa == min(w.vol_ratio for w in rep.witnesses if w.curvature_bound_ok)


def test_large_radius_is_not_admissible(grid2000):
    p = presets.positive_R_bump(1.0, 0.3).profile(grid2000)

    class _One:
        snapshots = [type("S", (), {"profile": p, "time": 0.0})()]

    rep = entropy.noncollapse_check(_One, [0.05, 3.0], centers=[0.0])
    flags = {w.radius: w.curvature_bound_ok for w in rep.witnesses}
    assert flags[0.05] and not flags[3.0]


def test_noncollapse_rejects_balls_off_the_grid():
    p = flat_profile(make_grid(3, 400))
    with pytest.raises(ValueError):
        entropy.ball_volume(p, 10, 5000.0)
