import numpy as np
import pytest

from aeflow import flow
from aeflow.geometry import curvature, dilate_profile, flat_profile, make_grid


def test_flat_profile_is_a_fixed_point(grid2000):
    p = flat_profile(grid2000)
    sys_ = flow._ArealSystem(grid2000, 3, 1.0)
    assert np.abs(sys_.rates(np.array(p.phi))).max() == 0.0
    state = flow.FlowState.initial(p)
    dt = flow.stability_bound(p)
    new = flow.step(state, dt)
    assert np.array_equal(new.profile.phi, p.phi)
    assert new.time == dt and new.step_count == 1


def test_step_rejects_unstable_dt(grid2000, bump):
    state = flow.FlowState.initial(bump.areal_profile(grid2000))
    with pytest.raises(ValueError):
        flow.step(state, 2 * flow.stability_bound(state.profile))


def test_rk4_and_bdf_agree(bump):
    p = bump.areal_profile(make_grid(3, 400))
    a = flow.run(p, 0.05, flow.RunControls(method="rk4", monitors=False, snapshot_times=(0.05,)))
    b = flow.run(p, 0.05, flow.RunControls(monitors=False, snapshot_times=(0.05,)))
    assert np.abs(a.snapshots[-1].profile.phi - b.snapshots[-1].profile.phi).max() <= 1e-8


def test_to_areal_matches_analytic_areal_chart(grid2000, bump):
    a = flow.to_areal(bump.profile(grid2000))
    b = bump.areal_profile(grid2000)
    assert np.abs(a.phi - b.phi).max() <= 1e-6


def test_trajectory_series_are_aligned(bump_run50):
    t = bump_run50.times
    assert np.all(np.diff(t) > 0)
    for v in bump_run50.series.values():
        assert v.shape == t.shape
    assert bump_run50.status == "ok"


def test_scalar_positivity_on_bump(bump_run50):
    rep = flow.scalar_positivity(bump_run50)
    assert rep["applies"] and rep["pass"]
    assert bump_run50.step_min_R.shape[0] > bump_run50.times.size


def test_ae_order_is_preserved(bump_run50):
    reps = flow.ae_order_series(bump_run50)
    assert all(r.passed for r in reps)


def test_parabolic_rescaling(grid2000, bump):
    lam = 2.0
    p = bump.areal_profile(grid2000)
    a = flow.run(p, 1.0, flow.RunControls(monitors=False, snapshot_times=(1.0,)))
    b = flow.run(dilate_profile(p, lam), lam**2, flow.RunControls(monitors=False, snapshot_times=(lam**2,)))
    pa, pb = a.snapshots[-1].profile, b.snapshots[-1].profile
    assert np.abs(pa.phi - pb.phi).max() <= 1e-6
    ratio = curvature(pb).R[1:] * lam**2 - curvature(pa).R[1:]
    assert np.abs(ratio).max() <= 1e-6 * np.abs(curvature(pa).R).max()
    sb = flow.rescaled_state(a.snapshots[-1], lam)
    assert sb.time == pytest.approx(lam**2)


def test_refinement_order_at_least_three(bump):
    phis = {}
    for N in (2000, 4000, 8000):
        tr = flow.run(bump.areal_profile(make_grid(3, N)), 5.0,
                      flow.RunControls(monitors=False, snapshot_times=(0.1, 1.0, 5.0)))
        phis[N] = np.array([s.profile.phi for s in tr.snapshots])
    r = make_grid(3, 2000).nodes
    inner = r <= r[-1] / 2
    d1 = np.abs(phis[2000] - phis[4000][:, ::2])
    d2 = np.abs(phis[4000][:, ::2] - phis[8000][:, ::4])
    assert np.log2(d1[:, inner].max() / d2[:, inner].max()) >= 3.0
    # the Robin closure at the outer node is first order but tiny
    assert d1.max() <= 2e-9


def test_rigidity_integrand_matches_time_derivative(bump_run50):
    rep = flow.rigidity_integrand(bump_run50)
    assert rep.lower_bound_ok
    assert rep.rel_err <= 1e-2


def test_weighted_convergence_decreases(bump_run50):
    wc = flow.monitor_weighted_convergence(bump_run50, 0.9, 1)
    assert wc.decreasing
    assert wc.values[-1] == 0.0
    with pytest.raises(ValueError):
        flow.monitor_weighted_convergence(bump_run50, 0.4, 1)


def test_decay_fit_needs_a_decade(bump_run50, flat_run):
    with pytest.raises(flow.WindowError):
        flow.monitor_decay(bump_run50, 0, (10.0, 50.0))
    fit = flow.monitor_decay(flat_run, 0)
    assert fit.degenerate


def test_singularity_is_detected_and_partial_trajectory_kept(monkeypatch, bump):
    p = bump.areal_profile(make_grid(3, 200))
    orig = flow._ArealSystem.rates

    def blowup(self, phi):
        out = orig(self, phi)
        out[50] = -1e6
        return out

    monkeypatch.setattr(flow._ArealSystem, "rates", blowup)
    with pytest.raises(flow.SingularityError) as info:
        flow.run(p, 1.0, flow.RunControls(method="rk4", monitors=False, snapshot_dt=1e-6))
    err = info.value
    assert err.node == 50
    assert err.trajectory.status == "singular"
    assert len(err.trajectory.snapshots) >= 1


def test_snapshot_time_grid():
    ts = flow.RunControls(snapshot_dt=10.0).times(0.0, 50.0)
    assert ts[0] == 0.0 and ts[-1] == 50.0
    assert set([10.0, 20.0, 30.0, 40.0]).issubset(set(ts.tolist()))
    assert np.all(np.diff(ts) > 0)


def test_profile_at_interpolates_snapshots(bump_run50):
    s = bump_run50.snapshots[3]
    assert np.allclose(bump_run50.profile_at(s.time).phi, s.profile.phi, atol=1e-12)
    with pytest.raises(ValueError):
        bump_run50.profile_at(60.0)
