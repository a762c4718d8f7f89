import numpy as np
import pytest

from aeflow import presets
from aeflow.geometry import InvalidProfileError, ae_order_check, curvature


@pytest.mark.parametrize("name", sorted(presets.PRESETS))
def test_every_preset_passes_its_declared_order(name, grid2000):
    scn = presets.make_scenario(name)
    prof = presets.verify_scenario(scn, grid2000)
    assert ae_order_check(prof, scn.sigma).passed


def test_positive_bump_has_nonnegative_curvature(grid2000):
    for amp, width in ((0.5, 1.0), (0.2, 0.5), (2.0, 3.0)):
        scn = presets.positive_R_bump(amp, width)
        assert np.all(scn.exact_R(grid2000.nodes) >= 0)
        assert curvature(scn.profile(grid2000)).R.min() >= -1e-10


def test_unknown_preset_and_parameters_are_rejected():
    with pytest.raises(ValueError):
        presets.make_scenario("torus")
    with pytest.raises(ValueError):
        presets.make_scenario("schwarzschild", mass=1.0)


def test_areal_profile_is_the_same_metric(grid2000, bump):
    iso = bump.profile(grid2000)
    areal = bump.areal_profile(grid2000)
    assert np.array_equal(areal.psi, grid2000.nodes)
    # R at the same areal radius agrees between the two charts
    Ri = curvature(iso).R
    Ra = curvature(areal).R
    targets = np.array([0.5, 1.0, 2.0, 5.0])
    Ri_at = np.interp(targets, iso.psi, Ri)
    Ra_at = np.interp(targets, areal.r, Ra)
    assert np.allclose(Ri_at, Ra_at, rtol=1e-3)


def test_minimal_sphere_rejects_areal_chart(grid2000):
    scn = presets.conformal_bump(5.0, 1.0)
    with pytest.raises(InvalidProfileError):
        scn.areal_profile(grid2000)
