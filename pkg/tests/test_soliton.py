import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aeflow import presets, soliton
from aeflow.entropy import ContractError
from aeflow.geometry import flat_profile, make_grid


@pytest.fixture(scope="module")
def flat2000(grid2000):
    return flat_profile(grid2000)


@pytest.mark.parametrize("kind", ["steady", "shrinking", "expanding"])
def test_gaussian_candidates_are_solitons(kind, flat2000):
    cand = soliton.gaussian_candidates(flat2000)[kind]
    assert soliton.soliton_residual(cand).sup_residual <= 1e-10


def test_wrong_sign_is_not_a_soliton(flat2000):
    cand = soliton.SolitonCandidate(flat2000, flat2000.r**2 / 4, 1)
    assert soliton.soliton_residual(cand).sup_residual > soliton.NOT_A_SOLITON


def test_flat_steady_hamilton_identity(flat2000):
    rep = soliton.hamilton_identity_check(soliton.gaussian_candidates(flat2000)["steady"])
    assert rep.deviation == 0.0 and rep.Lambda_fit == 0.0 and rep.is_soliton


def test_hamilton_identity_needs_steady_candidate(flat2000):
    with pytest.raises(ContractError):
        soliton.hamilton_identity_check(soliton.gaussian_candidates(flat2000)["shrinking"])


def test_candidate_validation(flat2000):
    with pytest.raises(ValueError):
        soliton.SolitonCandidate(flat2000, np.zeros(3), 0)
    bad = np.zeros_like(flat2000.r)
    bad[5] = np.inf
    with pytest.raises(ValueError):
        soliton.SolitonCandidate(flat2000, bad, 0)
    with pytest.raises(ValueError):
        soliton.SolitonCandidate(flat2000, np.zeros_like(flat2000.r), 2)


@settings(max_examples=20, deadline=None)
@given(c=st.floats(-1e3, 1e3, allow_nan=False))
def test_residual_ignores_constant_shift(c):
    p = presets.conformal_bump(0.05, 1.0).profile(make_grid(3, 400))
    f = 0.1 * np.exp(-p.r**2)
    a = soliton.soliton_residual(soliton.SolitonCandidate(p, f, 0)).sup_residual
    b = soliton.soliton_residual(soliton.SolitonCandidate(p, f + c, 0)).sup_residual
    assert b == pytest.approx(a, rel=1e-9, abs=1e-12)


def test_hamilton_deviation_tracks_residual(grid2000):
    res, dev = [], []
    for amp in (0.01, 0.03, 0.1):
        p = presets.conformal_bump(amp, 1.0).profile(grid2000)
        rep = soliton.hamilton_identity_check(soliton.SolitonCandidate(p, np.zeros_like(p.r), 0))
        res.append(rep.residual)
        dev.append(rep.deviation)
    assert np.all(np.diff(res) > 0) and np.all(np.diff(dev) > 0)


def test_from_function(flat2000):
    cand = soliton.SolitonCandidate.from_function(flat2000, lambda r: -(r**2) / 4, 1)
    assert soliton.soliton_residual(cand).sup_residual <= 1e-10
