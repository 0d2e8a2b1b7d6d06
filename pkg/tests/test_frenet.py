import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from llgselfsim.complex_ode import reconstruct_profile_states, solve_f
from llgselfsim.errors import FrameDrift, OutOfRange
from llgselfsim.frenet import PARITY, extend_by_parity, geometric_residual, integrate_profile
from llgselfsim.model import ModelParams, ToleranceConfig, frame_drift
from llgselfsim.specfun import erf_nn


def test_constant_solution_is_exact():
    prof = integrate_profile(ModelParams(0.0, 0.3), 10.0)
    np.testing.assert_array_equal(prof.m, np.tile([1.0, 0.0, 0.0], (len(prof), 1)))
    assert geometric_residual(prof) == 0.0


def test_alpha_one_matches_closed_form():
    c0 = 0.8
    prof = integrate_profile(ModelParams(c0, 1.0), 8.0)
    phase = c0 * erf_nn(prof.s)
    expected = np.column_stack([np.cos(phase), np.sin(phase), np.zeros_like(phase)])
    assert np.max(np.abs(prof.m - expected)) < 1e-9


def test_matches_complex_reconstruction():
    p = ModelParams(0.8, 0.4)
    prof = integrate_profile(p, 20.0)
    trajs = [solve_f(p, j, 20.0, grid=[0.0]) for j in (1, 2, 3)]
    recon = reconstruct_profile_states(trajs, prof.s)
    assert np.max(np.abs(recon.T - prof.states)) < 1e-8


def test_first_sample_is_identity():
    prof = integrate_profile(ModelParams(2.0, 0.5), 5.0)
    assert prof.s[0] == 0.0
    np.testing.assert_array_equal(prof.states[0], np.eye(3).ravel())


def test_parity_extension_exact_and_against_backward_run():
    p = ModelParams(0.8, 0.2)
    prof = integrate_profile(p, 10.0)
    assert extend_by_parity(prof, -5.0).frame.m[1] == -extend_by_parity(prof, 5.0).frame.m[1]
    back = integrate_profile(p, 5.0, direction=-1)
    np.testing.assert_allclose(back.state(-5.0), prof.state_any(-5.0), atol=1e-8)
    sample = extend_by_parity(prof, 0.0)
    np.testing.assert_array_equal(sample.frame.as_matrix(), np.eye(3))


def test_parity_vector_signs():
    # m1 even, m2 m3 odd, n1 b1 odd, others even.
    np.testing.assert_array_equal(PARITY, [1, -1, -1, -1, 1, 1, -1, 1, 1])


def test_out_of_range():
    prof = integrate_profile(ModelParams(0.8, 0.4), 5.0)
    with pytest.raises(OutOfRange):
        prof.state_any(5.5)
    with pytest.raises(OutOfRange):
        prof.state(-1.0)


def test_geometric_residual_small_and_refines():
    p = ModelParams(0.8, 0.4)
    assert geometric_residual(integrate_profile(p, 20.0)) <= 1e-9
    res = [geometric_residual(integrate_profile(p, 20.0, ToleranceConfig(t, t, 1.0, 1e-6))) for t in (1e-8, 1e-10, 1e-12)]
    assert res[0] > res[1] > res[2]


def test_frame_drift_is_reported_not_projected():
    # At 1e-10 step tolerance the drift on [0, 20] grows past 1e-9.
    with pytest.raises(FrameDrift):
        integrate_profile(ModelParams(0.8, 0.4), 20.0, ToleranceConfig(1e-10, 1e-10, 1.0, 1e-9))


@pytest.mark.parametrize("kwargs", [dict(s_max=0.0), dict(s_max=250.0), dict(direction=2), dict(output_grid=[0.0, 2.0, 1.0])])
def test_bad_arguments(kwargs):
    args = dict(s_max=5.0)
    args.update(kwargs)
    with pytest.raises(ValueError):
        integrate_profile(ModelParams(0.8, 0.4), **args)


def test_closed_form_only_at_alpha_one():
    with pytest.raises(ValueError):
        integrate_profile(ModelParams(0.8, 0.5), 5.0, use_closed_form=True)


@given(st.floats(0.0, 4.0), st.floats(0.0, 1.0))
def test_orthonormal_everywhere(c0, alpha):
    prof = integrate_profile(ModelParams(c0, alpha), 15.0)
    drift = max(frame_drift(row) for row in prof.states[::10])
    assert drift <= 1e-9
    assert prof.max_drift <= 1e-9
