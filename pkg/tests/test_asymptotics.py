import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from llgselfsim.asymptotics import (
    circular_distance,
    closed_form_alpha0,
    closed_form_alpha1,
    estimate_z_inf,
    expansion,
    fit_constants,
    frame_asymptotics,
    phase_phi,
    phase_phi_many,
    require_phase,
    verify_expansion,
)
from llgselfsim.complex_ode import solve_f
from llgselfsim.errors import DegenerateAmplitude
from llgselfsim.frenet import integrate_profile
from llgselfsim.model import ModelParams
from llgselfsim.selfsim import profile_length

SQRT_PI = math.sqrt(math.pi)
# 40-digit mpmath quadrature of beta * int sqrt(1 + c0^2 e^{-2 alpha x}/x).
PHI_08_04_2S0 = 95.024289610604308453
# 40-digit mpmath evaluation of the complex-Gamma expressions.
A_ALPHA0 = {
    0.25: (0.906490462185828617, 0.29202529395666416, 0.30495289743769726),
    0.5: (0.675231906655777217, 0.474803717492782338, 0.564467272823711103),
    1.0: (0.207879576350761909, 0.444074609115888998, 0.871541062299877037),
    2.0: (0.00186744273170798881, 0.131647268138756198, 0.991294865037263379),
}


def test_phase_phi_values():
    p = ModelParams(0.8, 0.4)
    assert phase_phi(p, p.s0) == 0.0
    assert phase_phi(p, 2 * p.s0) == pytest.approx(PHI_08_04_2S0, abs=1e-10)
    with pytest.raises(ValueError):
        phase_phi(p, p.s0 - 1.0)


def test_phase_phi_many_agrees():
    p = ModelParams(1.3, 0.2)
    s = np.linspace(p.s0, 3 * p.s0, 37)
    ref = np.array([phase_phi(p, x) for x in s])
    assert np.max(np.abs(phase_phi_many(p, s) - ref)) < 1e-9


def test_phase_phi_logarithmic_term_at_alpha0():
    # phi - (s^2 - s0^2)/4 - c0^2 ln(s/s0) -> const + O(1/s^2).
    p = ModelParams(0.8, 0.0)

    def rest(s):
        return phase_phi(p, s) - (s * s - p.s0**2) / 4 - p.c0**2 * math.log(s / p.s0)

    s = 2 * p.s0
    d1 = rest(2 * s) - rest(s)
    d2 = rest(4 * s) - rest(2 * s)
    assert d2 / d1 == pytest.approx(0.25, rel=0.02)


def test_z_inf_closed_forms():
    c0 = 0.8
    z1 = estimate_z_inf(solve_f(ModelParams(c0, 1.0), 1, 40.0, grid=[0.0]))
    assert z1 == pytest.approx((1 + math.cos(c0 * SQRT_PI)) / 2, abs=1e-10)
    z0 = estimate_z_inf(solve_f(ModelParams(c0, 0.0), 1, 40.0, grid=[0.0]))
    assert z0 == pytest.approx((1 + math.exp(-math.pi * c0**2 / 2)) / 2, abs=1e-8)


def test_z_inf_stable_in_integration_length():
    p = ModelParams(0.8, 0.4)
    vals = [estimate_z_inf(solve_f(p, 1, S, grid=[0.0]), S) for S in (30.0, 40.0, 50.0)]
    assert max(vals) - min(vals) < 1e-9


def test_relations_gamma_and_b(trajs_08_04):
    c0 = 0.8
    consts = [fit_constants(t) for t in trajs_08_04]
    A1 = 2 * consts[0].z_inf - 1
    assert consts[0].gamma == pytest.approx(-(c0**2 / 4) * A1, abs=1e-15)
    assert consts[0].b_amp**2 == pytest.approx(c0**2 / 16 * (1 - A1**2), abs=1e-15)
    for c in consts[1:]:
        A = c.z_inf - 1
        assert c.b_amp**2 == pytest.approx(c0**2 / 4 * (1 - A * A), abs=1e-15)
    assert consts[0].s0 == pytest.approx(4 * math.sqrt(8 + c0**2))
    assert all(0.0 <= c.a_phase < 2 * math.pi for c in consts)


def test_alpha_one_offsets_and_vectors():
    c0 = 0.8  # sin(c0 sqrt(pi)) > 0, so a1 = 3 pi / 2
    fa = frame_asymptotics(ModelParams(c0, 1.0))
    A, B, a = closed_form_alpha1(c0)
    assert circular_distance(fa.a_offsets[0], 1.5 * math.pi) < 1e-8
    np.testing.assert_allclose(fa.A_plus, A, atol=1e-8)
    np.testing.assert_allclose(fa.B_plus, B, atol=1e-8)
    assert np.max(circular_distance(fa.a_offsets, a)) < 1e-8


def test_degenerate_amplitude():
    # alpha = 1, c0 = sqrt(pi): A1 = -1, so B1 = 0 and the phase is undefined.
    traj = solve_f(ModelParams(SQRT_PI, 1.0), 1, 40.0, grid=[0.0])
    consts = fit_constants(traj)
    assert consts.a_phase is None
    with pytest.raises(DegenerateAmplitude):
        require_phase(consts)
    fa = frame_asymptotics(ModelParams(SQRT_PI, 1.0))
    assert math.isnan(fa.a_offsets[0])


def test_fit_window_validation(trajs_08_04):
    with pytest.raises(ValueError):
        fit_constants(trajs_08_04[0], (5.0, 30.0))


@pytest.mark.parametrize("c0", [0.25, 0.5, 1.0])
def test_alpha0_integration_matches_gamma_formulas(c0):
    fa = frame_asymptotics(ModelParams(c0, 0.0))
    np.testing.assert_allclose(fa.A_plus, closed_form_alpha0(c0), atol=1e-6)


@pytest.mark.parametrize("c0", sorted(A_ALPHA0))
def test_closed_form_alpha0_frozen(c0):
    A = closed_form_alpha0(c0)
    np.testing.assert_allclose(A, A_ALPHA0[c0], rtol=1e-13, atol=1e-15)
    assert np.linalg.norm(A) == pytest.approx(1.0, abs=1e-10)


def test_closed_form_alpha0_limits():
    np.testing.assert_array_equal(closed_form_alpha0(0.0), [1.0, 0.0, 0.0])
    np.testing.assert_allclose(closed_form_alpha0(1e-4), [1.0, 0.0, 0.0], atol=1e-3)
    assert closed_form_alpha0(0.5)[0] == pytest.approx(math.exp(-math.pi / 8), rel=1e-15)
    # Large c0 stays finite and unit.
    assert np.linalg.norm(closed_form_alpha0(30.0)) == pytest.approx(1.0, abs=1e-10)


def test_closed_form_alpha1():
    np.testing.assert_allclose(closed_form_alpha1(SQRT_PI)[0], [-1.0, 0.0, 0.0], atol=1e-15)
    np.testing.assert_array_equal(closed_form_alpha1(0.0)[0], [1.0, 0.0, 0.0])
    for c0 in (0.3, 1.1, 2.9):
        A, B, a = closed_form_alpha1(c0)
        A2, B2, a2 = closed_form_alpha1(c0 + 2 * SQRT_PI)
        np.testing.assert_allclose(A, A2, atol=1e-12)
        np.testing.assert_allclose(B, B2, atol=1e-12)
        assert np.max(circular_distance(a, a2)) < 1e-12


def test_circular_distance():
    assert circular_distance(0.1, 2 * math.pi - 0.1) == pytest.approx(0.2)
    assert circular_distance(math.pi, -math.pi) == pytest.approx(0.0, abs=1e-15)


def _report(c0, alpha):
    p = ModelParams(c0, alpha)
    return verify_expansion(integrate_profile(p, profile_length(p)), frame_asymptotics(p))


def test_expansion_bounded_alpha0_and_alpha1():
    for alpha in (0.0, 1.0):
        rep = _report(0.8, alpha)
        assert rep.bounded and np.all(np.isfinite(rep.m_sups))


def test_expansion_uniform_in_alpha():
    a, b = _report(0.8, 0.4), _report(0.8, 0.45)
    ratio = max(a.m_sups) / max(b.m_sups)
    assert 1 / 3 < ratio < 3


def test_expansion_shapes_and_offset_form():
    p = ModelParams(0.8, 0.4)
    fa = frame_asymptotics(p)
    s = np.linspace(p.s0, 2 * p.s0, 5)
    m, n, b = expansion(p, fa, s)
    dm, _, _ = expansion(p, fa, s, m_offset=True)
    assert m.shape == n.shape == b.shape == (3, 5)
    np.testing.assert_allclose(m - fa.A_plus[:, None], dm, atol=1e-15)


def test_b_plus_norm(trajs_08_04):
    fa = frame_asymptotics(ModelParams(0.8, 0.4), trajectories=trajs_08_04)
    assert np.sum(fa.B_plus**2) == pytest.approx(2.0, abs=1e-8)
    assert np.linalg.norm(fa.A_plus) == pytest.approx(1.0, abs=1e-8)


@settings(max_examples=10)
@given(st.floats(0.3, 3.0), st.floats(0.1, 0.9))
def test_orthogonality_triple(c0, alpha):
    fa = frame_asymptotics(ModelParams(c0, alpha))
    assert np.max(np.abs(fa.orthogonality())) < 1e-6
