import json
import math
import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from llgselfsim.errors import NoRoot
from llgselfsim.model import ModelParams, ToleranceConfig
from llgselfsim.scattering import (
    LimitCache,
    angle_from_a1,
    check_alpha_continuity,
    check_jump,
    check_small_c0_bounds,
    check_zinf_c0_bound,
    integration_length,
    limit_vector,
    limit_vector_minus_integrated,
    parallel_map,
    reflect,
    solve_c0_for_angle,
    sweep,
    theta_of,
    thread_count,
    zinf_reference,
)

SQRT_PI = math.sqrt(math.pi)


def test_limit_vector_examples():
    lv = limit_vector(0.0, 0.3)
    np.testing.assert_array_equal(lv.A_plus, [1, 0, 0])
    np.testing.assert_array_equal(lv.A_minus, [1, 0, 0])
    assert lv.theta == 0.0
    lv = limit_vector(0.5, 1.0)
    np.testing.assert_allclose(lv.A_plus, [math.cos(0.5 * SQRT_PI), math.sin(0.5 * SQRT_PI), 0.0], atol=1e-15)
    assert limit_vector(0.5, 0.0).A_plus[0] == pytest.approx(math.exp(-math.pi / 8), rel=1e-15)


def test_reflection_and_angle():
    lv = limit_vector(0.8, 0.4)
    np.testing.assert_array_equal(lv.A_minus, reflect(lv.A_plus))
    assert math.cos(lv.theta) == pytest.approx(1 - 2 * lv.A_plus[0] ** 2, abs=1e-14)
    dot = lv.A_plus @ (-lv.A_minus) / (np.linalg.norm(lv.A_plus) * np.linalg.norm(lv.A_minus))
    assert math.acos(dot) == pytest.approx(lv.theta, abs=1e-7)  # acos loses half the digits
    assert math.cos(math.acos(dot)) == pytest.approx(math.cos(lv.theta), abs=1e-10)
    assert 0.0 <= lv.theta <= math.pi


def test_negative_side_integration_matches_reflection():
    np.testing.assert_allclose(limit_vector_minus_integrated(0.8, 0.4), limit_vector(0.8, 0.4).A_minus, atol=1e-8)


@pytest.mark.parametrize("alpha", [0.0, 1.0])
@pytest.mark.parametrize("c0", [0.4, 1.2])
def test_endpoint_consistency(alpha, c0):
    closed = limit_vector(c0, alpha)
    forced = limit_vector(c0, alpha, force_integrate=True)
    assert closed.method == "closed_form" and forced.method == "integrated"
    np.testing.assert_allclose(forced.A_plus, closed.A_plus, atol=1e-6)


def test_integration_length_rule():
    assert integration_length(ModelParams(0.8, 0.4)) == pytest.approx(20.0)
    assert integration_length(ModelParams(0.8, 0.05)) == 40.0
    assert integration_length(ModelParams(20.0, 0.05)) == pytest.approx(ModelParams(20.0, 0.05).s0 / 0.75)


def test_angle_from_a1():
    assert angle_from_a1(0.0) == 0.0
    assert angle_from_a1(1.0) == pytest.approx(math.pi)
    assert angle_from_a1(-0.5) == angle_from_a1(0.5)


def test_sweep_alpha0_theta_monotone():
    rows = sweep(0.0, np.linspace(0.1, 3.0, 30), cache=None)
    theta = np.array([r.theta for r in rows])
    # sin(theta / 2) = exp(-pi c0^2 / 2): strictly decreasing from pi.
    assert np.all(np.diff(theta) < 0)
    assert all(r.method == "closed_form" and not r.error for r in rows)


def test_sweep_alpha1_periodic_planar():
    grid = np.linspace(0.1, 1.0, 7)
    rows = sweep(1.0, grid, cache=None)
    shifted = sweep(1.0, grid + 2 * SQRT_PI, cache=None)
    assert all(r.A_plus[2] == 0.0 for r in rows)
    np.testing.assert_allclose([r.theta for r in rows], [r.theta for r in shifted], atol=1e-9)


def test_sweep_alpha04_non_monotone():
    grid = np.linspace(0.25, 8.0, 32)
    theta = np.array([r.theta for r in sweep(0.4, grid, cache=None)])
    d = np.diff(theta)
    assert np.any(d > 0) and np.any(d < 0)
    # An interior local maximum followed by a decrease.
    assert any(theta[i] > theta[i - 1] and theta[i] > theta[i + 1] for i in range(1, len(theta) - 1))


def test_sweep_rejects_unsorted():
    with pytest.raises(ValueError):
        sweep(0.4, [1.0, 0.5])


def test_sweep_records_row_errors():
    loose = ToleranceConfig(1e-4, 1e-4, 1.0, 1e-4)
    rows = sweep(0.4, [0.8], loose, cache=None)
    assert rows[0].error.startswith("EnergyDrift")
    assert math.isnan(rows[0].theta)


def test_angle_inverse_alpha0():
    theta = 1.0
    roots = solve_c0_for_angle(0.0, theta)
    assert len(roots) == 1
    assert roots[0] == pytest.approx(math.sqrt(-2 * math.log(math.sin(theta / 2)) / math.pi), abs=1e-8)


def test_angle_inverse_alpha1_lattice():
    roots = solve_c0_for_angle(1.0, math.pi / 2, (0.0, 6.0))
    expected = [(math.pi / 4 + k * math.pi / 2) / SQRT_PI for k in range(7)]
    np.testing.assert_allclose(roots, expected, atol=1e-8)


def test_angle_inverse_errors():
    with pytest.raises(NoRoot):
        solve_c0_for_angle(0.0, 1.0, (0.0, 0.1))
    with pytest.raises(ValueError):
        solve_c0_for_angle(0.4, 0.0)
    with pytest.raises(ValueError):
        solve_c0_for_angle(0.4, 1.0, (2.0, 1.0))
    with pytest.raises(NoRoot):
        solve_c0_for_angle(1.0, 0.3, (0.0, 0.2), scan_points=8)


def test_small_c0_bounds_examples():
    rows = check_small_c0_bounds(0.5, [0.05])
    assert rows[0].ok and min(rows[0].margins) > 0
    with pytest.raises(ValueError):
        check_small_c0_bounds(0.0, [0.05])


def test_small_c0_deviations_shrink_faster_than_bounds():
    rows = check_small_c0_bounds(0.5, [0.01, 0.02])
    dev_ratio = rows[1].deviations[0] / rows[0].deviations[0]
    bound_ratio = rows[1].bounds[0] / rows[0].bounds[0]
    assert dev_ratio <= bound_ratio * 1.01


def test_jump_examples():
    assert check_jump(0.7, 0.0)
    assert not check_jump(SQRT_PI, 1.0)
    assert check_jump(0.8, 0.4)
    with pytest.raises(ValueError):
        check_jump(0.0, 0.4)


def test_zinf_reference_values():
    assert zinf_reference(0.5, 0.3, 1) == pytest.approx(1.0, abs=1e-15)
    c0 = 0.3
    assert zinf_reference(1.0, c0, 3) == pytest.approx(1 + c0 * c0 * math.pi / 4, abs=1e-14)
    rep = check_zinf_c0_bound(0.5, 0.1, 2)
    assert rep.ok and rep.margin > 0


def test_continuity_examples():
    near1 = check_alpha_continuity(0.8, [0.5, 0.7, 0.9, 0.95])
    assert [r.regime for r in near1] == ["alpha->0", "alpha->1"]
    assert all(r.bounded for r in near1)
    near0 = check_alpha_continuity(0.8, [0.01, 0.02, 0.05])[0]
    assert near0.bounded
    # Ratio at 0.99 bounds the distance to the alpha = 1 value.
    r = check_alpha_continuity(0.8, [0.9, 0.95, 0.99])[0]
    C = max(r.ratios)
    A99 = limit_vector(0.8, 0.99).A_plus
    A1 = limit_vector(0.8, 1.0).A_plus
    assert np.linalg.norm(A99 - A1) <= C * 0.1 + 1e-12


def test_limit_cache_roundtrip(tmp_path):
    cache = LimitCache()
    a = cache.get_or_compute(0.8, 0.4)
    assert cache.get_or_compute(0.8, 0.4) is a and len(cache) == 1
    path = tmp_path / "cache.json"
    cache.save(path)
    json.loads(path.read_text())
    other = LimitCache()
    other.load(path)
    np.testing.assert_array_equal(other.get_or_compute(0.8, 0.4).A_plus, a.A_plus)


def test_limit_cache_concurrent_inserts():
    cache = LimitCache()
    out = []

    def worker():
        out.append(cache.get_or_compute(0.6, 1.0))

    threads = [threading.Thread(target=worker) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(cache) == 1 and all(v is out[0] for v in out)


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("LLG_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("LLG_THREADS", "zero")
    with pytest.raises(ValueError):
        thread_count()
    monkeypatch.delenv("LLG_THREADS")
    assert thread_count() >= 1


def test_parallel_map_keeps_order():
    items = [0.3, 0.9, 0.1, 0.5]
    assert parallel_map(math.sqrt, items, workers=2) == [math.sqrt(x) for x in items]


@settings(max_examples=15)
@given(st.floats(0.05, 3.0), st.floats(0.1, 0.95))
def test_unit_limit_vector(c0, alpha):
    lv = limit_vector(c0, alpha)
    assert np.linalg.norm(lv.A_plus) == pytest.approx(1.0, abs=1e-8)
    assert theta_of(c0, alpha) == pytest.approx(lv.theta, abs=1e-12)
