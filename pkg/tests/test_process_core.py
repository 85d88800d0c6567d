import numpy as np
import pytest

import reset_ldp.process_core as pc
from reset_ldp.process_core import (
    ProcessParams,
    ResetMark,
    RngStream,
    SamplePath,
    sample_event_times,
    simulate_path,
    sup_statistic,
)
from reset_ldp.reset_kernels import deterministic_zero_kernel, uniform_kernel


def test_params_validation():
    ProcessParams(lam=0.0, horizon_T=1.0)
    with pytest.raises(ValueError):
        ProcessParams(lam=-0.1, horizon_T=1.0)
    with pytest.raises(ValueError):
        ProcessParams(lam=1.0, horizon_T=0.0)
    with pytest.raises(ValueError):
        ProcessParams(lam=1.0, horizon_T=2.0, grid_points=1)
    with pytest.raises(ValueError):
        ProcessParams(lam=float("nan"), horizon_T=1.0)


def test_rng_stream_reproducible_and_distinct():
    a = RngStream(1234, 7).generator().standard_normal(16)
    b = RngStream(1234, 7).generator().standard_normal(16)
    assert np.array_equal(a, b)
    c = RngStream(1234, 8).generator().standard_normal(16)
    assert not np.array_equal(a, c)
    d = RngStream(1235, 7).generator().standard_normal(16)
    assert not np.array_equal(a, d)


def test_generator_at_matches_offset():
    base = RngStream(99, 3)
    for k in (0, 1, 17):
        via_offset = base.offset(k).generator().standard_normal(8)
        direct = base.generator_at(k).standard_normal(8)
        assert np.array_equal(via_offset, direct)


def test_arrival_times_sorted_in_unit_interval():
    params = ProcessParams(lam=2.0, horizon_T=10.0)
    times = sample_event_times(params, RngStream(5))
    assert times.size > 0
    assert np.all(times > 0.0) and np.all(times < 1.0)
    assert np.all(np.diff(times) > 0.0)


def test_arrival_count_mean_matches_rate():
    # N ~ Poisson(lam * T) in wall-clock time, so the scaled arrivals on
    # [0, 1] still number lam * T on average
    params = ProcessParams(lam=2.0, horizon_T=10.0)
    stream = RngStream(2024)
    counts = [sample_event_times(params, stream.offset(r)).size for r in range(400)]
    mean = np.mean(counts)
    sigma = np.sqrt(20.0 / 400)
    assert abs(mean - 20.0) < 4 * sigma


def test_zero_rate_draws_nothing_from_generator():
    params = ProcessParams(lam=0.0, horizon_T=4.0)
    gen = RngStream(11).generator()
    assert pc._arrival_times(params, gen).size == 0
    untouched = RngStream(11).generator()
    assert gen.random() == untouched.random()


def test_simulate_path_bit_exact_reproducible():
    params = ProcessParams(lam=1.0, horizon_T=3.0, grid_points=64)
    kernel = uniform_kernel()
    p1 = simulate_path(params, kernel, RngStream(7))
    p2 = simulate_path(params, kernel, RngStream(7))
    assert np.array_equal(p1.times, p2.times)
    assert np.array_equal(p1.values, p2.values)
    assert p1.reset_marks == p2.reset_marks


def test_path_shape_and_marks():
    params = ProcessParams(lam=2.0, horizon_T=5.0, grid_points=128)
    path = simulate_path(params, uniform_kernel(), RngStream(21))
    assert path.times[0] == 0.0 and path.values[0] == 0.0
    assert path.times[-1] == 1.0
    assert np.all(np.diff(path.times) > 0.0)
    ordinals = [m.reset_ordinal for m in path.reset_marks]
    assert ordinals == list(range(len(ordinals)))
    for mark in path.reset_marks:
        # stored value at a reset knot is the post-reset right limit
        assert path.values[mark.index] == pytest.approx(
            mark.post_reset_value, abs=1e-12
        )


def test_left_limits_expose_pre_reset_values():
    times = np.array([0.0, 0.5, 1.0])
    values = np.array([0.0, 0.1, 0.2])
    mark = ResetMark(index=1, pre_reset_value=0.9, post_reset_value=0.1, reset_ordinal=0)
    path = SamplePath(times=times, values=values, reset_marks=(mark,))
    left = path.left_limits()
    assert left[1] == 0.9
    assert left[0] == 0.0 and left[2] == 0.2


def test_zero_noise_deterministic_kernel_pins_path_to_zero(monkeypatch):
    monkeypatch.setattr(pc, "_standard_normals", lambda gen, n: np.zeros(n))
    params = ProcessParams(lam=3.0, horizon_T=2.0, grid_points=32)
    path = simulate_path(params, deterministic_zero_kernel(), RngStream(3))
    assert np.all(path.values == 0.0)
    for mark in path.reset_marks:
        assert mark.pre_reset_value == 0.0
        assert mark.post_reset_value == 0.0


def test_deterministic_kernel_resets_to_zero():
    # horizon 4 is a power of two, so (x * T) / T == x and the stored
    # post-reset values are exactly zero
    params = ProcessParams(lam=2.0, horizon_T=4.0, grid_points=64)
    path = simulate_path(params, deterministic_zero_kernel(), RngStream(13))
    assert len(path.reset_marks) > 0
    for mark in path.reset_marks:
        assert mark.post_reset_value == 0.0
        assert path.values[mark.index] == pytest.approx(0.0, abs=1e-12)


def test_brownian_marginal_moments():
    # lam = 0 leaves a scaled Wiener process: Var xi_T(1) = 1 / T
    params = ProcessParams(lam=0.0, horizon_T=4.0, grid_points=2)
    stream = RngStream(77)
    finals = np.array(
        [
            simulate_path(params, uniform_kernel(), stream.offset(r)).values[-1]
            for r in range(3000)
        ]
    )
    assert abs(np.mean(finals)) < 4 * 0.5 / np.sqrt(3000)
    assert np.var(finals) == pytest.approx(0.25, rel=0.12)


def test_brownian_covariance_structure():
    # Cov(xi_T(s), xi_T(t)) = min(s, t) / T for the reset-free case
    params = ProcessParams(lam=0.0, horizon_T=2.0, grid_points=5)
    stream = RngStream(123)
    samples = np.array(
        [
            simulate_path(params, uniform_kernel(), stream.offset(r)).values
            for r in range(4000)
        ]
    )
    at_quarter = samples[:, 1]
    at_three_quarters = samples[:, 3]
    cov = np.mean(at_quarter * at_three_quarters)
    assert cov == pytest.approx(0.25 / 2.0, abs=0.015)


def test_extra_times_appear_in_grid():
    params = ProcessParams(lam=1.0, horizon_T=2.0, grid_points=16)
    extras = np.array([0.123456, 0.751])
    path = simulate_path(params, uniform_kernel(), RngStream(9), extra_times=extras)
    for t in extras:
        assert t in path.times


def test_extra_times_outside_unit_interval_rejected():
    params = ProcessParams(lam=0.0, horizon_T=1.0, grid_points=8)
    with pytest.raises(ValueError):
        simulate_path(
            params, uniform_kernel(), RngStream(1), extra_times=np.array([1.5])
        )


def test_sample_path_validation():
    good_t = np.array([0.0, 0.5, 1.0])
    good_v = np.zeros(3)
    SamplePath(times=good_t, values=good_v, reset_marks=())
    with pytest.raises(ValueError):
        SamplePath(times=np.array([0.1, 0.5, 1.0]), values=good_v, reset_marks=())
    with pytest.raises(ValueError):
        SamplePath(times=np.array([0.0, 0.5, 0.9]), values=good_v, reset_marks=())
    with pytest.raises(ValueError):
        SamplePath(
            times=np.array([0.0, 0.5, 0.5, 1.0]), values=np.zeros(4), reset_marks=()
        )


def test_sup_statistic_includes_pre_reset_left_limit(monkeypatch):
    times = np.array([0.0, 0.5, 1.0])
    values = np.array([0.0, 0.1, -0.2])
    mark = ResetMark(index=1, pre_reset_value=-0.9, post_reset_value=0.1, reset_ordinal=0)
    crafted = SamplePath(times=times, values=values, reset_marks=(mark,))
    monkeypatch.setattr(pc, "simulate_path", lambda *a, **k: crafted)
    params = ProcessParams(lam=1.0, horizon_T=4.0)
    # |pre-reset| = 0.9 dominates the stored values; statistic = 0.9 * sqrt(4) / 2
    got = sup_statistic(params, uniform_kernel(), 2.0, RngStream(0))
    assert got == pytest.approx(0.9)
    bare = SamplePath(times=times, values=values, reset_marks=())
    monkeypatch.setattr(pc, "simulate_path", lambda *a, **k: bare)
    assert sup_statistic(params, uniform_kernel(), 2.0, RngStream(0)) == pytest.approx(
        0.2
    )


def test_sup_statistic_rejects_nonpositive_phi():
    params = ProcessParams(lam=0.0, horizon_T=4.0)
    with pytest.raises(ValueError):
        sup_statistic(params, uniform_kernel(), 0.0, RngStream(0))


def test_zero_noise_sup_statistic_is_zero(monkeypatch):
    monkeypatch.setattr(pc, "_standard_normals", lambda gen, n: np.zeros(n))
    params = ProcessParams(lam=0.0, horizon_T=10.0, grid_points=64)
    assert sup_statistic(params, uniform_kernel(), 3.0, RngStream(2)) == 0.0
