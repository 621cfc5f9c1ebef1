import math

import numpy as np
import pytest
from pydantic import ValidationError

from airsum.bounds import (
    antenna_bound_gradient,
    antenna_bound_symbol,
    convergence_rhs,
    epsilon_for_antennas,
    expected_abs_error_fading,
    fading_constants,
    latency_suite,
    level_to_gradient_scale,
    mse_awgn_bound,
    mse_fading_bound,
    q_function,
    quantization_variance,
    symbol_error_moment,
)
from airsum.schemas import AwgnBoundInput, ConvergenceInput, FadingBoundInput, LatencyInput

Q1 = 0.15865525393145707
Q3 = 0.0013498980316301035


@pytest.mark.parametrize("x, expected", [(0.0, 0.5), (1.0, Q1), (3.0, Q3), (-1.0, 1 - Q1)])
def test_q_function(x: float, expected: float):
    assert q_function(x) == pytest.approx(expected, abs=1e-12)


def test_q_function_tail_and_arrays():
    assert q_function(40.0) < 1e-300
    values = q_function(np.array([0.0, 1.0]))
    assert isinstance(values, np.ndarray)
    assert values == pytest.approx([0.5, Q1], abs=1e-12)


def test_symbol_error_moment_noiseless():
    assert symbol_error_moment(16, sigma_z=0.0, n_r=4) == 0.0
    assert symbol_error_moment(64, sigma_eff=0.0, alphabet="sum") == 0.0


def test_symbol_error_moment_q4_examples():
    # sigma_z = 1/sqrt(2), one antenna: per-axis deviation 0.5
    interior = symbol_error_moment(4, sigma_z=1 / math.sqrt(2), n_r=1, variant="interior")
    assert interior == pytest.approx(Q1 - Q3, abs=1e-9)
    assert interior == pytest.approx(0.15731, abs=1e-5)
    assert symbol_error_moment(4, sigma_eff=0.5) == pytest.approx(Q1, abs=1e-9)


def test_symbol_error_moment_invalid_input():
    with pytest.raises(ValueError):
        symbol_error_moment(8, sigma_z=1.0)
    with pytest.raises(ValueError):
        symbol_error_moment(4, sigma_z=1.0, n_r=0)
    with pytest.raises(ValueError):
        symbol_error_moment(4, sigma_eff=-1.0)


@pytest.mark.parametrize("q", [4, 16, 64])
@pytest.mark.parametrize("sigma", [0.3, 0.8])
def test_symbol_error_moment_matches_decision_simulation(q: int, sigma: float, rng: np.random.Generator):
    side = int(math.isqrt(q))
    sent = rng.integers(0, side, size=1_000_000)
    decided = np.clip(np.floor(sent + sigma * rng.standard_normal(sent.size) + 0.5), 0, side - 1)
    squared = (decided - sent) ** 2
    stderr = np.std(squared, ddof=1) / math.sqrt(squared.size)
    assert abs(np.mean(squared) - symbol_error_moment(q, sigma_eff=sigma)) <= 3 * stderr
    assert 0 <= symbol_error_moment(q, sigma_eff=sigma) <= (side - 1) ** 2


@pytest.mark.parametrize("sigma", [0.3, 1.5])
def test_sum_alphabet_moment_matches_unclamped_rounding(sigma: float, rng: np.random.Generator):
    squared = np.floor(sigma * rng.standard_normal(1_000_000) + 0.5) ** 2
    stderr = np.std(squared, ddof=1) / math.sqrt(squared.size)
    value = symbol_error_moment(4, sigma_eff=sigma, alphabet="sum")
    assert abs(np.mean(squared) - value) <= 3 * stderr
    assert value >= symbol_error_moment(4, sigma_eff=sigma)


def test_quantization_variance_and_level_scale():
    assert quantization_variance(1, 1, 4, 2.0) == pytest.approx(4 / 48)
    assert level_to_gradient_scale(4, 2.0) == 1.0
    assert level_to_gradient_scale(64, 32.0) == 1.0


def test_mse_awgn_bound_plug_in():
    report = mse_awgn_bound(AwgnBoundInput(N=1, K=1, q=4, delta_g=2.0, sigma_z2=1.0, e_r=0.15731))
    assert report.sigma_awgn2 == pytest.approx(0.78655)
    assert report.sigma_q2 == pytest.approx(0.083333, abs=1e-6)
    assert report.total == pytest.approx(0.86988, abs=1e-5)
    assert report.e_r == 0.15731


def test_mse_awgn_bound_noiseless_is_quantization_only():
    report = mse_awgn_bound(AwgnBoundInput(N=100, K=20, q=64, delta_g=2.0, sigma_z2=0.0, Nr=10))
    assert report.sigma_awgn2 == 0.0
    assert report.total == pytest.approx(100 * 4.0 / (3 * 20 * 64 ** 2))


def test_mse_awgn_bound_k_scaling():
    small = mse_awgn_bound(AwgnBoundInput(N=10, K=5, q=16, delta_g=1.0, sigma_z2=1.0, e_r=0.2))
    large = mse_awgn_bound(AwgnBoundInput(N=10, K=20, q=16, delta_g=1.0, sigma_z2=1.0, e_r=0.2))
    assert large.sigma_awgn2 == pytest.approx(small.sigma_awgn2 / 16)
    assert large.sigma_q2 == pytest.approx(small.sigma_q2 / 4)


def test_mse_awgn_bound_noise_gain():
    report = mse_awgn_bound(
        AwgnBoundInput(N=1, K=2, q=16, delta_g=1.0, sigma_z2=0.5, Nr=4, noise_gain=3.0, alphabet="sum")
    )
    assert report.e_r == pytest.approx(
        symbol_error_moment(16, sigma_eff=math.sqrt(3.0 * 0.5 / 8), alphabet="sum")
    )


def test_mse_awgn_bound_monotone_in_antennas():
    totals = [
        mse_awgn_bound(AwgnBoundInput(N=100, K=20, q=64, delta_g=2.0, sigma_z2=1.0, Nr=nr, noise_gain=50.0)).total
        for nr in (1, 4, 16, 64)
    ]
    assert all(a > b for a, b in zip(totals, totals[1:]))


def test_fading_input_constants():
    inp = FadingBoundInput(gamma=[2.0, 0.5], sigma_h=1.0, sigma_z=2.0, K=3)
    assert inp.gamma_max == 2.0
    assert inp.c_min == pytest.approx(0.5 + 0.5)
    assert FadingBoundInput(gamma=1.5, sigma_h=1.0, sigma_z=1.0, K=1).gamma == [1.5]


@pytest.mark.parametrize("gamma", [[], [0.0], [1.0, -1.0]])
def test_fading_input_rejects_bad_gamma(gamma):
    with pytest.raises(ValueError):
        FadingBoundInput(gamma=gamma, sigma_h=1.0, sigma_z=1.0, K=1)


def test_fading_constants():
    symbols = np.array([[1.0, -2.0], [0.5, 1.0]])
    gamma_max, c_min = fading_constants(symbols, sigma_h=1.0, sigma_z=1.0)
    assert gamma_max == 3.0
    assert c_min == pytest.approx(1 / 3 + 1)
    with pytest.raises(ValueError):
        fading_constants(np.zeros((2, 3)), 1.0, 1.0)


def test_expected_abs_error_fading():
    inp = FadingBoundInput(gamma=1.0, sigma_h=1.0, sigma_z=1.0, K=1, Nr=16)
    assert expected_abs_error_fading(inp) == pytest.approx(4 * (math.sqrt(math.pi) + math.log(6)) / (2 * 4))

    by_nr = [
        expected_abs_error_fading(FadingBoundInput(gamma=1.0, sigma_h=1.0, sigma_z=1.0, K=5, Nr=nr))
        for nr in (1, 100, 10_000, 10 ** 12)
    ]
    assert all(a > b for a, b in zip(by_nr, by_nr[1:]))
    assert by_nr[-1] < 1e-3
    by_k = [
        expected_abs_error_fading(FadingBoundInput(gamma=1.0, sigma_h=1.0, sigma_z=1.0, K=k, Nr=100))
        for k in (1, 5, 50)
    ]
    assert all(a < b for a, b in zip(by_k, by_k[1:]))


def test_antenna_bound_symbol_plug_in():
    inp = FadingBoundInput(gamma=1.0, sigma_h=1.0, sigma_z=1.0, K=10, epsilon=0.5, delta=0.01)
    assert antenna_bound_symbol(inp) == 6960


def test_antenna_bound_symbol_shrinks_with_delta():
    bounds = [
        antenna_bound_symbol(FadingBoundInput(gamma=1.0, sigma_h=1.0, sigma_z=1.0, K=10, epsilon=0.5, delta=d))
        for d in (0.001, 0.01, 0.1, 0.9)
    ]
    assert all(a > b for a, b in zip(bounds, bounds[1:]))


def test_antenna_bound_noise_scaled_variant():
    stated = FadingBoundInput(gamma=1.0, sigma_h=1.0, sigma_z=2.0, K=10, epsilon=0.5)
    scaled = FadingBoundInput(gamma=1.0, sigma_h=1.0, sigma_z=2.0, K=10, epsilon=0.5, variant="noise-scaled")
    exact = 8 * 100 / (0.25 * 1.5 ** 2) * math.log(6000)
    assert antenna_bound_symbol(stated) == math.ceil(exact)
    assert antenna_bound_symbol(scaled) == math.ceil(4 * exact)


def test_epsilon_for_antennas_inverts_the_antenna_bound():
    inp = FadingBoundInput(gamma=2.0, sigma_h=1.0, sigma_z=1.0, K=8, epsilon=0.25, delta=0.05)
    n_r = antenna_bound_symbol(inp)
    assert epsilon_for_antennas(inp, n_r) <= 0.25
    assert epsilon_for_antennas(inp, n_r - 1) > 0.25 * (1 - 1e-3)
    with pytest.raises(ValueError):
        epsilon_for_antennas(inp, 0)


@pytest.mark.slow
def test_antenna_bound_symbol_is_conservative(rng: np.random.Generator):
    from airsum.channel import fading_sum
    from airsum.schemas import SystemConfig

    k, epsilon, delta = 4, 2.0, 0.05
    symbols = np.ones((k, 1))
    inp = FadingBoundInput(gamma=k, sigma_h=1.0, sigma_z=1.0, K=k, epsilon=epsilon, delta=delta)
    n_r = antenna_bound_symbol(inp)
    cfg = SystemConfig(K=k, N=400, Nr=n_r)
    errors = np.abs(fading_sum(np.repeat(symbols, 400, axis=1), cfg, rng) - k)
    assert np.mean(errors > epsilon) <= delta


@pytest.mark.slow
def test_antenna_bound_symbol_holds_for_two_hundred_devices(rng: np.random.Generator):
    from airsum.channel import fading_sum
    from airsum.schemas import SystemConfig

    k, delta, trials = 200, 0.01, 1000
    symbols = rng.uniform(0.0, 1.0, size=(k, trials))
    gamma = np.sum(symbols, axis=0).tolist()
    epsilon = epsilon_for_antennas(FadingBoundInput(gamma=gamma, sigma_h=1.0, sigma_z=1.0, K=k, delta=delta), 400)
    inp = FadingBoundInput(gamma=gamma, sigma_h=1.0, sigma_z=1.0, K=k, epsilon=epsilon, delta=delta)
    n_r = antenna_bound_symbol(inp)
    assert 400 <= n_r <= 401
    s_hat = fading_sum(symbols, SystemConfig(K=k, N=trials, Nr=n_r), rng)
    errors = np.abs(s_hat - symbols.sum(axis=0))
    assert np.mean(errors > epsilon) <= delta


def test_mse_fading_bound():
    inp = FadingBoundInput(gamma=[1.0], sigma_h=1.0, sigma_z=1.0, K=10, N=1, q=4, Nr=100)
    report = mse_fading_bound(inp, delta_g=2.0)
    expected = 16 * 4 / (100 * 4) * (math.pi + 2 * math.log(60) ** 2)
    assert report.sigma_fad2 == pytest.approx(expected)
    assert report.sigma_q2 == pytest.approx(quantization_variance(1, 10, 4, 2.0))
    assert report.total == pytest.approx(report.sigma_fad2 + report.sigma_q2)

    far = mse_fading_bound(FadingBoundInput(gamma=[1.0], sigma_h=1.0, sigma_z=1.0, K=10, Nr=10 ** 15), 2.0)
    assert far.total == pytest.approx(far.sigma_q2, rel=1e-9)

    with pytest.raises(ValueError):
        mse_fading_bound(inp, delta_g=0.0)


def test_mse_fading_bound_grows_with_gamma():
    # c_min is nearly constant when sigma_h / sigma_z dominates 1 / gamma
    small = mse_fading_bound(FadingBoundInput(gamma=1.0, sigma_h=1000.0, sigma_z=1.0, K=4), 1.0)
    large = mse_fading_bound(FadingBoundInput(gamma=2.0, sigma_h=1000.0, sigma_z=1.0, K=4), 1.0)
    assert large.sigma_fad2 == pytest.approx(4 * small.sigma_fad2, rel=1e-2)


def test_antenna_bound_gradient():
    inp = FadingBoundInput(gamma=1.0, sigma_h=1.0, sigma_z=1.0, K=10, N=1, q=4, epsilon=1.0, delta=0.01)
    assert antenna_bound_gradient(inp) == 140

    def exact(n: int, q: int) -> float:
        return 16 * n * q / 4 * math.log(6000)

    for n, q in [(10, 4), (10, 16), (40, 16)]:
        scaled = FadingBoundInput(gamma=1.0, sigma_h=1.0, sigma_z=1.0, K=10, N=n, q=q, epsilon=1.0, delta=0.01)
        assert antenna_bound_gradient(scaled) == math.ceil(exact(n, q))


def test_convergence_rhs_plug_in():
    inp = ConvergenceInput(eta=0.1, L=1.0, T=100, loss_gap=1.0, sigma_ch2=0.2, sigma_q2=0.3)
    assert convergence_rhs(inp) == pytest.approx(0.13158, abs=1e-5)


def test_convergence_rhs_noiseless_limit():
    rhs = [convergence_rhs(ConvergenceInput(eta=0.5, L=1.0, T=t, loss_gap=2.0)) for t in (1, 10, 10 ** 9)]
    assert all(a > b for a, b in zip(rhs, rhs[1:]))
    assert rhs[-1] < 1e-8


def test_convergence_rhs_invalid():
    with pytest.raises(ValueError):
        convergence_rhs(ConvergenceInput(eta=2.0, L=1.0, T=10, loss_gap=1.0))
    with pytest.raises(ValidationError):
        ConvergenceInput(eta=0.1, L=1.0, T=0, loss_gap=1.0)


def _latency_input(**overrides) -> LatencyInput:
    values = dict(
        bandwidth=1000.0,
        symbol_time=1e-3,
        N=5_000_000,
        K=10,
        Nr=10,
        q=64,
        sigma_z2=1.0,
        sigma_h2=1.0,
        symbol_moments=(1 / 3, 1 / 2),
        delta_g=1.0,
    )
    values.update(overrides)
    return LatencyInput(**values)


def test_latency_gamma_tends_to_one():
    gaps = [abs(latency_suite(_latency_input(q=q)).gamma_ratio - 1) for q in (4, 16, 64, 256, 1024)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.01


def test_latency_ofdma_is_linear_in_devices():
    for k in (10, 50, 100, 500):
        report = latency_suite(_latency_input(K=k, Nr=800))
        assert math.isfinite(report.t_compfed)
        assert report.t_ofdma / report.t_compfed == pytest.approx(k, rel=1e-9)


@pytest.mark.parametrize("subchannels, turns", [(1, 10), (4, 3), (5, 2), (10, 1), (20, 1)])
def test_latency_ofdma_sub_bands(subchannels: int, turns: int):
    report = latency_suite(_latency_input(subchannels=subchannels))
    assert report.t_ofdma / report.t_compfed == pytest.approx(turns * subchannels, rel=1e-9)


def test_latency_does_not_depend_on_bandwidth_units():
    hertz = latency_suite(_latency_input(bandwidth=1e6, symbol_time=1e-6))
    kilohertz = latency_suite(_latency_input(bandwidth=1e3, symbol_time=1e-3))
    unit = latency_suite(_latency_input(bandwidth=1.0, symbol_time=1.0))
    for report in (hertz, kilohertz):
        assert report.t_ofdma / report.t_compfed == pytest.approx(unit.t_ofdma / unit.t_compfed, rel=1e-9)
        assert report.t_analog / unit.t_analog == pytest.approx(report.t_compfed / unit.t_compfed, rel=1e-9)


def test_latency_over_the_air_beats_ofdma():
    report = latency_suite(_latency_input(K=1000, Nr=10_000, q=256))
    assert math.isfinite(report.t_compfed)
    assert report.t_ofdma / report.t_compfed >= 1e3
    assert report.t_ofdma / report.t_analog >= 1e2

    report = latency_suite(_latency_input())
    assert report.gamma_ratio == pytest.approx(report.t_compfed / report.t_analog)
    assert report.distortion_analog == pytest.approx(1 / 100 + 9 * 0.25 / 30)


def test_latency_zero_rate_is_infinite():
    report = latency_suite(_latency_input(K=500, Nr=1))
    assert report.rate_analog == 0.0
    assert math.isinf(report.t_analog)
    assert math.isinf(report.t_compfed)
    assert math.isnan(report.gamma_ratio)


def test_latency_level_distortion():
    report = latency_suite(_latency_input(distortion="level"))
    assert report.distortion_compfed > 0
    assert report.t_compfed > 0


def test_latency_input_validation():
    with pytest.raises(ValueError):
        _latency_input(symbol_moments=(0.1, 0.5))
    with pytest.raises(ValueError):
        _latency_input(q=32)
