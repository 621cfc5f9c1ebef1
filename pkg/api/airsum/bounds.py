import logging
import math
from typing import Literal, Optional, Tuple, Union

import numpy as np
from scipy.special import erfc

from .schemas import (
    AwgnBoundInput,
    AwgnBoundReport,
    ConvergenceInput,
    FadingBoundInput,
    FadingBoundReport,
    LatencyInput,
    LatencyReport,
    check_level_count,
)

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def q_function(x: ArrayLike) -> ArrayLike:
    """Standard normal tail probability Q(x) = erfc(x / sqrt(2)) / 2."""
    result = 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(result) if np.ndim(result) == 0 else result


def symbol_error_moment(
    q: int,
    sigma_z: float = 0.0,
    n_r: int = 1,
    *,
    sigma_eff: Optional[float] = None,
    variant: Literal["exact", "interior"] = "exact",
    alphabet: Literal["symbol", "sum"] = "symbol",
) -> float:
    """
    Second moment of the per-axis decision error, in lattice steps.

    The per-axis noise deviation is sigma_z / sqrt(2 n_r) unless sigma_eff is
    given. With alphabet="symbol" the transmitted point is uniform on the
    2^b-PAM axis and decisions are clamped to it; "exact" keeps the tail
    probability of the two edge points, "interior" drops it. alphabet="sum"
    ignores clamping altogether (nearest integer of unbounded noise), which
    dominates clamped decoding on any sum lattice.

    Args:
        q: Modulation order
        sigma_z: Noise deviation before array gain
        n_r: Receive antennas
        sigma_eff: Per-axis deviation override
        variant: "exact" or "interior"
        alphabet: "symbol" or "sum"

    Returns:
        float: e_r = sum_l l^2 P_l
    """
    check_level_count(q)
    if n_r < 1:
        raise ValueError(f"n_r must be >= 1, got {n_r}")
    sigma = sigma_z / math.sqrt(2.0 * n_r) if sigma_eff is None else sigma_eff
    if sigma < 0:
        raise ValueError("Noise deviation must be non-negative")
    if sigma == 0:
        return 0.0
    side = 1 << ((q.bit_length() - 1) // 2)

    if alphabet == "sum":
        top = max(side - 1, int(math.ceil(40.0 * sigma)) + 1)
        ell = np.arange(1, top + 1, dtype=float)
        inner = q_function((2 * ell - 1) / (2 * sigma))
        outer = q_function((2 * ell + 1) / (2 * sigma))
        return float(np.sum(ell ** 2 * 2.0 * (inner - outer)))

    ell = np.arange(1, side, dtype=float)
    inner = q_function((2 * ell - 1) / (2 * sigma))
    outer = q_function((2 * ell + 1) / (2 * sigma))
    prob = 2.0 * (1.0 - ell / side) * (inner - outer)
    if variant == "exact":
        prob = prob + (2.0 / side) * outer
    return float(np.sum(ell ** 2 * prob))


def level_to_gradient_scale(q: int, delta_g: float) -> float:
    """Squared gradient-domain width of one quantizer level, (2 delta_g / q)^2."""
    return (2.0 * delta_g / q) ** 2


def quantization_variance(N: int, K: int, q: int, delta_g: float) -> float:
    """N delta_g^2 / (3 K q^2)."""
    return N * delta_g ** 2 / (3.0 * K * q ** 2)


def mse_awgn_bound(inp: AwgnBoundInput) -> AwgnBoundReport:
    """
    Gradient MSE of the digital path over the reduced-noise channel.

    Args:
        inp: Sizes, quantizer and noise; e_r may be given directly

    Returns:
        AwgnBoundReport: sigma_awgn2 = N (1+q) e_r / K^2 in level units times the
        level width squared, sigma_q2 = N delta_g^2 / (3 K q^2), and their sum
    """
    if inp.e_r is not None:
        e_r = inp.e_r
    else:
        sigma_eff = math.sqrt(inp.noise_gain * inp.sigma_z2 / (2.0 * inp.Nr))
        e_r = symbol_error_moment(inp.q, sigma_eff=sigma_eff, alphabet=inp.alphabet)
    sigma_awgn2 = inp.N * (1 + inp.q) * e_r / inp.K ** 2 * level_to_gradient_scale(inp.q, inp.delta_g)
    sigma_q2 = quantization_variance(inp.N, inp.K, inp.q, inp.delta_g)
    return AwgnBoundReport(sigma_awgn2=sigma_awgn2, sigma_q2=sigma_q2, total=sigma_awgn2 + sigma_q2, e_r=e_r)


def fading_constants(
    symbols: np.ndarray, sigma_h: float, sigma_z: float, noise_gain: float = 1.0
) -> Tuple[float, float]:
    """
    gamma_max and c_min over subchannels for symbols of shape (K, n).

    Args:
        symbols: Per-device symbols, one column per subchannel
        sigma_h: Channel deviation
        sigma_z: Noise deviation
        noise_gain: Lattice noise gain (beta / |D|^2)

    Returns:
        Tuple[float, float]: (max_n gamma_n, min_n c_n) with gamma_n = sum_k |s_k^n|
    """
    gammas = np.sum(np.abs(np.atleast_2d(symbols)), axis=0)
    if np.any(gammas <= 0):
        raise ValueError("Every subchannel needs a non-zero symbol sum magnitude")
    c = 1.0 / gammas + sigma_h / (sigma_z * math.sqrt(noise_gain))
    return float(gammas.max()), float(c.min())


def _variant_factor(inp: FadingBoundInput) -> float:
    if inp.variant == "noise-scaled":
        return inp.sigma_z_eff ** 2 / inp.sigma_h ** 2
    return 1.0


def expected_abs_error_fading(inp: FadingBoundInput) -> float:
    """4 K gamma / (sqrt(Nr) c) * (sqrt(pi) + ln(6K))."""
    return (
        4.0 * inp.K * inp.gamma_max / (math.sqrt(inp.Nr) * inp.c_min)
        * (math.sqrt(math.pi) + math.log(6 * inp.K))
    )


def antenna_bound_symbol(inp: FadingBoundInput) -> int:
    """
    Antennas needed so |s_hat - s| <= epsilon with probability >= 1 - delta.

    Returns:
        int: ceil(8 gamma^2 K^2 / (epsilon^2 c^2) * ln(6K / delta)), times
        sigma_z^2 / sigma_h^2 for variant="noise-scaled"
    """
    value = (
        8.0 * inp.gamma_max ** 2 * inp.K ** 2 / (inp.epsilon ** 2 * inp.c_min ** 2)
        * math.log(6 * inp.K / inp.delta)
        * _variant_factor(inp)
    )
    return int(math.ceil(value))


def epsilon_for_antennas(inp: FadingBoundInput, n_r: int) -> float:
    """The error level antenna_bound_symbol guarantees at exactly n_r antennas."""
    if n_r < 1:
        raise ValueError(f"n_r must be >= 1, got {n_r}")
    numerator = (
        8.0 * inp.gamma_max ** 2 * inp.K ** 2 * math.log(6 * inp.K / inp.delta) * _variant_factor(inp)
    )
    return math.sqrt(numerator / (n_r * inp.c_min ** 2))


def mse_fading_bound(inp: FadingBoundInput, delta_g: float) -> FadingBoundReport:
    """
    Gradient MSE bound over the fading channel.

    Args:
        inp: gamma per subchannel, deviations, sizes, antennas
        delta_g: Quantizer clip bound

    Returns:
        FadingBoundReport: sigma_fad2 = 16 N gamma_max^2 q / (Nr c_min^2) * (pi + 2 ln(6K)^2)
        in level units times the level width squared, the quantization term and the total
    """
    if delta_g <= 0:
        raise ValueError("delta_g must be positive")
    check_level_count(inp.q)
    sigma_fad2 = (
        16.0 * inp.N * inp.gamma_max ** 2 * inp.q / (inp.Nr * inp.c_min ** 2)
        * (math.pi + 2.0 * math.log(6 * inp.K) ** 2)
        * level_to_gradient_scale(inp.q, delta_g)
    )
    sigma_q2 = quantization_variance(inp.N, inp.K, inp.q, delta_g)
    return FadingBoundReport(sigma_fad2=sigma_fad2, sigma_q2=sigma_q2, total=sigma_fad2 + sigma_q2)


def antenna_bound_gradient(inp: FadingBoundInput) -> int:
    """ceil(16 gamma_max^2 N q / (epsilon^2 c_min^2) * ln(6K / delta))."""
    value = (
        16.0 * inp.gamma_max ** 2 * inp.N * inp.q / (inp.epsilon ** 2 * inp.c_min ** 2)
        * math.log(6 * inp.K / inp.delta)
        * _variant_factor(inp)
    )
    return int(math.ceil(value))


def convergence_rhs(inp: ConvergenceInput) -> float:
    """
    Bound on the average squared global-gradient norm over T rounds.

    Args:
        inp: Learning rate, smoothness, rounds, initial loss gap and error variances

    Returns:
        float: gap / (T eta (1 - eta L / 2)) + (eta L / 2) / (1 - eta L / 2) * (sigma_ch2 + sigma_q2 + theta_bar)
    """
    step = inp.eta * inp.L
    if step >= 2:
        raise ValueError(f"eta * L must be below 2, got {step}")
    damping = 1.0 - step / 2.0
    return (
        inp.loss_gap / (inp.T * inp.eta * damping)
        + (step / 2.0) / damping * (inp.sigma_ch2 + inp.sigma_q2 + inp.theta_bar)
    )


def _rate(signal: float, distortion: float, bandwidth: float) -> float:
    if distortion <= 0:
        return math.inf
    return max(bandwidth * math.log(signal / distortion), 0.0)


def _latency(symbol_time: float, n: int, rate: float) -> float:
    if rate <= 0:
        return math.inf
    return symbol_time * n / rate


def latency_suite(inp: LatencyInput) -> LatencyReport:
    """
    Rate-distortion latencies of analog aggregation, digital QAM aggregation and OFDMA.

    Both over-the-air schemes use the whole band for N parameters. OFDMA splits
    the band into S = `subchannels` equal sub-bands (S = K when unset), each
    device sends its N parameters alone on one sub-band at the digital
    scheme's distortion, and the K devices go in ceil(K / S) turns. Rates are
    linear in bandwidth, so t_ofdma = ceil(K / S) * S * t_compfed, which is
    K * t_compfed whenever S divides K, in any bandwidth unit.

    The digital distortion is measured on the q-QAM lattice of spacing
    d_q = sqrt((q+1) / (2 q^2)); distortion="level" works in unit level steps
    with the single-symbol error moment instead.

    Args:
        inp: Bandwidth, symbol time, sizes, noise, symbol moments and quantizer range

    Returns:
        LatencyReport: latencies, gamma_ratio = t_compfed / t_analog, rates and distortions
    """
    second, first = inp.symbol_moments
    q = inp.q
    signal_analog = second
    distortion_analog = (
        inp.sigma_z2 / (inp.Nr * inp.K * inp.sigma_h2)
        + (inp.K - 1) * first ** 2 / (3.0 * inp.Nr)
    )
    signal_compfed = second * 2.0 * q ** 2 / (q + 1)
    if inp.distortion == "lattice":
        spacing2 = (q + 1) / (2.0 * q ** 2)
        e_r = symbol_error_moment(q, sigma_eff=math.sqrt(distortion_analog / 2.0 / spacing2), alphabet="sum")
        distortion_compfed = inp.delta_g ** 2 / (q ** 2 * inp.K * spacing2) + 2.0 * e_r
    else:
        e_r = symbol_error_moment(q, sigma_eff=math.sqrt(distortion_analog / 2.0))
        distortion_compfed = inp.delta_g ** 2 / (q ** 2 * inp.K) + (1 + q) * e_r ** 2 / inp.K ** 2

    rate_analog = _rate(signal_analog, distortion_analog, inp.bandwidth)
    rate_compfed = _rate(signal_compfed, distortion_compfed, inp.bandwidth)
    subchannels = inp.subchannels if inp.subchannels is not None else inp.K
    rate_link = _rate(signal_compfed, distortion_compfed, inp.bandwidth / subchannels)
    turns = math.ceil(inp.K / subchannels)

    t_analog = _latency(inp.symbol_time, inp.N, rate_analog)
    t_compfed = _latency(inp.symbol_time, inp.N, rate_compfed)
    t_ofdma = turns * _latency(inp.symbol_time, inp.N, rate_link)

    if math.isinf(t_analog) and math.isinf(t_compfed):
        gamma_ratio = math.nan
    elif math.isinf(t_analog):
        gamma_ratio = 0.0
    else:
        gamma_ratio = t_compfed / t_analog
    if math.isinf(t_compfed) or math.isinf(t_analog):
        logger.warning(f"Zero transmission rate at K={inp.K}, Nr={inp.Nr}, q={q}; latency reported as infinite")

    return LatencyReport(
        t_analog=t_analog,
        t_compfed=t_compfed,
        t_ofdma=t_ofdma,
        gamma_ratio=gamma_ratio,
        rate_analog=rate_analog,
        rate_compfed=rate_compfed,
        distortion_analog=distortion_analog,
        distortion_compfed=distortion_compfed,
    )
