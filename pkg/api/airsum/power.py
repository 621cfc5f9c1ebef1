import logging
from typing import Optional, Sequence

import numpy as np

from .schemas import PowerScaling, SystemConfig

logger = logging.getLogger(__name__)


def worst_case_symbol_energy(q: int) -> float:
    """Largest |x|^2 on the q-QAM lattice: 2 * ((2^b - 1)/2)^2."""
    side = 1 << ((q.bit_length() - 1) // 2)
    return 2.0 * ((side - 1) / 2.0) ** 2


def select_beta(
    dataset_sizes: Sequence[int],
    cfg: SystemConfig,
    margin: float = 1.1,
    peak_energy: Optional[float] = None,
) -> PowerScaling:
    """
    Pick the transmit scaling so every realizable frame meets the power budget.

    Args:
        dataset_sizes: |D_k| per device
        cfg: System parameters (N, q, P_max)
        margin: Factor >= 1 applied on top of the worst case
        peak_energy: Per-subchannel worst-case |x|^2; defaults to the q-QAM corner point

    Returns:
        PowerScaling: beta = margin * max_k |D_k|^2 * N * peak_energy / P_max
    """
    if not dataset_sizes:
        raise ValueError("dataset_sizes must not be empty")
    if margin < 1:
        raise ValueError(f"margin must be >= 1, got {margin}")
    energy = worst_case_symbol_energy(cfg.q) if peak_energy is None else peak_energy
    if energy <= 0:
        raise ValueError("peak_energy must be positive")
    largest = max(dataset_sizes)
    beta = margin * largest ** 2 * cfg.N * energy / cfg.p_max
    logger.debug(f"Selected beta={beta:.6g} for sizes up to {largest}, N={cfg.N}, q={cfg.q}")
    return PowerScaling(beta=beta, dataset_sizes=tuple(int(s) for s in dataset_sizes))


def preprocess(x: np.ndarray, d_k: int, scaling: PowerScaling) -> np.ndarray:
    """s_k = |D_k| x_k / sqrt(beta)."""
    return d_k * np.asarray(x) / np.sqrt(scaling.beta)


def postprocess(s_hat: np.ndarray, dataset_sizes: Sequence[int], scaling: PowerScaling) -> np.ndarray:
    """r = sqrt(beta) s_hat / sum_k |D_k|."""
    return np.sqrt(scaling.beta) * np.asarray(s_hat) / float(sum(dataset_sizes))


def power_check(frame: np.ndarray, p_max: float) -> bool:
    return float(np.sum(np.abs(np.asarray(frame)) ** 2)) <= p_max


def lattice_noise_gain(scaling: PowerScaling) -> float:
    """Noise variance multiplier seen on the sum lattice after post-processing (beta / |D|^2)."""
    if not scaling.equal_sizes:
        raise ValueError("Lattice noise gain is defined for equal dataset sizes only")
    return scaling.beta / scaling.dataset_sizes[0] ** 2
