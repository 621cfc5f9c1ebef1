"""
Fading multiple-access channel with a multi-antenna edge server.

Arrays carry optional leading batch axes: a realization for n subchannels
holds h with shape (n, K, Nr) and z with shape (n, Nr).
"""
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .schemas import SystemConfig

logger = logging.getLogger(__name__)

# Upper bound on h entries drawn at once by fading_sum.
CHUNK_ELEMENTS = 2_000_000


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray
    z: np.ndarray

    @property
    def devices(self) -> int:
        return self.h.shape[-2]

    @property
    def antennas(self) -> int:
        return self.h.shape[-1]


class ErrorDecomposition(NamedTuple):
    e_sig: complex
    e_int: complex
    e_noise: complex

    @property
    def total(self) -> complex:
        return self.e_sig + self.e_int + self.e_noise


def _gaussian(rng: np.random.Generator, shape, variance: float, complex_valued: bool) -> np.ndarray:
    if complex_valued:
        scale = math.sqrt(variance / 2.0)
        return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return math.sqrt(variance) * rng.standard_normal(shape)


def sample_channels(cfg: SystemConfig, rng: np.random.Generator, count: int) -> ChannelRealization:
    """Draw i.i.d. coefficients and noise for `count` subchannels at once."""
    complex_valued = cfg.channel_dist == "complex-gaussian"
    h = _gaussian(rng, (count, cfg.K, cfg.Nr), cfg.sigma_h2, complex_valued)
    z = _gaussian(rng, (count, cfg.Nr), cfg.sigma_z2, complex_valued)
    return ChannelRealization(h=h, z=z)


def sample_channel(cfg: SystemConfig, rng: np.random.Generator) -> ChannelRealization:
    batch = sample_channels(cfg, rng, 1)
    return ChannelRealization(h=batch.h[0], z=batch.z[0])


def _check_symbols(symbols: np.ndarray, ch: ChannelRealization) -> np.ndarray:
    symbols = np.asarray(symbols)
    if symbols.shape != ch.h.shape[:-1]:
        raise ValueError(f"Symbols of shape {symbols.shape} do not match channel of shape {ch.h.shape}")
    return symbols


def apply_mac(symbols: np.ndarray, ch: ChannelRealization) -> np.ndarray:
    """Superposition at the receive array: y = sum_k h_k s_k + z."""
    symbols = _check_symbols(symbols, ch)
    return np.einsum("...kr,...k->...r", ch.h, symbols) + ch.z


def sum_beamformer(ch: ChannelRealization, cfg: SystemConfig) -> np.ndarray:
    """Blind receive vector u = (sum_k h_k) / (Nr sigma_h^2)."""
    return ch.h.sum(axis=-2) / (ch.antennas * cfg.sigma_h2)


def combine(u: np.ndarray, y: np.ndarray) -> np.ndarray:
    """s_hat = u^H y; the beamformer is conjugated, the data is not."""
    u = np.asarray(u)
    y = np.asarray(y)
    if u.shape != y.shape:
        raise ValueError(f"Beamformer of shape {u.shape} does not match received vector of shape {y.shape}")
    return np.sum(np.conj(u) * y, axis=-1)


def transmit_awgn(symbols: np.ndarray, cfg: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """
    Reduced-noise abstraction of the array: sum over devices plus circular
    noise of total variance sigma_z^2 / Nr.

    Args:
        symbols: Shape (K,) or (K, n) for n subchannels
        cfg: System parameters
        rng: Random stream

    Returns:
        np.ndarray: Received sums, shape () or (n,)
    """
    symbols = np.asarray(symbols)
    if symbols.shape[0] != cfg.K:
        raise ValueError(f"Expected {cfg.K} device symbols, got {symbols.shape[0]}")
    clean = symbols.sum(axis=0)
    noise = _gaussian(rng, np.shape(clean), cfg.sigma_z2 / cfg.Nr, complex_valued=True)
    return clean + noise


def fading_sum(symbols: np.ndarray, cfg: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """
    Full fading path for n subchannels: fresh channel per subchannel, MAC,
    blind beamformer, combining.

    Args:
        symbols: Shape (K, n)
        cfg: System parameters
        rng: Random stream; draws are taken chunk by chunk in subchannel order

    Returns:
        np.ndarray: Combined estimates of the per-subchannel sums, shape (n,)
    """
    symbols = np.asarray(symbols)
    if symbols.ndim != 2 or symbols.shape[0] != cfg.K:
        raise ValueError(f"Expected symbols of shape ({cfg.K}, n), got {symbols.shape}")
    n = symbols.shape[1]
    chunk = max(1, CHUNK_ELEMENTS // (cfg.K * cfg.Nr))
    out = np.empty(n, dtype=complex)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        ch = sample_channels(cfg, rng, stop - start)
        y = apply_mac(symbols[:, start:stop].T, ch)
        out[start:stop] = combine(sum_beamformer(ch, cfg), y)
    return out


def error_decomposition(ch: ChannelRealization, symbols: np.ndarray, cfg: SystemConfig) -> ErrorDecomposition:
    """
    Split combine(u, y) - sum_k s_k into the self-gain, cross-device and noise terms.

    Args:
        ch: One subchannel realization (h of shape (K, Nr))
        symbols: Shape (K,)
        cfg: System parameters

    Returns:
        ErrorDecomposition: e_sig, e_int, e_noise
    """
    symbols = _check_symbols(symbols, ch)
    if ch.h.ndim != 2:
        raise ValueError("error_decomposition expects a single subchannel realization")
    scale = ch.antennas * cfg.sigma_h2
    gram = np.conj(ch.h) @ ch.h.T  # gram[j, k] = h_j^H h_k
    own = np.real(np.diag(gram))
    e_sig = np.sum((own / scale - 1.0) * symbols)
    cross = gram - np.diag(np.diag(gram))
    e_int = np.sum(cross @ symbols) / scale
    e_noise = np.sum(np.conj(ch.h) @ ch.z) / scale
    return ErrorDecomposition(e_sig=complex(e_sig), e_int=complex(e_int), e_noise=complex(e_noise))
