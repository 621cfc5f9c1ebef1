"""
Gradient quantizer and q-QAM sum codec.

Levels 0..q-1 are written in base 2^b: the residue rides the in-phase axis
and the quotient the quadrature axis, both on a unit-spaced zero-mean grid.
Superposed symbols therefore land on a sum lattice from which the exact
integer sum of the levels can be read back.
"""
import logging
import math
from fractions import Fraction
from typing import List, NamedTuple, Union

import numpy as np

from .schemas import QuantizerSpec, check_level_count

logger = logging.getLogger(__name__)

Number = Union[int, float, Fraction]


class EncodedSymbol(NamedTuple):
    re: float
    im: float

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)


class LevelSum(NamedTuple):
    value: int
    k: int


def _side(q: int) -> int:
    check_level_count(q)
    return 1 << ((q.bit_length() - 1) // 2)


def quantize(g: float, spec: QuantizerSpec) -> int:
    """
    Map a real gradient entry to its quantizer cell index.

    [-Δ_g, Δ_g] is cut into q cells of width 2Δ_g/q. Inputs outside the range
    are clipped first; a value on an interior boundary belongs to the upper cell.

    Args:
        g: Gradient entry
        spec: Level count and clip bound

    Returns:
        int: Level in [0, q-1]
    """
    if not math.isfinite(g):
        raise ValueError(f"Cannot quantize non-finite value {g}")
    clipped = min(max(g, -spec.delta_g), spec.delta_g)
    index = math.floor((clipped + spec.delta_g) * spec.q / (2.0 * spec.delta_g))
    return min(max(index, 0), spec.q - 1)


def quantize_array(g: np.ndarray, spec: QuantizerSpec) -> np.ndarray:
    """Vectorized quantize; returns int64 levels with the same shape as g."""
    g = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(g)):
        raise ValueError("Cannot quantize non-finite values")
    clipped = np.clip(g, -spec.delta_g, spec.delta_g)
    index = np.floor((clipped + spec.delta_g) * spec.q / (2.0 * spec.delta_g)).astype(np.int64)
    return np.clip(index, 0, spec.q - 1)


def dequantize(avg_level: Number, spec: QuantizerSpec) -> float:
    """
    Cell-center reconstruction of a (possibly fractional) average level.

    Args:
        avg_level: Level in [0, q-1]; averages over K devices sit on a grid of 1/K
        spec: Level count and clip bound

    Returns:
        float: -Δ_g + (avg_level + 0.5) * 2Δ_g/q
    """
    if not 0 <= avg_level <= spec.q - 1:
        raise ValueError(f"Average level {avg_level} outside [0, {spec.q - 1}]")
    return -spec.delta_g + (float(avg_level) + 0.5) * spec.step


def dequantize_array(avg_levels: np.ndarray, spec: QuantizerSpec) -> np.ndarray:
    avg_levels = np.asarray(avg_levels, dtype=float)
    if np.any(avg_levels < 0) or np.any(avg_levels > spec.q - 1):
        raise ValueError(f"Average levels outside [0, {spec.q - 1}]")
    return -spec.delta_g + (avg_levels + 0.5) * spec.step


def encode(level: int, q: int) -> EncodedSymbol:
    """
    Place a level on the q-QAM lattice.

    Args:
        level: Integer in [0, q-1]
        q: Modulation order, a power of 4

    Returns:
        EncodedSymbol: (level mod 2^b, floor(level / 2^b)), both shifted by (1 - 2^b)/2
    """
    side = _side(q)
    if not 0 <= level <= q - 1:
        raise ValueError(f"Level {level} outside [0, {q - 1}]")
    shift = (1 - side) / 2.0
    return EncodedSymbol(re=(level % side) + shift, im=(level // side) + shift)


def encode_array(levels: np.ndarray, q: int) -> np.ndarray:
    """Vectorized encode returning complex lattice points."""
    side = _side(q)
    levels = np.asarray(levels, dtype=np.int64)
    if np.any(levels < 0) or np.any(levels > q - 1):
        raise ValueError(f"Levels outside [0, {q - 1}]")
    shift = (1 - side) / 2.0
    return ((levels % side) + shift) + 1j * ((levels // side) + shift)


def round_half(z: float) -> float:
    """Nearest half-integer, ties upward: floor(z) + 0.5."""
    if not math.isfinite(z):
        raise ValueError(f"Cannot round non-finite value {z}")
    return math.floor(z) + 0.5


def decode_sum(s_hat: complex, k: int, q: int) -> LevelSum:
    """
    Recover the integer sum of k superposed levels from a (noisy) lattice sum.

    Each axis is shifted by k(2^b - 1)/2, rounded to the nearest integer with
    ties upward and clamped to [0, k(2^b - 1)]; the quadrature count carries
    weight 2^b.

    Args:
        s_hat: Received sum of encoded symbols
        k: Number of superposed devices
        q: Modulation order

    Returns:
        LevelSum: value in [0, k(q-1)] together with k
    """
    if k < 1:
        raise ValueError(f"Participant count must be >= 1, got {k}")
    side = _side(q)
    s_hat = complex(s_hat)
    if not (math.isfinite(s_hat.real) and math.isfinite(s_hat.imag)):
        raise ValueError(f"Cannot decode non-finite sample {s_hat}")
    top = k * (side - 1)
    offset = top / 2.0
    m_re = min(max(math.floor(s_hat.real + offset + 0.5), 0), top)
    m_im = min(max(math.floor(s_hat.imag + offset + 0.5), 0), top)
    return LevelSum(value=m_re + side * m_im, k=k)


def decode_sum_array(s_hat: np.ndarray, k: int, q: int) -> np.ndarray:
    """Vectorized decode_sum returning int64 level sums."""
    if k < 1:
        raise ValueError(f"Participant count must be >= 1, got {k}")
    side = _side(q)
    s_hat = np.asarray(s_hat, dtype=complex)
    if not np.all(np.isfinite(s_hat)):
        raise ValueError("Cannot decode non-finite samples")
    top = k * (side - 1)
    offset = top / 2.0
    m_re = np.clip(np.floor(s_hat.real + offset + 0.5), 0, top).astype(np.int64)
    m_im = np.clip(np.floor(s_hat.imag + offset + 0.5), 0, top).astype(np.int64)
    return m_re + side * m_im


def decode_avg(s_hat: complex, k: int, q: int) -> Fraction:
    """Exact average level: decode_sum(...).value / k."""
    level_sum = decode_sum(s_hat, k, q)
    return Fraction(level_sum.value, k)


def constellation(q: int) -> List[EncodedSymbol]:
    return [encode(level, q) for level in range(q)]


def quantized_average(gradients: np.ndarray, spec: QuantizerSpec) -> np.ndarray:
    """
    Average of K gradient vectors as the noiseless digital path reproduces it.

    Args:
        gradients: Array of shape (K, N)
        spec: Quantizer

    Returns:
        np.ndarray: dequantize(sum of levels / K), shape (N,)
    """
    gradients = np.atleast_2d(np.asarray(gradients, dtype=float))
    k = gradients.shape[0]
    level_sums = quantize_array(gradients, spec).sum(axis=0)
    return dequantize_array(level_sums / k, spec)
