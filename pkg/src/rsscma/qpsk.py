"""Gray-mapped QPSK for the common stream.

Points are indexed s1..s4 (0..3 here) with bit pairs (MSB, LSB)::

    s1 = ( 1 + 1j)/sqrt(2)  <->  (0, 0)
    s2 = (-1 + 1j)/sqrt(2)  <->  (0, 1)
    s3 = (-1 - 1j)/sqrt(2)  <->  (1, 1)
    s4 = ( 1 - 1j)/sqrt(2)  <->  (1, 0)

so the MSB is carried by the sign of the imaginary part and the LSB by the sign
of the real part.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from rsscma.scma import LLR_MAX

POINTS = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / np.sqrt(2)
BIT_MAP = np.array([[0, 0], [0, 1], [1, 1], [1, 0]], dtype=np.int8)
# point index for the bit pair value 2*MSB + LSB
_INDEX_OF_BITS = np.array([0, 1, 3, 2])

POINTS.setflags(write=False)
BIT_MAP.setflags(write=False)


@dataclass(frozen=True)
class LlrFrame:
    """Bit LLRs ``(..., 2)``: column 0 is the MSB, column 1 the LSB."""

    llr: np.ndarray
    noise_var: object = None


def _llr_array(frame) -> np.ndarray:
    return np.asarray(frame.llr if isinstance(frame, LlrFrame) else frame, dtype=float)


def bits_to_points(bits) -> np.ndarray:
    """Point indices (0..3) for bit pairs in the last axis."""
    b = np.asarray(bits)
    if b.shape[-1:] != (2,):
        raise ValueError("bits must have a trailing axis of length 2 (MSB, LSB)")
    if np.any((b != 0) & (b != 1)):
        raise ValueError("bits must be 0 or 1")
    return _INDEX_OF_BITS[2 * b[..., 0] + b[..., 1]]


def qpsk_modulate(bits) -> np.ndarray:
    return POINTS[bits_to_points(bits)]


def euclidean_distances(y) -> np.ndarray:
    """Squared distances |y - s_i|^2 to the four points, in a trailing axis of length 4."""
    y = np.asarray(y, dtype=complex)
    return np.abs(y[..., None] - POINTS) ** 2


def qpsk_hard_demod(y) -> np.ndarray:
    """Bits of the nearest point; equidistant points resolve to the lowest index."""
    return BIT_MAP[np.argmin(euclidean_distances(y), axis=-1)]


def qpsk_llr(y, noise_var) -> LlrFrame:
    """Exact bit LLRs  log sum_{b=0} exp(-d/2 noise_var) - log sum_{b=1} exp(-d/2 noise_var).

    ``noise_var`` plays the role of sigma^2 in exp(-d / (2 sigma^2)), i.e. the
    per-real-dimension noise variance.  It may be an array broadcastable to
    ``y``; infinite entries yield zero LLRs.
    """
    nv = np.asarray(noise_var, dtype=float)
    if np.any(~(nv > 0)):
        raise ValueError("noise variance must be positive")
    metric = -euclidean_distances(y) / (2.0 * nv[..., None])
    # MSB = 0 on {s1, s2}, LSB = 0 on {s1, s4}
    msb = np.logaddexp(metric[..., 0], metric[..., 1]) - np.logaddexp(metric[..., 2], metric[..., 3])
    lsb = np.logaddexp(metric[..., 0], metric[..., 3]) - np.logaddexp(metric[..., 1], metric[..., 2])
    llr = np.clip(np.stack([msb, lsb], axis=-1), -LLR_MAX, LLR_MAX)
    return LlrFrame(llr, noise_var)


def llr_to_bit_probabilities(frame) -> np.ndarray:
    """P(bit = 0) = 1 / (1 + exp(-LLR)) for every entry."""
    return expit(_llr_array(frame))


def soft_symbols(frame) -> np.ndarray:
    """Expected constellation point given independent bit probabilities from the LLRs."""
    p0 = llr_to_bit_probabilities(frame)
    p1 = 1.0 - p0
    msb0, lsb0 = p0[..., 0], p0[..., 1]
    msb1, lsb1 = p1[..., 0], p1[..., 1]
    probs = (msb0 * lsb0, msb0 * lsb1, msb1 * lsb1, msb1 * lsb0)
    return sum(pr * s for pr, s in zip(probs, POINTS))
