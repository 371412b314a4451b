"""Gray-mapped unit-energy QPSK.

Bit pair (b0, b1) maps to ((1-2*b0) + j*(1-2*b1)) / sqrt(2), so b0 rides the
real rail and b1 the imaginary rail.  Detection is per-component sign and
therefore invariant to any positive receiver scale.
"""

from __future__ import annotations

import numpy as np

_SCALE = 1.0 / np.sqrt(2.0)


def modulate(bits: np.ndarray) -> np.ndarray:
    """Map bits (..., 2) to unit-energy QPSK symbols of shape (...)."""
    bits = np.asarray(bits)
    return _SCALE * ((1.0 - 2.0 * bits[..., 0]) + 1j * (1.0 - 2.0 * bits[..., 1]))


def demodulate(shat: np.ndarray) -> np.ndarray:
    """Hard decisions: b0 = (Re < 0), b1 = (Im < 0); exact zeros decide 0."""
    shat = np.asarray(shat)
    return np.stack([(shat.real < 0), (shat.imag < 0)], axis=-1).astype(np.uint8)
