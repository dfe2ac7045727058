"""Fixed-point encoding r -> floor(r * 2^s) in the ring Z_{2^64}."""

from __future__ import annotations

import numpy as np

from .. import ring
from ..errors import QuantizationOverflow

GUARD_BITS = 62


def quantize(t, s: int) -> np.ndarray:
    """Encode a float tensor at ``s`` fractional bits.

    >>> int(quantize(np.float32(0.5), 15))
    16384
    """
    if not 0 <= s <= GUARD_BITS:
        raise ValueError(f"scale {s} outside [0, {GUARD_BITS}]")
    scaled = np.floor(np.asarray(t, dtype=np.float64) * float(2 ** s))
    if scaled.size and not np.all(np.abs(scaled) < float(2 ** GUARD_BITS)):
        raise QuantizationOverflow(f"value exceeds 2^{GUARD_BITS} at scale {s}")
    return scaled.astype(np.int64).view(np.uint64)


def dequantize(t, s: int, dtype=np.float64) -> np.ndarray:
    """Decode ring elements back to reals: signed(x) / 2^s.

    The default float64 result keeps the round-trip within 2^-s; pass
    ``dtype=np.float32`` for the narrow tensor type.
    """
    if not 0 <= s <= GUARD_BITS:
        raise ValueError(f"scale {s} outside [0, {GUARD_BITS}]")
    return (ring.signed(ring.ring(np.asarray(t))).astype(np.float64) / float(2 ** s)).astype(dtype)
