"""Arithmetic over Z_{2^64}, Z_{2^64-1} and the small prime field used for bit shares.

Ring elements are stored as ``np.uint64``; unsigned wraparound of numpy
integer arrays gives arithmetic mod 2^64 for free.  Elements of the odd ring
Z_{2^64-1} are kept in ``[0, 2^64 - 2]``.
"""

from __future__ import annotations

import numpy as np

RING_BITS = 64
MASK = (1 << RING_BITS) - 1
ODD_MODULUS = MASK  # 2^64 - 1
PRIME = 67

_ODD_MAX = np.uint64(MASK)
_ONE = np.uint64(1)


def ring(x) -> np.ndarray:
    """Coerce Python ints (possibly negative) or int arrays into ring elements."""
    if isinstance(x, np.ndarray):
        if x.dtype == np.uint64:
            return x
        if x.dtype.kind == "i":
            return x.astype(np.int64).view(np.uint64)
        if x.dtype.kind == "u":
            return x.astype(np.uint64)
        if x.dtype == object:
            return np.array([int(v) & MASK for v in x.ravel()], dtype=np.uint64).reshape(x.shape)
        raise TypeError(f"cannot interpret {x.dtype} as ring elements")
    arr = np.asarray(x, dtype=object)
    flat = [int(v) & MASK for v in arr.ravel()]
    return np.array(flat, dtype=np.uint64).reshape(arr.shape)


def const(v: int) -> np.uint64:
    return np.uint64(int(v) & MASK)


def signed(x: np.ndarray) -> np.ndarray:
    """Two's-complement view of ring elements."""
    return np.asarray(x, dtype=np.uint64).view(np.int64)


def neg(x: np.ndarray) -> np.ndarray:
    return np.uint64(0) - x


def wrap(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """1 where a + b >= 2^64 (as integers), else 0, as uint64."""
    return ((a + b) < a).astype(np.uint64)


def msb(x: np.ndarray) -> np.ndarray:
    return x >> np.uint64(63)


# -- odd ring Z_{2^64 - 1} ---------------------------------------------------

def odd_reduce(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.uint64)
    return np.where(x == _ODD_MAX, np.uint64(0), x)


def odd_add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    s = a + b
    carry = (s < a).astype(np.uint64)
    # 2^64 = 1 (mod 2^64 - 1); s < a <= 2^64-2 when carrying, so no second carry
    s = s + carry
    return np.where(s == _ODD_MAX, np.uint64(0), s)


def odd_neg(a: np.ndarray) -> np.ndarray:
    return np.where(a == 0, np.uint64(0), _ODD_MAX - a)


def odd_sub(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return odd_add(a, odd_neg(b))


def odd_from_bits(bits: np.ndarray) -> np.ndarray:
    """Bits {0,1} as odd-ring elements (the identity, with a dtype check)."""
    return np.asarray(bits, dtype=np.uint64)


# -- bit decomposition -------------------------------------------------------

def bit_decompose(x: np.ndarray, nbits: int = RING_BITS) -> np.ndarray:
    """Bits of each element along a new trailing axis, index 0 = least significant."""
    x = np.asarray(x, dtype=np.uint64)
    shifts = np.arange(nbits, dtype=np.uint64)
    return ((x[..., None] >> shifts) & _ONE).astype(np.int64)
