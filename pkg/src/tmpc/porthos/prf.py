"""Pairwise pseudorandom tapes: AES-128 in counter mode over (stream-id, index).

Two parties holding the same 128-bit key expand identical element streams,
which is how correlated randomness (Beaver masks, one share of every helper
message) is agreed without sending it.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .. import ring as zr
from ..errors import StreamReuseError


def _aes_blocks(key: bytes, stream_id: int, start: int, n: int) -> np.ndarray:
    blocks = np.empty((n, 2), dtype="<u8")
    blocks[:, 0] = np.uint64(stream_id)
    blocks[:, 1] = np.arange(start, start + n, dtype=np.uint64)
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    out = enc.update(blocks.tobytes()) + enc.finalize()
    return np.frombuffer(out, dtype="<u8").reshape(n, 2)


@dataclass
class PrfTape:
    """One stream of pseudorandom ring elements.

    Element ``i`` is the low 8 bytes (little-endian) of AES_key(stream_id || i).
    """

    key: bytes
    stream_id: int
    counter: int = 0

    def __post_init__(self):
        if len(self.key) != 16:
            raise ValueError("PRF keys are 128 bits")

    def expand(self, n: int) -> np.ndarray:
        if n < 0 or self.counter + n >= 2 ** 64:
            raise ValueError("stream exhausted")
        if n == 0:
            return np.zeros(0, dtype=np.uint64)
        out = _aes_blocks(self.key, self.stream_id, self.counter, n)[:, 0].astype(np.uint64)
        self.counter += n
        return out

    # convenience draws, all consuming whole elements from the stream

    def ring(self, shape) -> np.ndarray:
        shape = tuple(np.atleast_1d(shape)) if not isinstance(shape, tuple) else shape
        return self.expand(int(np.prod(shape, dtype=np.int64))).reshape(shape)

    def odd(self, shape) -> np.ndarray:
        return zr.odd_reduce(self.ring(shape))

    def field(self, shape, p: int = zr.PRIME) -> np.ndarray:
        return (self.ring(shape) % np.uint64(p)).astype(np.int64)

    def nonzero_field(self, shape, p: int = zr.PRIME) -> np.ndarray:
        return (self.ring(shape) % np.uint64(p - 1)).astype(np.int64) + 1

    def bits(self, shape) -> np.ndarray:
        return self.ring(shape) & np.uint64(1)

    def permutation_keys(self, shape) -> np.ndarray:
        """Sort keys; ``np.argsort`` along the last axis gives one permutation per row."""
        return self.ring(shape)


@dataclass
class TapeRegistry:
    """Issues stream-ids and refuses to hand out the same (key, stream-id) twice.

    Stream-ids are ``phase << 48 | n`` where ``n`` counts up per (pair, phase).
    """

    keys: dict[str, bytes]
    _issued: set = field(default_factory=set)
    _next: dict = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock)

    def open(self, pair: str, stream_id: int) -> PrfTape:
        key = self.keys[pair]
        with self._lock:
            tag = (key, stream_id)
            if tag in self._issued:
                raise StreamReuseError(f"stream {stream_id:#x} already issued under key {pair}")
            self._issued.add(tag)
        return PrfTape(key, stream_id)

    def next(self, pair: str, phase: int) -> PrfTape:
        with self._lock:
            n = self._next.get((pair, phase), 0)
            self._next[(pair, phase)] = n + 1
        return self.open(pair, (phase << 48) | n)
