"""Wire format: handshake and length-prefixed frames, all little-endian.

Handshake: ``b"TMPW" | u8 version | u8 party-id``.
Frame: ``u16 phase-tag | u32 payload-length | payload``; element payloads are
packed u64 ring elements.
"""

from __future__ import annotations

import struct

import numpy as np

from ..errors import HandshakeError

WIRE_MAGIC = b"TMPW"
WIRE_VERSION = 1

HANDSHAKE = 1
BEAVER_E = 2
BEAVER_F = 3
BEAVER_C = 4
PC_MSG = 5
MSB_DEAL = 6
REVEAL_OUTPUT = 7
CONTROL = 8

PHASE_NAMES = {
    HANDSHAKE: "handshake",
    BEAVER_E: "beaver-E",
    BEAVER_F: "beaver-F",
    BEAVER_C: "beaver-C",
    PC_MSG: "pc-msg",
    MSB_DEAL: "msb-deal",
    REVEAL_OUTPUT: "reveal-output",
    CONTROL: "control",
}
REVEAL_PHASES = (BEAVER_E, BEAVER_F, BEAVER_C)

_HEADER = struct.Struct("<HI")
HEADER_SIZE = _HEADER.size  # 6
_HELLO = struct.Struct("<4sBB")


def encode_handshake(party: int, version: int = WIRE_VERSION) -> bytes:
    return _HELLO.pack(WIRE_MAGIC, version, party)


def decode_handshake(data: bytes) -> int:
    magic, version, party = _HELLO.unpack(data)
    if magic != WIRE_MAGIC:
        raise HandshakeError(f"bad wire magic {magic!r}")
    if version != WIRE_VERSION:
        raise HandshakeError(f"wire version mismatch: peer speaks {version}, we speak {WIRE_VERSION}")
    return party


HANDSHAKE_SIZE = _HELLO.size


def encode_frame(tag: int, payload: bytes) -> bytes:
    return _HEADER.pack(tag, len(payload)) + payload


def decode_header(data: bytes) -> tuple[int, int]:
    return _HEADER.unpack(data)


def pack_elements(arr: np.ndarray) -> bytes:
    return np.ascontiguousarray(arr, dtype=np.uint64).astype("<u8", copy=False).tobytes()


def unpack_elements(payload: bytes) -> np.ndarray:
    return np.frombuffer(payload, dtype="<u8").astype(np.uint64)
