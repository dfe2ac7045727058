"""Party configuration, the TCP mesh and the per-party protocol context."""

from __future__ import annotations

import hashlib
import json
import logging
import queue
import socket
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DesyncError, HandshakeError, MeshTimeout, ProtocolError
from ..porthos.prf import PrfTape, TapeRegistry
from . import wire
from .counters import CommCounter, CommRecord, CommReport

log = logging.getLogger(__name__)

PAIRS = ("01", "02", "12")
DEFAULT_TIMEOUT = 10.0


def pair_of(a: int, b: int) -> str:
    return f"{min(a, b)}{max(a, b)}"


def _addr(s) -> tuple[str, int]:
    if isinstance(s, (tuple, list)):
        return str(s[0]), int(s[1])
    host, _, port = str(s).rpartition(":")
    return host or "127.0.0.1", int(port)


@dataclass
class PartyConfig:
    party: int
    listen: tuple[str, int]
    peers: dict[int, tuple[str, int]]
    keys: dict[str, bytes]
    output_recipients: tuple[int, ...] = (0,)
    reshaped_conv: bool = True
    prf_opt: bool = True
    timeout: float = DEFAULT_TIMEOUT
    local_key: bytes | None = None
    share_dir: str | None = None

    def __post_init__(self):
        if self.party not in (0, 1, 2):
            raise ValueError(f"party id must be 0, 1 or 2, got {self.party}")
        mine = {pair_of(self.party, j) for j in (0, 1, 2) if j != self.party}
        if set(self.keys) != mine:
            raise ValueError(f"party {self.party} must hold exactly keys {sorted(mine)}, got {sorted(self.keys)}")
        for k, v in self.keys.items():
            if len(v) != 16:
                raise ValueError(f"key {k} must be 128 bits")
        if set(self.peers) != {j for j in (0, 1, 2) if j != self.party}:
            raise ValueError("peers must list the two other parties")

    @property
    def output_recipient(self) -> bool:
        return self.party in self.output_recipients

    def private_key(self) -> bytes:
        if self.local_key is not None:
            return self.local_key
        seed = b"".join(self.keys[k] for k in sorted(self.keys)) + bytes([self.party])
        return hashlib.sha256(b"tmpc-local" + seed).digest()[:16]

    def to_dict(self) -> dict:
        d = {
            "party": self.party,
            "listen": f"{self.listen[0]}:{self.listen[1]}",
            "peers": {str(j): f"{h}:{p}" for j, (h, p) in sorted(self.peers.items())},
            "keys": {k: v.hex() for k, v in sorted(self.keys.items())},
            "output_recipients": list(self.output_recipients),
            "reshaped_conv": self.reshaped_conv,
            "prf_opt": self.prf_opt,
            "timeout": self.timeout,
        }
        if self.local_key is not None:
            d["local_key"] = self.local_key.hex()
        if self.share_dir is not None:
            d["share_dir"] = self.share_dir
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PartyConfig":
        return cls(
            party=int(d["party"]),
            listen=_addr(d["listen"]),
            peers={int(j): _addr(a) for j, a in d["peers"].items()},
            keys={k: bytes.fromhex(v) for k, v in d["keys"].items()},
            output_recipients=tuple(int(i) for i in d.get("output_recipients", [0])),
            reshaped_conv=bool(d.get("reshaped_conv", True)),
            prf_opt=bool(d.get("prf_opt", True)),
            timeout=float(d.get("timeout", DEFAULT_TIMEOUT)),
            local_key=bytes.fromhex(d["local_key"]) if d.get("local_key") else None,
            share_dir=d.get("share_dir"),
        )

    @classmethod
    def load(cls, path) -> "PartyConfig":
        cfg = cls.from_dict(json.loads(Path(path).read_text()))
        if cfg.share_dir is not None and not Path(cfg.share_dir).is_absolute():
            cfg.share_dir = str(Path(path).parent / cfg.share_dir)
        return cfg

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


def derive_keys(seed: int) -> dict[str, bytes]:
    return {p: hashlib.sha256(f"tmpc-key:{seed}:{p}".encode()).digest()[:16] for p in PAIRS}


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray(n)
    view = memoryview(buf)
    got = 0
    while got < n:
        k = sock.recv_into(view[got:], n - got)
        if k == 0:
            raise ProtocolError("connection closed by peer")
        got += k
    return bytes(buf)


class Channel:
    """One TCP connection to a peer.

    Writes go through a dedicated thread so a party never blocks on a full
    socket buffer while its peer is also writing; frame order per direction is
    preserved.
    """

    def __init__(self, sock: socket.socket, me: int, peer: int, counter: CommCounter,
                 timeout: float, record: bool = False):
        self.sock = sock
        self.me, self.peer = me, peer
        self.counter = counter
        self.timeout = timeout
        self.sent_digest = hashlib.sha256()
        self.recv_digest = hashlib.sha256()
        self.sent_frames: list[bytes] | None = [] if record else None
        self.recv_frames: list[bytes] | None = [] if record else None
        self._out: queue.Queue = queue.Queue()
        self._error: BaseException | None = None
        self._writer = threading.Thread(target=self._write_loop, name=f"P{me}->P{peer}", daemon=True)
        self._writer.start()

    def _write_loop(self):
        while True:
            frame = self._out.get()
            try:
                if frame is None:
                    return
                self.sock.sendall(frame)
            except BaseException as exc:  # surfaced on the next send/close
                self._error = exc
            finally:
                self._out.task_done()

    def send(self, tag: int, payload: bytes, elements: int) -> None:
        if self._error is not None:
            raise ProtocolError(f"send to party {self.peer} failed: {self._error}") from self._error
        frame = wire.encode_frame(tag, payload)
        self.sent_digest.update(frame)
        if self.sent_frames is not None:
            self.sent_frames.append(frame)
        self.counter.add(self.me, self.peer, tag, len(frame), elements)
        self._out.put(frame)

    def recv(self, tag: int, elements: bool = True) -> bytes:
        self.sock.settimeout(self.timeout)
        try:
            head = _recv_exact(self.sock, wire.HEADER_SIZE)
            got_tag, length = wire.decode_header(head)
            payload = _recv_exact(self.sock, length)
        except socket.timeout as exc:
            raise MeshTimeout(f"timed out waiting for data from party {self.peer}") from exc
        except OSError as exc:
            raise ProtocolError(f"connection to party {self.peer} failed: {exc}") from exc
        frame = head + payload
        self.recv_digest.update(frame)
        if self.recv_frames is not None:
            self.recv_frames.append(frame)
        n_el = length // 8 if elements else 0
        self.counter.add(self.peer, self.me, got_tag, len(frame), n_el)
        if got_tag != tag:
            raise DesyncError(
                f"protocol desync: expected phase {wire.PHASE_NAMES.get(tag, tag)} from party "
                f"{self.peer}, got {wire.PHASE_NAMES.get(got_tag, got_tag)}")
        return payload

    def flush(self) -> None:
        self._out.join()
        if self._error is not None:
            raise ProtocolError(f"send to party {self.peer} failed: {self._error}") from self._error

    def close(self) -> None:
        try:
            self.flush()
        finally:
            self._out.put(None)
            self._writer.join(timeout=self.timeout)
            try:
                self.sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            self.sock.close()


class PartyContext:
    """Everything one party needs while running protocols.

    Owned by a single protocol thread; the channels' writer threads only touch
    the (locked) counter.
    """

    def __init__(self, cfg: PartyConfig, channels: dict[int, Channel], counter: CommCounter):
        self.cfg = cfg
        self.party = cfg.party
        self.channels = channels
        self.counter = counter
        keys = dict(cfg.keys)
        keys["local"] = cfg.private_key()
        self.tapes = TapeRegistry(keys)

    # flags
    @property
    def prf_opt(self) -> bool:
        return self.cfg.prf_opt

    @property
    def reshaped_conv(self) -> bool:
        return self.cfg.reshaped_conv

    @property
    def recipients(self) -> tuple[int, ...]:
        return self.cfg.output_recipients

    @property
    def other(self) -> int:
        """The other data-holding party (only meaningful on P0/P1)."""
        return 1 - self.party

    def tape(self, pair: str, phase: int) -> PrfTape:
        return self.tapes.next(pair, phase)

    # messaging
    def send(self, peer: int, tag: int, arr) -> None:
        arr = np.asarray(arr)
        if arr.dtype != np.uint64:
            arr = arr.astype(np.int64).view(np.uint64)
        self.channels[peer].send(tag, wire.pack_elements(arr), arr.size)

    def recv(self, peer: int, tag: int, shape=None) -> np.ndarray:
        out = wire.unpack_elements(self.channels[peer].recv(tag))
        return out.reshape(shape) if shape is not None else out

    def send_bytes(self, peer: int, tag: int, payload: bytes) -> None:
        self.channels[peer].send(tag, payload, 0)

    def recv_bytes(self, peer: int, tag: int) -> bytes:
        return self.channels[peer].recv(tag, elements=False)

    # accounting
    def comm_report(self) -> CommReport:
        return comm_report(self)

    def transcript_digest(self) -> str:
        h = hashlib.sha256()
        for j in sorted(self.channels):
            h.update(self.channels[j].sent_digest.digest())
            h.update(self.channels[j].recv_digest.digest())
        return h.hexdigest()

    def close(self) -> None:
        for ch in self.channels.values():
            ch.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def comm_report(ctx: PartyContext) -> CommReport:
    recs = [CommRecord(s, r, t, b, e) for (s, r, t), (b, e) in sorted(ctx.counter.snapshot().items())]
    return CommReport(ctx.party, recs)


def _tune(sock: socket.socket) -> None:
    sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)


def connect_mesh(cfg: PartyConfig, *, listener: socket.socket | None = None,
                 record: bool = False) -> PartyContext:
    """Open the three-party mesh.

    Party ``i`` dials every lower-numbered party and accepts the higher ones.
    Both sides of every connection exchange a handshake (magic, version,
    party-id) and verify it.  Counters start at zero once the mesh is up.
    """
    me = cfg.party
    deadline = time.monotonic() + cfg.timeout
    own = listener
    if own is None and me < 2:
        own = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        own.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        own.bind(cfg.listen)
        own.listen(4)
    socks: dict[int, socket.socket] = {}
    try:
        for j in sorted(p for p in cfg.peers if p < me):
            socks[j] = _dial(cfg.peers[j], me, j, deadline)
        expected = {p for p in cfg.peers if p > me}
        while expected - set(socks):
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                missing = sorted(expected - set(socks))
                raise MeshTimeout(f"party {me}: timed out waiting for party {', '.join(map(str, missing))}")
            own.settimeout(remaining)
            try:
                conn, _ = own.accept()
            except socket.timeout:
                continue
            _tune(conn)
            conn.settimeout(max(deadline - time.monotonic(), 0.1))
            try:
                peer = wire.decode_handshake(_recv_exact(conn, wire.HANDSHAKE_SIZE))
            except (HandshakeError, ProtocolError, OSError):
                conn.close()
                raise
            if peer not in expected:
                conn.close()
                raise HandshakeError(f"party {me}: unexpected party-id {peer} in handshake")
            if peer in socks:
                conn.close()
                raise HandshakeError(f"party {me}: duplicate party-id {peer}")
            conn.sendall(wire.encode_handshake(me))
            socks[peer] = conn
    except BaseException:
        for s in socks.values():
            s.close()
        raise
    finally:
        if own is not None:
            own.close()
    counter = CommCounter()
    channels = {j: Channel(s, me, j, counter, cfg.timeout, record) for j, s in socks.items()}
    log.debug("party %d: mesh up", me)
    return PartyContext(cfg, channels, counter)


def _dial(addr, me: int, peer: int, deadline: float) -> socket.socket:
    last: Exception | None = None
    while time.monotonic() < deadline:
        try:
            s = socket.create_connection(addr, timeout=max(deadline - time.monotonic(), 0.1))
        except OSError as exc:
            last = exc
            time.sleep(0.02)
            continue
        _tune(s)
        try:
            s.sendall(wire.encode_handshake(me))
            got = wire.decode_handshake(_recv_exact(s, wire.HANDSHAKE_SIZE))
        except BaseException:
            s.close()
            raise
        if got != peer:
            s.close()
            raise HandshakeError(f"party {me}: dialled party {peer} but it identified as {got}")
        return s
    raise MeshTimeout(f"party {me}: timed out waiting for party {peer} ({last})")
