"""Run all three parties as threads of one process over localhost TCP.

Used by the tests, the benchmarks and the demos; the CLI runs one party per
process instead.
"""

from __future__ import annotations

import socket
import threading
from dataclasses import dataclass
from typing import Any, Callable

from .counters import CommReport
from .party import DEFAULT_TIMEOUT, PartyConfig, PartyContext, connect_mesh, derive_keys, pair_of


def _listener() -> socket.socket:
    s = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    s.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    s.bind(("127.0.0.1", 0))
    s.listen(4)
    return s


def local_configs(ports, *, seed: int = 0, recipients=(0, 1), prf_opt: bool = True,
                  reshaped_conv: bool = True, timeout: float = DEFAULT_TIMEOUT) -> list[PartyConfig]:
    keys = derive_keys(seed)
    addrs = {i: ("127.0.0.1", int(p)) for i, p in enumerate(ports)}
    cfgs = []
    for i in range(3):
        cfgs.append(PartyConfig(
            party=i,
            listen=addrs[i],
            peers={j: addrs[j] for j in range(3) if j != i},
            keys={pair_of(i, j): keys[pair_of(i, j)] for j in range(3) if j != i},
            output_recipients=tuple(recipients),
            reshaped_conv=reshaped_conv,
            prf_opt=prf_opt,
            timeout=timeout,
        ))
    return cfgs


@dataclass
class LocalRun:
    results: list[Any]
    reports: list[CommReport]
    digests: list[str]
    frames: list[dict] | None = None


def run_local(fn: Callable[[PartyContext], Any], *, seed: int = 0, recipients=(0, 1),
              prf_opt: bool = True, reshaped_conv: bool = True, record: bool = False,
              timeout: float = DEFAULT_TIMEOUT) -> LocalRun:
    """Call ``fn(ctx)`` once per party, in three threads, and collect the results.

    The first exception raised by any party is re-raised here.
    """
    listeners = [_listener() for _ in range(3)]
    ports = [s.getsockname()[1] for s in listeners]
    # P2 never accepts connections
    listeners[2].close()
    cfgs = local_configs(ports, seed=seed, recipients=recipients, prf_opt=prf_opt,
                         reshaped_conv=reshaped_conv, timeout=timeout)
    results: list[Any] = [None] * 3
    reports: list[CommReport | None] = [None] * 3
    digests = [""] * 3
    frames: list[dict] = [{} for _ in range(3)]
    errors: list[BaseException] = []

    def body(i: int):
        try:
            ctx = connect_mesh(cfgs[i], listener=listeners[i] if i < 2 else None, record=record)
            try:
                results[i] = fn(ctx)
                for ch in ctx.channels.values():
                    ch.flush()
            finally:
                ctx.close()
            reports[i] = ctx.comm_report()
            digests[i] = ctx.transcript_digest()
            if record:
                frames[i] = {j: (ch.sent_frames, ch.recv_frames) for j, ch in ctx.channels.items()}
        except BaseException as exc:
            errors.append(exc)

    threads = [threading.Thread(target=body, args=(i,), name=f"party-{i}") for i in range(3)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        # the first failure is the root cause; the others are peers noticing it
        raise errors[0]
    return LocalRun(results, reports, digests, frames if record else None)
