"""Additive sharing and the helper's share-dealing primitive."""

from __future__ import annotations

import numpy as np

from .. import ring

RING, ODD, FIELD = "ring", "odd", "field"


def share(x, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Split ring tensor ``x`` into (x0, x1) with x0 uniform and x0 + x1 = x mod 2^64."""
    x = ring.ring(np.asarray(x))
    x0 = rng.integers(0, 2 ** 64, size=x.shape, dtype=np.uint64, endpoint=False)
    return x0, x - x0


def reconstruct(x0, x1) -> np.ndarray:
    return np.asarray(x0, dtype=np.uint64) + np.asarray(x1, dtype=np.uint64)


def _draw(tape, shape, domain):
    if domain == RING:
        return tape.ring(shape)
    if domain == ODD:
        return tape.odd(shape)
    return tape.field(shape)


def _sub(a, b, domain):
    if domain == RING:
        return a - b
    if domain == ODD:
        return ring.odd_sub(a, b)
    return (a - b) % ring.PRIME


def _from_wire(arr, domain):
    return arr.astype(np.int64) if domain == FIELD else arr


def deal(ctx, tag: int, shape, value=None, domain: str = RING):
    """P2 hands P0 and P1 a fresh additive sharing of ``value``.

    With the PRF optimisation P1's share is expanded from the k12 tape on both
    P1 and P2, so only P0's share is sent.  Without it, P2 draws P1's share from
    its private tape and sends both.  Returns the caller's share (None on P2).
    """
    shape = tuple(shape)
    if ctx.party == 2:
        tape = ctx.tape("12", tag) if ctx.prf_opt else ctx.tape("local", tag)
        r1 = _draw(tape, shape, domain)
        ctx.send(0, tag, _sub(value, r1, domain))
        if not ctx.prf_opt:
            ctx.send(1, tag, r1)
        return None
    if ctx.party == 1 and ctx.prf_opt:
        return _draw(ctx.tape("12", tag), shape, domain)
    return _from_wire(ctx.recv(2, tag, shape), domain)


def zero_share(ctx, tag: int, shape, domain: str = RING):
    """Shares of zero from the k01 tape, for re-randomising outputs."""
    u = _draw(ctx.tape("01", tag), tuple(shape), domain)
    if ctx.party == 0:
        return u
    if domain == RING:
        return ring.neg(u)
    if domain == ODD:
        return ring.odd_neg(u)
    return (-u) % ring.PRIME
