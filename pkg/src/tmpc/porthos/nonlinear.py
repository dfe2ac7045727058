"""Non-linear protocols: share conversion, private comparison, MSB, ReLU, pooling, argmax.

Bits of the compared value live in Z_67; the value whose MSB is wanted lives
in the odd ring Z_{2^64-1}, where the low bit of 2a is the high bit of a.
As elsewhere, P2 passes shape-correct placeholders and gets zeros back.
"""

from __future__ import annotations

import numpy as np

from .. import ring
from ..net.wire import MSB_DEAL, PC_MSG
from .arith import beaver_mul, reveal, select_share
from .sharing import FIELD, ODD, RING, deal, zero_share

P = ring.PRIME
_ONE = np.uint64(1)


def private_compare(ctx, xbits, r, beta):
    """P2 learns beta XOR (x > r) for public r and x shared bit-wise over Z_67.

    ``xbits`` has shape (n, 64) (index 0 = LSB), ``r`` and ``beta`` shape (n,).
    P0/P1 hold a common ``beta`` and return None; P2 returns the bits as uint64.
    """
    n = np.asarray(xbits).shape[0]
    if ctx.party == 2:
        d0 = ctx.recv(0, PC_MSG, (n, 64)).astype(np.int64)
        d1 = ctx.recv(1, PC_MSG, (n, 64)).astype(np.int64)
        return np.any((d0 + d1) % P == 0, axis=1).astype(np.uint64)

    j = ctx.party
    t01 = ctx.tape("01", PC_MSG)
    s = t01.nonzero_field((n, 64))
    u = t01.field((n, 64))
    keys = t01.permutation_keys((n, 64))

    x = np.asarray(xbits, dtype=np.int64) % P
    r = np.asarray(r, dtype=np.uint64)
    beta = np.asarray(beta, dtype=np.uint64).astype(np.int64)
    flip = beta[:, None] == 1
    # for beta = 1 compare against r + 1 instead, with the roles reversed
    cb = np.where(flip, ring.bit_decompose(r + _ONE), ring.bit_decompose(r))
    w = (x + j * cb - 2 * cb * x) % P
    total = w.sum(axis=1, keepdims=True)
    above = total - np.cumsum(w, axis=1)  # sum over strictly higher bits
    sign = np.where(flip, -1, 1)
    c = (sign * (j * cb - x) + j + above) % P

    # beta = 1 and r = 2^64 - 1: x > r is impossible, so plant exactly one zero
    special = (beta == 1) & (r == np.uint64(ring.MASK))
    if special.any():
        fill = (1 - j) * (u[special] + 1) - j * u[special]
        fill[:, 0] = (1 - j) * u[special][:, 0] - j * u[special][:, 0]
        c[special] = fill % P

    d = (s * c) % P
    d = np.take_along_axis(d, np.argsort(keys, axis=1, kind="stable"), axis=1)
    ctx.send(2, PC_MSG, d)
    return None


def share_convert(ctx, a):
    """Convert shares of ``a`` over Z_{2^64} into shares over Z_{2^64-1}.

    Requires a != 2^64 - 1; callers pass even values.
    """
    a = np.asarray(a, dtype=np.uint64)
    shape = a.shape
    n = a.size
    if ctx.party == 2:
        at0 = ctx.recv(0, MSB_DEAL, (n,))
        at1 = ctx.recv(1, MSB_DEAL, (n,))
        x = at0 + at1
        deal(ctx, MSB_DEAL, (n, 64), ring.bit_decompose(x), domain=FIELD)
        deal(ctx, MSB_DEAL, (n,), ring.wrap(at0, at1), domain=ODD)
        eta_p = private_compare(ctx, np.zeros((n, 64), dtype=np.int64), None, None)
        deal(ctx, MSB_DEAL, (n,), eta_p, domain=ODD)
        return np.zeros(shape, dtype=np.uint64)

    j = ctx.party
    a = a.ravel()
    t01 = ctx.tape("01", MSB_DEAL)
    eta_pp = t01.bits(n)
    r = t01.ring(n)
    r0 = t01.ring(n)
    r1 = r - r0
    alpha = ring.wrap(r0, r1)
    rj = r0 if j == 0 else r1

    ctx.send(2, MSB_DEAL, a + rj)
    beta_j = ring.wrap(a, rj)
    xbits = deal(ctx, MSB_DEAL, (n, 64), domain=FIELD)
    delta = deal(ctx, MSB_DEAL, (n,), domain=ODD)
    private_compare(ctx, xbits, r - _ONE, eta_pp)
    eta_p = deal(ctx, MSB_DEAL, (n,), domain=ODD)

    # eta = eta' XOR eta'', shared over the odd ring
    twice = np.where(eta_pp == 1, eta_p, np.uint64(0))
    eta = ring.odd_sub(eta_p, ring.odd_add(twice, twice))
    if j == 0:
        eta = ring.odd_add(eta, eta_pp)
    theta = ring.odd_add(beta_j, ring.odd_add(delta, eta))
    if j == 0:
        theta = ring.odd_sub(theta, ring.odd_add(alpha, _ONE))
    y = ring.odd_sub(ring.odd_reduce(a), theta)
    y = ring.odd_add(y, zero_share(ctx, MSB_DEAL, (n,), domain=ODD))
    return y.reshape(shape)


def compute_msb(ctx, a):
    """Shares over Z_{2^64} of the top bit of ``a``, given shares over Z_{2^64-1}."""
    a = np.asarray(a, dtype=np.uint64)
    shape = a.shape
    n = a.size
    if ctx.party == 2:
        x = ctx.tape("local", MSB_DEAL).odd(n)
        deal(ctx, MSB_DEAL, (n,), x, domain=ODD)
        deal(ctx, MSB_DEAL, (n, 64), ring.bit_decompose(x), domain=FIELD)
        deal(ctx, MSB_DEAL, (n,), x & _ONE, domain=RING)
        bp = private_compare(ctx, np.zeros((n, 64), dtype=np.int64), None, None)
        deal(ctx, MSB_DEAL, (n,), bp, domain=RING)
        beaver_mul(ctx, np.zeros(n, np.uint64), np.zeros(n, np.uint64))
        return np.zeros(shape, dtype=np.uint64)

    j = ctx.party
    a = a.ravel()
    t01 = ctx.tape("01", MSB_DEAL)
    beta = t01.bits(n)
    xs = deal(ctx, MSB_DEAL, (n,), domain=ODD)
    xb = deal(ctx, MSB_DEAL, (n, 64), domain=FIELD)
    x0 = deal(ctx, MSB_DEAL, (n,), domain=RING)

    rj = ring.odd_add(ring.odd_add(a, a), xs)
    ctx.send(ctx.other, MSB_DEAL, rj)
    r = ring.odd_add(rj, ctx.recv(ctx.other, MSB_DEAL, (n,)))
    private_compare(ctx, xb, r, beta)
    bp = deal(ctx, MSB_DEAL, (n,), domain=RING)

    two = np.uint64(2)
    gamma = bp - two * beta * bp
    delta = x0 - two * (r & _ONE) * x0
    if j == 1:
        gamma = gamma + beta
        delta = delta + (r & _ONE)
    theta = beaver_mul(ctx, gamma, delta)
    out = gamma + delta - two * theta + zero_share(ctx, MSB_DEAL, (n,))
    return out.reshape(shape)


def drelu(ctx, x):
    """Shares of 1 where signed(x) >= 0, else 0.  Exact for |x| < 2^62.

    Works on 2x, which is even and so always a valid input to share conversion.
    """
    x = np.asarray(x, dtype=np.uint64)
    m = compute_msb(ctx, share_convert(ctx, x + x))
    if ctx.party == 0:
        return _ONE - m
    if ctx.party == 1:
        return ring.neg(m)
    return m


def relu(ctx, x):
    x = np.asarray(x, dtype=np.uint64)
    return beaver_mul(ctx, drelu(ctx, x), x)


def maxpool_protocol(ctx, windows):
    """Maximum along the last axis of shared ``windows`` (e.g. from pool_windows)."""
    w = np.asarray(windows, dtype=np.uint64)
    lead = w.shape[:-1]
    w = w.reshape(-1, w.shape[-1])
    m = w[:, 0]
    for i in range(1, w.shape[1]):
        v = w[:, i]
        m = v + relu(ctx, m - v)
    return m.reshape(lead)


def argmax_protocol(ctx, x, reveal_output: bool = True):
    """Index of the first maximum along the last axis.

    A candidate replaces the running maximum only when strictly larger, so ties
    go to the lowest index.  Returns the revealed indices (int64) on output
    recipients, None on other parties, or index shares when ``reveal_output``
    is False.
    """
    x = np.asarray(x, dtype=np.uint64)
    lead = x.shape[:-1]
    flat = x.reshape(-1, x.shape[-1])
    m = flat[:, 0].copy()
    idx = np.zeros(flat.shape[0], dtype=np.uint64)
    one = _ONE if ctx.party == 0 else np.uint64(0)
    for i in range(1, flat.shape[1]):
        diff = flat[:, i] - m
        # v > m  <=>  v - m - 1 >= 0
        d = drelu(ctx, diff - one)
        cand = np.full_like(idx, i if ctx.party == 0 else 0)
        # one selection updates the running max and its index together
        m, idx = select_share(ctx, d[None, :], np.stack([m, idx]), np.stack([flat[:, i], cand]))
    idx = idx.reshape(lead) if lead else idx.reshape(())
    if not reveal_output:
        return idx
    out = reveal(ctx, idx)
    return None if out is None else ring.signed(out).astype(np.int64)
