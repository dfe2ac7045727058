"""Linear-algebra protocols: Beaver multiplication, convolution, truncation, selection.

All functions are called by the three parties with the same arguments in the
same order.  P0 and P1 pass their shares; P2 passes placeholders of the right
shape (their values are ignored) and gets zeros back.
"""

from __future__ import annotations

import numpy as np

from .. import ring
from ..errors import ShapeError
from ..ir.interp import conv2d_im2col, im2col, pad_same
from ..net.wire import BEAVER_C, BEAVER_E, BEAVER_F, CONTROL
from .sharing import deal


def _beaver(ctx, x, y, op, out_shape):
    x = np.asarray(x, dtype=np.uint64)
    y = np.asarray(y, dtype=np.uint64)
    if ctx.party == 2:
        a = ctx.tape("02", BEAVER_E).ring(x.shape) + ctx.tape("12", BEAVER_E).ring(x.shape)
        b = ctx.tape("02", BEAVER_F).ring(y.shape) + ctx.tape("12", BEAVER_F).ring(y.shape)
        deal(ctx, BEAVER_C, out_shape, op(a, b))
        return np.zeros(out_shape, dtype=np.uint64)

    pair = "02" if ctx.party == 0 else "12"
    a = ctx.tape(pair, BEAVER_E).ring(x.shape)
    b = ctx.tape(pair, BEAVER_F).ring(y.shape)
    c = deal(ctx, BEAVER_C, out_shape)
    e, f = x - a, y - b
    ctx.send(ctx.other, BEAVER_E, e)
    ctx.send(ctx.other, BEAVER_F, f)
    e = e + ctx.recv(ctx.other, BEAVER_E, x.shape)
    f = f + ctx.recv(ctx.other, BEAVER_F, y.shape)
    z = op(e, b) + op(a, f) + c
    if ctx.party == 1:
        z = z + op(e, f)
    return z


def beaver_matmul(ctx, x, y) -> np.ndarray:
    """Shares of X @ Y for shared (a, b) and (b, c) matrices.

    Masks A and B come from the k02/k12 tapes; P2 sends one share of C = A @ B.
    Traffic: 2(ab + bc) elements between P0 and P1 plus ac from P2.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    if x.ndim != 2 or y.ndim != 2 or x.shape[1] != y.shape[0]:
        raise ShapeError(f"beaver_matmul: cannot multiply {x.shape} by {y.shape}")
    return _beaver(ctx, x, y, np.matmul, (x.shape[0], y.shape[1]))


def beaver_mul(ctx, x, y) -> np.ndarray:
    """Element-wise product of shared tensors (numpy broadcasting allowed)."""
    x = np.asarray(x)
    y = np.asarray(y)
    try:
        out = np.broadcast_shapes(x.shape, y.shape)
    except ValueError as exc:
        raise ShapeError(f"beaver_mul: {x.shape} and {y.shape} do not broadcast") from exc
    return _beaver(ctx, x, y, np.multiply, out)


def conv2d_protocol(ctx, image, filt, stride: int = 1, padding: str = "VALID", mode: str | None = None):
    """Shares of the cross-correlation of a shared image with a shared filter.

    ``mode="naive"`` lowers both operands with im2col and runs one Beaver
    matmul, revealing q*q*f*f masked patch entries.  ``mode="reshaped"`` masks
    the image itself, so only m*m image entries are revealed; the patch matrix
    of the public masked image is formed locally, which is valid because
    im2col is linear.  Default mode follows ``ctx.reshaped_conv``.
    """
    if mode is None:
        mode = "reshaped" if ctx.reshaped_conv else "naive"
    if mode not in ("naive", "reshaped"):
        raise ValueError(f"unknown convolution mode {mode!r}")
    image = np.asarray(image, dtype=np.uint64)
    filt = np.asarray(filt, dtype=np.uint64)
    squeeze = image.ndim == 2
    if squeeze:
        image = image[:, :, None]
    if filt.ndim == 2:
        filt = filt[:, :, None, None]
    if image.ndim != 3 or filt.ndim != 4 or filt.shape[2] != image.shape[2] or filt.shape[0] != filt.shape[1]:
        raise ShapeError(f"conv2d_protocol: image {image.shape} vs filter {filt.shape}")
    f = filt.shape[0]
    if padding == "SAME":
        image = pad_same(image, f, stride)
    if f > image.shape[0] or f > image.shape[1]:
        raise ShapeError(f"conv2d_protocol: filter size {f} exceeds image {image.shape[:2]}")
    qh = (image.shape[0] - f) // stride + 1
    qw = (image.shape[1] - f) // stride + 1
    k = filt.shape[3]
    if mode == "naive":
        cols = im2col(image, f, stride)
        out = beaver_matmul(ctx, cols, filt.reshape(-1, k)).reshape(qh, qw, k)
    else:
        out = _beaver(ctx, image, filt, lambda a, b: conv2d_im2col(a, b, stride), (qh, qw, k))
    return out[:, :, 0] if squeeze else out


def truncate_share(x, s: int, party: int) -> np.ndarray:
    """The local half of truncation: P0 floors its share, P1 negates-floors-negates."""
    x = np.asarray(x, dtype=np.uint64)
    if party == 0:
        return (ring.signed(x) >> np.int64(s)).view(np.uint64)
    if party == 1:
        return ring.neg((ring.signed(ring.neg(x)) >> np.int64(s)).view(np.uint64))
    return np.zeros_like(x)


def truncate(ctx, x, s: int, exact: bool = False) -> np.ndarray:
    """Shares of floor(signed(x) / 2^s), up to an error of one unit.

    The default is local and free, but a share sitting within |x| of the
    signed boundary yields a large error (probability about |x| / 2^64).
    ``exact=True`` removes that failure mode for every |x| < 2^62 at the cost
    of one Beaver AND on the shares' top bits: the value is offset to be
    non-negative, the wrap of the two unsigned shares is msb(x0) OR msb(x1),
    and its contribution is subtracted.  The result is then floor(x / 2^s) or
    one less.
    """
    x = np.asarray(x, dtype=np.uint64)
    if not 0 <= s <= 62:
        raise ValueError(f"truncation amount {s} outside [0, 62]")
    if not exact:
        return truncate_share(x, s, ctx.party)
    if s == 0:
        return x.copy()
    offset = np.uint64(1 << 62)
    if ctx.party == 2:
        beaver_mul(ctx, x, x)
        return np.zeros_like(x)
    xp = x + offset if ctx.party == 0 else x
    top = ring.msb(xp)
    zero = np.zeros_like(top)
    lhs, rhs = (top, zero) if ctx.party == 0 else (zero, top)
    both = beaver_mul(ctx, lhs, rhs)
    wrapped = top - both
    out = (xp >> np.uint64(s)) - (wrapped << np.uint64(64 - s))
    if ctx.party == 0:
        out = out - np.uint64(1 << (62 - s))
    return out


def divide_public(ctx, x, d: int) -> np.ndarray:
    """Local division of a shared value by a public positive integer (error of one unit)."""
    x = np.asarray(x, dtype=np.uint64)
    if d & (d - 1) == 0:
        return truncate_share(x, d.bit_length() - 1, ctx.party)
    dd = np.int64(d)
    if ctx.party == 0:
        return (ring.signed(x) // dd).view(np.uint64)
    if ctx.party == 1:
        return ring.neg((ring.signed(ring.neg(x)) // dd).view(np.uint64))
    return np.zeros_like(x)


def select_share(ctx, b, x, y) -> np.ndarray:
    """Shares of ``y`` where the shared bit b is 1, else ``x``: x + b * (y - x)."""
    x = np.asarray(x, dtype=np.uint64)
    y = np.asarray(y, dtype=np.uint64)
    return x + beaver_mul(ctx, b, y - x)


def reveal(ctx, x, to=None):
    """Open shared ``x`` to the recipients (default: the configured output set).

    Returns the value on recipients and None elsewhere.
    """
    from ..net.wire import REVEAL_OUTPUT

    recipients = tuple(ctx.recipients if to is None else to)
    x = np.asarray(x, dtype=np.uint64)
    if ctx.party in (0, 1):
        for r in recipients:
            if r != ctx.party:
                ctx.send(r, REVEAL_OUTPUT, x)
    if ctx.party not in recipients:
        return None
    total = x if ctx.party in (0, 1) else np.zeros_like(x)
    for j in (0, 1):
        if j != ctx.party:
            total = total + ctx.recv(j, REVEAL_OUTPUT, x.shape)
    return total


def barrier(ctx) -> None:
    """Empty control frames around the mesh; used to separate measured phases."""
    for j in ctx.channels:
        ctx.send_bytes(j, CONTROL, b"")
    for j in ctx.channels:
        ctx.recv_bytes(j, CONTROL)
