"""Reference interpreters.

``eval_float`` gives the floating-point semantics of an HLIL graph and
``eval_fixed`` the exact mod-2^64 semantics of an LLIL program.  Both are the
oracles the secure runtime is checked against, so they avoid any shortcut the
protocols themselves take (convolution here is a direct sum over filter taps,
not im2col).
"""

from __future__ import annotations

import numpy as np

from .. import ring
from ..errors import ScaleMismatchError, ShapeError, UnsupportedOpError
from .graph import HLILGraph, LLILProgram, infer_shapes, same_padding

GUARD = float(2 ** 62)
MULTIPLICATIVE = ("MatMul", "Conv2D", "Mul")
NONLINEAR = ("ReLU", "MaxPool", "ArgMax")


# -- convolution ---------------------------------------------------------------

def _as_hwc(image, filt):
    image, filt = np.asarray(image), np.asarray(filt)
    squeeze = False
    if image.ndim == 2:
        image, squeeze = image[:, :, None], True
    if filt.ndim == 2:
        filt = filt[:, :, None, None]
    if image.ndim != 3 or filt.ndim != 4 or filt.shape[2] != image.shape[2]:
        raise ShapeError(f"conv: image {image.shape} incompatible with filter {filt.shape}")
    return image, filt, squeeze


def pad_same(image: np.ndarray, f: int, stride: int) -> np.ndarray:
    """Zero-pad an (H, W, C) tensor the way SAME convolution expects."""
    top, bottom = same_padding(image.shape[0], f, stride)
    left, right = same_padding(image.shape[1], f, stride)
    return np.pad(image, ((top, bottom), (left, right), (0, 0)))


def conv2d_ref(image, filt, stride: int = 1, padding: str = "VALID") -> np.ndarray:
    """Cross-correlation (no kernel flip).

    ``image`` is (m, m) or (H, W, C); ``filt`` is (f, f) or (f, f, C, K).
    Integer inputs are treated as ring elements and the result wraps mod 2^64;
    float inputs are accumulated in float64.
    """
    image, filt, squeeze = _as_hwc(image, filt)
    f = filt.shape[0]
    if padding == "SAME":
        image = pad_same(image, f, stride)
    H, W, _ = image.shape
    if f > H or filt.shape[1] > W:
        raise ShapeError(f"filter {filt.shape[:2]} larger than image {image.shape[:2]}")
    qh = (H - f) // stride + 1
    qw = (W - filt.shape[1]) // stride + 1
    integer = image.dtype.kind in "iu"
    acc_t = np.uint64 if integer else np.float64
    img = ring.ring(image) if integer else image.astype(np.float64)
    ker = ring.ring(filt) if integer else filt.astype(np.float64)
    out = np.zeros((qh, qw, filt.shape[3]), dtype=acc_t)
    for di in range(f):
        for dj in range(filt.shape[1]):
            patch = img[di:di + stride * (qh - 1) + 1:stride, dj:dj + stride * (qw - 1) + 1:stride, :]
            for c in range(filt.shape[2]):
                out += patch[:, :, c, None] * ker[di, dj, c][None, None, :]
    return out[:, :, 0] if squeeze else out


def im2col(image: np.ndarray, f: int, stride: int = 1) -> np.ndarray:
    """Patch matrix of shape (q_h * q_w, f * f * C), rows in row-major output order."""
    if image.ndim == 2:
        image = image[:, :, None]
    H, W, C = image.shape
    if f > H or f > W:
        raise ShapeError(f"filter size {f} exceeds image {image.shape[:2]}")
    win = np.lib.stride_tricks.sliding_window_view(image, (f, f), axis=(0, 1))[::stride, ::stride]
    qh, qw = win.shape[:2]
    # (qh, qw, C, f, f) -> (qh, qw, f, f, C)
    return np.ascontiguousarray(win.transpose(0, 1, 3, 4, 2)).reshape(qh * qw, f * f * C)


def conv2d_im2col(image, filt, stride: int = 1, padding: str = "VALID") -> np.ndarray:
    """Convolution as im2col(image) @ vec(filter); must agree with :func:`conv2d_ref`."""
    image, filt, squeeze = _as_hwc(image, filt)
    f = filt.shape[0]
    if padding == "SAME":
        image = pad_same(image, f, stride)
    cols = im2col(image, f, stride)
    qh = (image.shape[0] - f) // stride + 1
    qw = (image.shape[1] - f) // stride + 1
    kmat = filt.reshape(-1, filt.shape[3])
    if image.dtype.kind in "iu":
        out = ring.ring(cols) @ ring.ring(kmat)
    else:
        out = cols.astype(np.float64) @ kmat.astype(np.float64)
    out = out.reshape(qh, qw, filt.shape[3])
    return out[:, :, 0] if squeeze else out


def pool_windows(x: np.ndarray, window: int, stride: int) -> np.ndarray:
    """(H, W, C) -> (oh, ow, C, window*window), window elements in row-major order."""
    win = np.lib.stride_tricks.sliding_window_view(x, (window, window), axis=(0, 1))[::stride, ::stride]
    return win.reshape(win.shape[:3] + (window * window,))


# -- broadcasting helper ---------------------------------------------------------

def bias_broadcast(b: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if b.shape == tuple(shape):
        return b
    return np.broadcast_to(b.reshape(-1), shape)


def first_argmax(x: np.ndarray) -> np.ndarray:
    """Index of the first maximum along the last axis (np.argmax already breaks ties low)."""
    return np.argmax(x, axis=-1).astype(np.int64)


# -- float semantics -------------------------------------------------------------

def eval_float(graph: HLILGraph, x) -> np.ndarray:
    """Evaluate an HLIL graph on a float32 input.

    Every node result is rounded to float32; products and sums are
    accumulated in float64 first.  ArgMax returns int64 indices.
    """
    g = infer_shapes(graph)
    x = np.asarray(x, dtype=np.float32)
    if x.shape != tuple(g.input_shape):
        raise ShapeError(f"input shape {x.shape} != declared {g.input_shape}")
    vals: dict[str, np.ndarray] = {}
    for n in g.nodes:
        a = [vals[i] for i in n.inputs]
        op = n.op
        if op == "Input":
            v = x
        elif op == "Const":
            v = np.asarray(g.weights[n.id], dtype=np.float32)
        elif op == "MatMul":
            v = a[0].astype(np.float64) @ a[1].astype(np.float64)
        elif op == "Add":
            v = a[0].astype(np.float64) + bias_broadcast(a[1], a[0].shape).astype(np.float64)
        elif op == "Conv2D":
            v = conv2d_ref(a[0], a[1], int(n.attrs.get("stride", 1)), n.attrs.get("padding", "VALID"))
        elif op == "ReLU":
            v = np.maximum(a[0], np.float32(0))
        elif op in ("MaxPool", "AvgPool"):
            k = int(n.attrs["window"])
            w = pool_windows(a[0].astype(np.float64), k, int(n.attrs.get("stride", k)))
            v = w.max(axis=-1) if op == "MaxPool" else w.sum(axis=-1) / (k * k)
        elif op == "BatchNorm":
            xx, gamma, beta, mean, var = (t.astype(np.float64) for t in a)
            eps = float(n.attrs.get("epsilon", 1e-3))
            v = gamma * (xx - mean) / np.sqrt(var + eps) + beta
        elif op == "Reshape":
            v = a[0].reshape(n.shape)
        elif op == "ArgMax":
            vals[n.id] = first_argmax(a[0]).reshape(n.shape)
            continue
        else:
            raise UnsupportedOpError(f"eval_float: op {op!r} is not an HLIL op")
        vals[n.id] = np.asarray(v).astype(np.float32).reshape(n.shape)
    return vals[g.output_id]


# -- fixed-point semantics -----------------------------------------------------

def scale_map(program: LLILProgram) -> dict[str, int]:
    """Static scale (fractional bits) of every node's value.

    Raises ScaleMismatchError on Add/Mul operand mismatches or a non-linear op
    consuming a value that has not been scaled back down to ``program.scale``.
    """
    s = program.scale
    scales: dict[str, int] = {}
    for n in program.nodes:
        ins = [scales[i] for i in n.inputs]
        if n.op in ("Input", "Const"):
            sc = s
        elif n.op in ("MatMul", "Conv2D", "Mul"):
            sc = ins[0] + ins[1]
        elif n.op == "ScaleDown":
            sc = ins[0] - int(n.attrs["amount"])
        elif n.op == "Add":
            if ins[0] != ins[1]:
                raise ScaleMismatchError(f"Add {n.id!r}: operand scales {ins[0]} and {ins[1]} differ")
            sc = ins[0]
        elif n.op in NONLINEAR:
            if ins[0] != s:
                raise ScaleMismatchError(f"{n.op} {n.id!r} consumes scale {ins[0]}, expected {s}")
            sc = ins[0]
        else:
            sc = ins[0]
        scales[n.id] = sc
    return scales


class OverflowMonitor:
    """Collects guard-band violations seen while interpreting a program."""

    def __init__(self):
        self.events: list[tuple[str, float]] = []

    @property
    def overflowed(self) -> bool:
        return bool(self.events)

    def check(self, node_id: str, shadow: np.ndarray) -> None:
        peak = float(np.max(np.abs(shadow))) if shadow.size else 0.0
        if peak >= GUARD:
            self.events.append((node_id, peak))


def _arith_shift(x: np.ndarray, k: int) -> np.ndarray:
    return (ring.signed(x) >> np.int64(k)).view(np.uint64)


def eval_fixed(program: LLILProgram, x, *, monitor: OverflowMonitor | None = None) -> np.ndarray:
    """Evaluate an LLIL program on a ring input already quantized at ``program.scale``.

    All arithmetic wraps mod 2^64; comparisons and ScaleDown use the signed
    interpretation.  Pass an :class:`OverflowMonitor` to record products or sums
    whose exact magnitude reaches 2^62.
    """
    g = infer_shapes(program)
    scale_map(g)
    x = ring.ring(np.asarray(x))
    if x.shape != tuple(g.input_shape):
        raise ShapeError(f"input shape {x.shape} != declared {g.input_shape}")
    vals: dict[str, np.ndarray] = {}
    for n in g.nodes:
        a = [vals[i] for i in n.inputs]
        op = n.op
        if op == "Input":
            v = x
        elif op == "Const":
            v = ring.ring(g.weights[n.id])
        elif op == "MatMul":
            v = a[0] @ a[1]
            if monitor is not None:
                monitor.check(n.id, ring.signed(a[0]).astype(np.float64) @ ring.signed(a[1]).astype(np.float64))
        elif op == "Conv2D":
            stride, pad = int(n.attrs.get("stride", 1)), n.attrs.get("padding", "VALID")
            v = conv2d_ref(a[0], a[1], stride, pad)
            if monitor is not None:
                monitor.check(n.id, conv2d_ref(ring.signed(a[0]).astype(np.float64),
                                               ring.signed(a[1]).astype(np.float64), stride, pad))
        elif op == "Mul":
            b = bias_broadcast(a[1], a[0].shape)
            v = a[0] * b
            if monitor is not None:
                monitor.check(n.id, ring.signed(a[0]).astype(np.float64) * ring.signed(b).astype(np.float64))
        elif op == "Add":
            b = bias_broadcast(a[1], a[0].shape)
            v = a[0] + b
            if monitor is not None:
                monitor.check(n.id, ring.signed(a[0]).astype(np.float64) + ring.signed(b).astype(np.float64))
        elif op == "ScaleDown":
            v = _arith_shift(a[0], int(n.attrs["amount"]))
        elif op == "ReLU":
            v = np.where(ring.signed(a[0]) > 0, a[0], np.uint64(0))
        elif op == "MaxPool":
            k = int(n.attrs["window"])
            w = pool_windows(ring.signed(a[0]), k, int(n.attrs.get("stride", k)))
            v = w.max(axis=-1).view(np.uint64)
        elif op == "SumPool":
            k = int(n.attrs["window"])
            v = pool_windows(a[0], k, int(n.attrs.get("stride", k))).sum(axis=-1, dtype=np.uint64)
        elif op == "Div":
            v = (ring.signed(a[0]) // np.int64(int(n.attrs["divisor"]))).view(np.uint64)
        elif op == "Reshape":
            v = a[0].reshape(n.shape)
        elif op == "ArgMax":
            vals[n.id] = first_argmax(ring.signed(a[0])).reshape(n.shape)
            continue
        else:
            raise UnsupportedOpError(f"eval_fixed: op {op!r} is not an LLIL op")
        vals[n.id] = np.ascontiguousarray(v, dtype=np.uint64).reshape(n.shape)
    return vals[g.output_id]
