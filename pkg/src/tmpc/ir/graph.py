"""Graph types for the floating-point (HLIL) and fixed-point (LLIL) languages."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Iterator

import numpy as np

from ..errors import ModelFormatError, ShapeError

HLIL_OPS = frozenset({
    "Input", "Const", "MatMul", "Add", "Conv2D", "ReLU", "MaxPool", "AvgPool",
    "BatchNorm", "Reshape", "ArgMax",
})
# BatchNorm and AvgPool are lowered away; the rest pass through unchanged.
LLIL_OPS = (HLIL_OPS - {"BatchNorm", "AvgPool"}) | {"ScaleDown", "Mul", "SumPool", "Div"}

ARITY = {
    "Input": 0, "Const": 0, "MatMul": 2, "Add": 2, "Conv2D": 2, "ReLU": 1,
    "MaxPool": 1, "AvgPool": 1, "BatchNorm": 5, "Reshape": 1, "ArgMax": 1,
    "ScaleDown": 1, "Mul": 2, "SumPool": 1, "Div": 1,
}


@dataclass(frozen=True)
class Node:
    id: str
    op: str
    inputs: tuple[str, ...] = ()
    attrs: dict[str, Any] = field(default_factory=dict)
    shape: tuple[int, ...] | None = None

    def with_shape(self, shape) -> "Node":
        return replace(self, shape=tuple(int(d) for d in shape))


@dataclass
class _Graph:
    nodes: list[Node]
    weights: dict[str, np.ndarray]
    input_id: str
    output_id: str

    ops = HLIL_OPS

    def __post_init__(self):
        self._index = {n.id: n for n in self.nodes}

    def __iter__(self) -> Iterator[Node]:
        return iter(self.nodes)

    def __len__(self):
        return len(self.nodes)

    def node(self, node_id: str) -> Node:
        return self._index[node_id]

    @property
    def input_shape(self) -> tuple[int, ...]:
        return self.node(self.input_id).shape

    def consumers(self, node_id: str) -> list[Node]:
        return [n for n in self.nodes if node_id in n.inputs]

    def validate(self) -> None:
        validate_graph(self)


@dataclass
class HLILGraph(_Graph):
    """Floating-point op graph; weights are float32 arrays keyed by Const id."""


@dataclass
class LLILProgram(_Graph):
    """Fixed-point lowering; weights are uint64 ring tensors at ``scale`` bits.

    Parties in a secure run hold a structure-only copy whose ``weights`` is empty.
    """

    scale: int = 0
    ops = LLIL_OPS


def validate_graph(g: _Graph) -> None:
    if not g.nodes:
        raise ModelFormatError("graph has no nodes (no output)")
    seen: set[str] = set()
    inputs = [n for n in g.nodes if n.op == "Input"]
    if len(inputs) != 1:
        raise ModelFormatError(f"expected exactly one Input node, found {len(inputs)}")
    for n in g.nodes:
        if n.op not in g.ops:
            raise ModelFormatError(f"unknown op-kind {n.op!r} at node {n.id!r}")
        if n.id in seen:
            raise ModelFormatError(f"duplicate node id {n.id!r}")
        for src in n.inputs:
            if src not in seen:
                raise ModelFormatError(f"node {n.id!r} references undefined input {src!r}")
        if len(n.inputs) != ARITY[n.op]:
            raise ModelFormatError(f"{n.op} node {n.id!r} takes {ARITY[n.op]} inputs, got {len(n.inputs)}")
        _check_attrs(n)
        seen.add(n.id)
    if g.input_id != inputs[0].id:
        raise ModelFormatError(f"input id {g.input_id!r} is not the Input node")
    if g.output_id not in seen:
        raise ModelFormatError(f"output id {g.output_id!r} not defined")
    if inputs[0].shape is None:
        raise ModelFormatError("Input node needs a shape")
    for n in g.nodes:
        if n.op == "Const" and g.weights and n.id not in g.weights:
            raise ModelFormatError(f"Const {n.id!r} has no weight tensor")


def _check_attrs(n: Node) -> None:
    a = n.attrs
    if n.op == "Conv2D":
        if int(a.get("stride", 1)) < 1:
            raise ModelFormatError(f"Conv2D {n.id!r}: stride must be >= 1")
        if a.get("padding", "VALID") not in ("VALID", "SAME"):
            raise ModelFormatError(f"Conv2D {n.id!r}: padding must be VALID or SAME")
    elif n.op in ("MaxPool", "AvgPool", "SumPool"):
        if int(a.get("window", 0)) < 1 or int(a.get("stride", a.get("window", 0))) < 1:
            raise ModelFormatError(f"{n.op} {n.id!r}: window and stride must be >= 1")
    elif n.op == "ScaleDown":
        if not 0 <= int(a.get("amount", -1)) <= 62:
            raise ModelFormatError(f"ScaleDown {n.id!r}: amount out of range")
    elif n.op == "Div":
        if int(a.get("divisor", 0)) < 1:
            raise ModelFormatError(f"Div {n.id!r}: divisor must be positive")
    elif n.op == "Reshape":
        if "shape" not in a:
            raise ModelFormatError(f"Reshape {n.id!r} needs a shape attr")


# -- shape inference ---------------------------------------------------------

def conv_output_size(m: int, f: int, stride: int, padding: str) -> int:
    if padding == "SAME":
        return -(-m // stride)
    if f > m:
        raise ShapeError(f"filter size {f} exceeds input size {m}")
    return (m - f) // stride + 1


def same_padding(m: int, f: int, stride: int) -> tuple[int, int]:
    q = -(-m // stride)
    total = max((q - 1) * stride + f - m, 0)
    return total // 2, total - total // 2


def pool_output_size(m: int, window: int, stride: int) -> int:
    if window > m:
        raise ShapeError(f"pool window {window} exceeds input size {m}")
    return (m - window) // stride + 1


def _bias_compatible(a: tuple, b: tuple) -> bool:
    if a == b:
        return True
    return len(a) >= 1 and (b == (a[-1],) or b == (1, a[-1]))


def _shape_rule(n: Node, ins: list[tuple[int, ...]]) -> tuple[int, ...]:
    op, a = n.op, n.attrs
    if op == "MatMul":
        x, w = ins
        if len(x) != 2 or len(w) != 2 or x[1] != w[0]:
            raise ShapeError(f"MatMul {n.id!r}: cannot multiply {x} by {w}")
        return (x[0], w[1])
    if op in ("Add", "Mul"):
        x, b = ins
        if not _bias_compatible(x, b):
            raise ShapeError(f"{op} {n.id!r}: shapes {x} and {b} differ (only bias row-vector broadcast allowed)")
        return x
    if op == "Conv2D":
        x, w = ins
        if len(x) != 3 or len(w) != 4 or w[2] != x[2] or w[0] != w[1]:
            raise ShapeError(f"Conv2D {n.id!r}: image {x} (H,W,C) vs filter {w} (f,f,C,K)")
        stride, pad = int(a.get("stride", 1)), a.get("padding", "VALID")
        return (conv_output_size(x[0], w[0], stride, pad), conv_output_size(x[1], w[1], stride, pad), w[3])
    if op in ("MaxPool", "AvgPool", "SumPool"):
        (x,) = ins
        if len(x) != 3:
            raise ShapeError(f"{op} {n.id!r}: expected (H,W,C), got {x}")
        k = int(a["window"])
        st = int(a.get("stride", k))
        return (pool_output_size(x[0], k, st), pool_output_size(x[1], k, st), x[2])
    if op == "BatchNorm":
        x, *params = ins
        for p in params:
            if p != (x[-1],):
                raise ShapeError(f"BatchNorm {n.id!r}: parameter shape {p} != ({x[-1]},)")
        return x
    if op == "Reshape":
        (x,) = ins
        target = [int(d) for d in a["shape"]]
        total = math.prod(x)
        if target.count(-1) > 1:
            raise ShapeError(f"Reshape {n.id!r}: at most one -1")
        if -1 in target:
            known = math.prod(d for d in target if d != -1)
            if known == 0 or total % known:
                raise ShapeError(f"Reshape {n.id!r}: cannot reshape {x} to {target}")
            target[target.index(-1)] = total // known
        if math.prod(target) != total:
            raise ShapeError(f"Reshape {n.id!r}: cannot reshape {x} to {target}")
        return tuple(target)
    if op == "ArgMax":
        (x,) = ins
        return x[:-1] if len(x) > 1 else (1,)
    if op in ("ReLU", "ScaleDown", "Div"):
        return ins[0]
    raise ShapeError(f"no shape rule for {op}")


def infer_shapes(g: _Graph) -> _Graph:
    """Return a copy of ``g`` with every node's output shape filled in."""
    g.validate()
    shapes: dict[str, tuple[int, ...]] = {}
    out: list[Node] = []
    for n in g.nodes:
        if n.op == "Input":
            shape = n.shape
        elif n.op == "Const":
            if n.id in g.weights:
                shape = tuple(g.weights[n.id].shape)
                if n.shape is not None and tuple(n.shape) != shape:
                    raise ShapeError(f"Const {n.id!r}: declared {n.shape} but weight is {shape}")
            elif n.shape is not None:
                shape = n.shape
            else:
                raise ShapeError(f"Const {n.id!r} has no shape")
        else:
            shape = _shape_rule(n, [shapes[i] for i in n.inputs])
        if any(d < 1 for d in shape):
            raise ShapeError(f"node {n.id!r} has non-positive dimension {shape}")
        shapes[n.id] = tuple(shape)
        out.append(n.with_shape(shape))
    return replace(g, nodes=out)
