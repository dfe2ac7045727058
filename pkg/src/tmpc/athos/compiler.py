"""Float-to-fixed lowering of HLIL graphs."""

from __future__ import annotations

import numpy as np

from ..errors import ModelFormatError, UnsupportedOpError
from ..ir.graph import HLILGraph, LLILProgram, Node, infer_shapes
from ..ir.interp import scale_map
from .quantize import quantize

_PASS_THROUGH = ("Add", "ReLU", "MaxPool", "Reshape", "ArgMax")


def compile_to_llil(graph: HLILGraph, s: int) -> LLILProgram:
    """Lower ``graph`` to fixed point at a single global scale ``s``.

    Every MatMul/Conv2D (and the multiply of a folded BatchNorm) is followed
    by ``ScaleDown(., s)``; AvgPool becomes a window sum and a public division.
    Node ids of the source graph are kept; inserted nodes get dotted suffixes.
    """
    g = infer_shapes(graph)
    nodes: list[Node] = []
    weights: dict[str, np.ndarray] = {}
    alias: dict[str, str] = {}

    def src(i: str) -> str:
        return alias.get(i, i)

    def emit(node: Node) -> None:
        nodes.append(node)

    for n in g.nodes:
        ins = tuple(src(i) for i in n.inputs)
        if n.op == "Input":
            emit(n)
        elif n.op == "Const":
            weights[n.id] = quantize(g.weights[n.id], s)
            emit(n)
        elif n.op in ("MatMul", "Conv2D"):
            emit(Node(n.id, n.op, ins, dict(n.attrs), n.shape))
            sd = f"{n.id}.sd"
            emit(Node(sd, "ScaleDown", (n.id,), {"amount": s}, n.shape))
            alias[n.id] = sd
        elif n.op in _PASS_THROUGH:
            emit(Node(n.id, n.op, ins, dict(n.attrs), n.shape))
        elif n.op == "BatchNorm":
            params = []
            for p in n.inputs[1:]:
                if g.node(p).op != "Const":
                    raise ModelFormatError(f"BatchNorm {n.id!r}: parameter {p!r} must be a Const")
                params.append(g.weights[p].astype(np.float64))
            gamma, beta, mean, var = params
            eps = float(n.attrs.get("epsilon", 1e-3))
            mul = gamma / np.sqrt(var + eps)
            shift = beta - mean * mul
            channels = (n.shape[-1],)
            for suffix, val in (("mul", mul), ("shift", shift)):
                cid = f"{n.id}.{suffix}"
                weights[cid] = quantize(val.astype(np.float32), s)
                emit(Node(cid, "Const", (), {}, channels))
            emit(Node(f"{n.id}.scaled", "Mul", (ins[0], f"{n.id}.mul"), {}, n.shape))
            emit(Node(f"{n.id}.sd", "ScaleDown", (f"{n.id}.scaled",), {"amount": s}, n.shape))
            emit(Node(n.id, "Add", (f"{n.id}.sd", f"{n.id}.shift"), {}, n.shape))
        elif n.op == "AvgPool":
            k = int(n.attrs["window"])
            attrs = {"window": k, "stride": int(n.attrs.get("stride", k))}
            emit(Node(f"{n.id}.sum", "SumPool", ins, attrs, n.shape))
            emit(Node(n.id, "Div", (f"{n.id}.sum",), {"divisor": k * k}, n.shape))
        else:
            raise UnsupportedOpError(f"cannot lower op {n.op!r}")

    # BatchNorm parameters are consumed at compile time; drop orphaned constants.
    used = {i for n in nodes for i in n.inputs}
    nodes = [n for n in nodes if n.op != "Const" or n.id in used]
    weights = {k: v for k, v in weights.items() if k in used}

    program = LLILProgram(nodes, weights, g.input_id, src(g.output_id), scale=s)
    program.validate()
    scale_map(program)
    return program
