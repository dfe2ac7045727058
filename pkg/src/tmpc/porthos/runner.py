"""Run an LLIL program under three-party secret sharing."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError, UnsupportedOpError
from ..ir.graph import LLILProgram, infer_shapes
from ..ir.interp import bias_broadcast, pool_windows, scale_map
from .arith import beaver_matmul, beaver_mul, conv2d_protocol, divide_public, reveal, truncate
from .nonlinear import argmax_protocol, maxpool_protocol, relu


def share_inputs(program: LLILProgram) -> list[str]:
    """Node ids whose values are secret-shared before the run (the input and all constants)."""
    return [n.id for n in program.nodes if n.op in ("Input", "Const")]


def run_llil_mpc(ctx, program: LLILProgram, shares: dict | None, *, exact_truncation: bool = False,
                 reveal_output: bool = True):
    """Evaluate ``program`` on shared inputs.

    ``shares`` maps the input id and every Const id to this party's share; P2
    passes None and works on placeholders.  When the output is an ArgMax, the
    revealed indices are returned to recipients; otherwise the revealed ring
    tensor is.  Non-recipients get None.  With ``reveal_output=False`` every
    party gets its output share instead.
    """
    g = infer_shapes(program)
    scale_map(g)
    helper = ctx.party == 2
    vals: dict[str, np.ndarray] = {}
    for n in g.nodes:
        op = n.op
        a = [vals[i] for i in n.inputs]
        if op in ("Input", "Const"):
            if helper:
                v = np.zeros(n.shape, dtype=np.uint64)
            else:
                if shares is None or n.id not in shares:
                    raise ShapeError(f"missing share for {op} node {n.id!r}")
                v = np.asarray(shares[n.id], dtype=np.uint64)
                if v.shape != tuple(n.shape):
                    raise ShapeError(f"share for {n.id!r} has shape {v.shape}, expected {n.shape}")
        elif op == "MatMul":
            v = beaver_matmul(ctx, a[0], a[1])
        elif op == "Conv2D":
            v = conv2d_protocol(ctx, a[0], a[1], int(n.attrs.get("stride", 1)), n.attrs.get("padding", "VALID"))
        elif op == "Mul":
            v = beaver_mul(ctx, a[0], bias_broadcast(a[1], a[0].shape))
        elif op == "Add":
            v = a[0] + bias_broadcast(a[1], a[0].shape)
        elif op == "ScaleDown":
            v = truncate(ctx, a[0], int(n.attrs["amount"]), exact=exact_truncation)
        elif op == "ReLU":
            v = relu(ctx, a[0])
        elif op == "MaxPool":
            k = int(n.attrs["window"])
            v = maxpool_protocol(ctx, pool_windows(a[0], k, int(n.attrs.get("stride", k))))
        elif op == "SumPool":
            k = int(n.attrs["window"])
            v = pool_windows(a[0], k, int(n.attrs.get("stride", k))).sum(axis=-1, dtype=np.uint64)
        elif op == "Div":
            v = divide_public(ctx, a[0], int(n.attrs["divisor"]))
        elif op == "Reshape":
            v = a[0].reshape(n.shape)
        elif op == "ArgMax":
            idx = argmax_protocol(ctx, a[0], reveal_output=reveal_output)
            if n.id == g.output_id:
                return None if idx is None else np.asarray(idx).reshape(n.shape)
            raise UnsupportedOpError("ArgMax is only supported as the program output")
        else:
            raise UnsupportedOpError(f"no secure protocol for op {op!r}")
        vals[n.id] = np.ascontiguousarray(v, dtype=np.uint64).reshape(n.shape)
    out = vals[g.output_id]
    return reveal(ctx, out) if reveal_output else out
