"""Binary containers: model graphs (``TMPC0001``) and single tensors (``TMPT``).

Model container::

    b"TMPC0001" | u32 LE json_len | json header | weight blob

The JSON header lists nodes in topological order.  ``Const`` nodes carry
``offset`` (in elements) and ``shape`` into the blob.  HLIL blobs hold
little-endian f32; LLIL blobs hold little-endian i64 and the header has a
``scale`` field.

Tensor file::

    b"TMPT" | u8 dtype (0=f32, 1=i64) | u8 rank | rank x u32 LE dims | LE payload
"""

from __future__ import annotations

import json
import math
import struct
from pathlib import Path

import numpy as np

from ..errors import ModelFormatError
from .graph import HLILGraph, LLILProgram, Node, _Graph

MODEL_MAGIC = b"TMPC0001"
TENSOR_MAGIC = b"TMPT"
DTYPE_F32, DTYPE_I64 = 0, 1
_LE = {DTYPE_F32: np.dtype("<f4"), DTYPE_I64: np.dtype("<u8")}


# -- tensors -----------------------------------------------------------------

def encode_tensor(t: np.ndarray) -> bytes:
    t = np.asarray(t)
    if t.dtype.kind == "f":
        code = DTYPE_F32
    elif t.dtype.kind in "iu":
        code = DTYPE_I64
    else:
        raise TypeError(f"unsupported tensor dtype {t.dtype}")
    if code == DTYPE_F32:
        payload = t.astype(_LE[code])
    else:
        # int64 and uint64 share bit patterns
        payload = (t.view(np.uint64) if t.dtype.itemsize == 8 else t.astype(np.int64).view(np.uint64)).astype("<u8")
    head = TENSOR_MAGIC + struct.pack("<BB", code, t.ndim) + struct.pack(f"<{t.ndim}I", *t.shape)
    return head + payload.tobytes()


def decode_tensor(data: bytes) -> np.ndarray:
    """float32 for dtype 0, uint64 ring elements for dtype 1."""
    if len(data) < 6 or data[:4] != TENSOR_MAGIC:
        raise ModelFormatError("not a tensor file (bad magic)")
    code, rank = struct.unpack_from("<BB", data, 4)
    if code not in _LE:
        raise ModelFormatError(f"unknown tensor dtype code {code}")
    off = 6 + 4 * rank
    if len(data) < off:
        raise ModelFormatError("truncated tensor header")
    dims = struct.unpack_from(f"<{rank}I", data, 6)
    n = math.prod(dims)
    body = data[off:]
    if len(body) != n * _LE[code].itemsize:
        raise ModelFormatError(f"tensor payload is {len(body)} bytes, shape {dims} needs {n * _LE[code].itemsize}")
    arr = np.frombuffer(body, dtype=_LE[code]).reshape(dims)
    return arr.astype(np.float32) if code == DTYPE_F32 else arr.astype(np.uint64)


def save_tensor(path, t: np.ndarray) -> None:
    Path(path).write_bytes(encode_tensor(t))


def load_tensor(path) -> np.ndarray:
    return decode_tensor(Path(path).read_bytes())


# -- model container ---------------------------------------------------------

def _node_json(n: Node) -> dict:
    d = {"id": n.id, "op": n.op, "inputs": list(n.inputs)}
    if n.attrs:
        d["attrs"] = n.attrs
    if n.shape is not None:
        d["shape"] = list(n.shape)
    return d


def serialize(g: _Graph, *, include_weights: bool = True) -> bytes:
    llil = isinstance(g, LLILProgram)
    dtype = np.dtype("<u8") if llil else np.dtype("<f4")
    header = {
        "format": "llil" if llil else "hlil",
        "input": g.input_id,
        "output": g.output_id,
        "nodes": [],
    }
    if llil:
        header["scale"] = g.scale
    blobs, offset = [], 0
    for n in g.nodes:
        d = _node_json(n)
        if n.op == "Const":
            w = g.weights.get(n.id)
            if w is not None:
                d["shape"] = list(w.shape)
            if w is not None and include_weights:
                d["offset"] = offset
                blobs.append(np.ascontiguousarray(w).astype(dtype).tobytes())
                offset += w.size
        header["nodes"].append(d)
    js = json.dumps(header, separators=(",", ":")).encode()
    return MODEL_MAGIC + struct.pack("<I", len(js)) + js + b"".join(blobs)


def load_container(data: bytes) -> _Graph:
    """Parse either an HLIL or an LLIL container and validate it."""
    if len(data) < 12 or data[:8] != MODEL_MAGIC:
        raise ModelFormatError("not a model container (bad magic)")
    (jlen,) = struct.unpack_from("<I", data, 8)
    if 12 + jlen > len(data):
        raise ModelFormatError("truncated JSON header")
    try:
        header = json.loads(data[12:12 + jlen])
        fmt = header["format"]
        raw_nodes = header["nodes"]
        input_id, output_id = header["input"], header["output"]
    except (ValueError, KeyError, TypeError) as exc:
        raise ModelFormatError(f"malformed JSON header: {exc}") from exc
    if fmt not in ("hlil", "llil"):
        raise ModelFormatError(f"unknown container format {fmt!r}")
    dtype = np.dtype("<u8") if fmt == "llil" else np.dtype("<f4")
    blob = data[12 + jlen:]
    if len(blob) % dtype.itemsize:
        raise ModelFormatError("weight blob length is not a whole number of elements")
    flat = np.frombuffer(blob, dtype=dtype)

    nodes, weights = [], {}
    for d in raw_nodes:
        try:
            shape = tuple(int(x) for x in d["shape"]) if "shape" in d else None
            node = Node(id=str(d["id"]), op=str(d["op"]), inputs=tuple(d.get("inputs", ())),
                        attrs=dict(d.get("attrs", {})), shape=shape)
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"malformed node entry {d!r}: {exc}") from exc
        if node.op == "Const" and "offset" in d:
            if shape is None:
                raise ModelFormatError(f"Const {node.id!r} has an offset but no shape")
            start, size = int(d["offset"]), math.prod(shape)
            if start < 0 or start + size > flat.size:
                raise ModelFormatError(
                    f"Const {node.id!r}: shape {shape} at offset {start} runs past the "
                    f"{flat.size}-element weight blob")
            w = flat[start:start + size].reshape(shape)
            weights[node.id] = w.astype(np.uint64) if fmt == "llil" else w.astype(np.float32)
        nodes.append(node)

    if fmt == "llil":
        g = LLILProgram(nodes, weights, input_id, output_id, scale=int(header.get("scale", 0)))
    else:
        g = HLILGraph(nodes, weights, input_id, output_id)
    g.validate()
    return g


def parse_model(data: bytes) -> HLILGraph:
    """Parse a floating-point model container."""
    g = load_container(data)
    if not isinstance(g, HLILGraph):
        raise ModelFormatError("expected an HLIL (floating-point) container")
    return g


def save_model(path, g: _Graph, **kw) -> None:
    Path(path).write_bytes(serialize(g, **kw))


def load_model(path) -> _Graph:
    return load_container(Path(path).read_bytes())
