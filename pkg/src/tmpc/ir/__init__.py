from .container import (
    decode_tensor, encode_tensor, load_container, load_model, load_tensor, parse_model,
    save_model, save_tensor, serialize,
)
from .graph import HLIL_OPS, LLIL_OPS, HLILGraph, LLILProgram, Node, infer_shapes, validate_graph
from .interp import (
    OverflowMonitor, conv2d_im2col, conv2d_ref, eval_fixed, eval_float, im2col, scale_map,
)
from .text import to_text

__all__ = [
    "HLIL_OPS", "LLIL_OPS", "HLILGraph", "LLILProgram", "Node", "OverflowMonitor",
    "conv2d_im2col", "conv2d_ref", "decode_tensor", "encode_tensor", "eval_fixed",
    "eval_float", "im2col", "infer_shapes", "load_container", "load_model", "load_tensor",
    "parse_model", "save_model", "save_tensor", "scale_map", "serialize", "to_text",
    "validate_graph",
]
