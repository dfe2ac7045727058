import json
import struct

import numpy as np
import pytest

from tmpc import models, ring
from tmpc.athos import compile_to_llil, quantize
from tmpc.errors import ModelFormatError, ScaleMismatchError, ShapeError
from tmpc.ir import (
    HLILGraph, LLILProgram, Node, conv2d_im2col, conv2d_ref, decode_tensor, encode_tensor, eval_fixed,
    eval_float, im2col, infer_shapes, load_container, parse_model, serialize, to_text,
)
from tmpc.ir.container import MODEL_MAGIC


def lr_graph(d=784, k=10, seed=0):
    rng = np.random.default_rng(seed)
    return models.logistic_regression(rng.uniform(-1, 1, (d, k)), rng.uniform(-1, 1, k))


def _container(nodes, blob=b"", fmt="hlil"):
    js = json.dumps({"format": fmt, "input": "x", "output": nodes[-1]["id"] if nodes else "x",
                     "nodes": nodes}).encode()
    return MODEL_MAGIC + struct.pack("<I", len(js)) + js + blob


# -- parse_model -----------------------------------------------------------------

def test_parse_logistic_regression_container():
    g = parse_model(serialize(lr_graph()))
    ops = [n.op for n in g.nodes if n.op != "Const"]
    assert ops == ["Input", "MatMul", "Add", "ArgMax"]
    assert g.node("out").inputs == ("xWb",)
    assert g.weights["W"].shape == (784, 10)
    assert g.weights["W"].dtype == np.float32


def test_parse_round_trip_preserves_weights():
    g = lr_graph(20, 4)
    h = parse_model(serialize(g))
    for k in g.weights:
        np.testing.assert_array_equal(g.weights[k], h.weights[k])


def test_dangling_input_rejected():
    nodes = [{"id": "x", "op": "Input", "shape": [1, 2]},
             {"id": "y", "op": "ReLU", "inputs": ["z"]}]
    with pytest.raises(ModelFormatError, match="z"):
        parse_model(_container(nodes))


def test_empty_node_list_rejected():
    with pytest.raises(ModelFormatError, match="no output"):
        parse_model(_container([]))


def test_unknown_op_rejected():
    nodes = [{"id": "x", "op": "Input", "shape": [1, 2]},
             {"id": "y", "op": "Softmax", "inputs": ["x"]}]
    with pytest.raises(ModelFormatError, match="Softmax"):
        parse_model(_container(nodes))


def test_shape_inconsistent_with_blob():
    nodes = [{"id": "x", "op": "Input", "shape": [1, 2]},
             {"id": "W", "op": "Const", "shape": [2, 3], "offset": 0},
             {"id": "y", "op": "MatMul", "inputs": ["x", "W"]}]
    with pytest.raises(ModelFormatError, match="runs past"):
        parse_model(_container(nodes, np.zeros(4, "<f4").tobytes()))


def test_bad_magic_and_truncated_header():
    with pytest.raises(ModelFormatError):
        parse_model(b"NOTAMODEL...")
    with pytest.raises(ModelFormatError):
        parse_model(MODEL_MAGIC + struct.pack("<I", 1000) + b"{}")


def test_parse_model_refuses_llil():
    with pytest.raises(ModelFormatError):
        parse_model(serialize(compile_to_llil(lr_graph(4, 2), 8)))


def test_structure_only_container_keeps_const_shapes():
    p = compile_to_llil(lr_graph(6, 3), 10)
    q = load_container(serialize(p, include_weights=False))
    assert q.weights == {}
    assert infer_shapes(q).node("xW").shape == (1, 3)


def test_tensor_file_round_trip():
    a = np.arange(-6, 6, dtype=np.int64).reshape(3, 4)
    b = decode_tensor(encode_tensor(a))
    np.testing.assert_array_equal(ring.signed(b), a)
    f = np.linspace(-1, 1, 5, dtype=np.float32)
    np.testing.assert_array_equal(decode_tensor(encode_tensor(f)), f)
    with pytest.raises(ModelFormatError):
        decode_tensor(encode_tensor(f)[:-2])


# -- infer_shapes ------------------------------------------------------------------

def test_matmul_shape():
    assert lr_graph().node("xW").shape == (1, 10)


def test_conv_valid_shape():
    nodes = [Node("x", "Input", shape=(28, 28, 1)), Node("K", "Const", shape=(5, 5, 1, 1)),
             Node("c", "Conv2D", ("x", "K"), {"stride": 1, "padding": "VALID"})]
    g = infer_shapes(HLILGraph(nodes, {"K": np.zeros((5, 5, 1, 1), np.float32)}, "x", "c"))
    assert g.node("c").shape == (24, 24, 1)


def test_conv_same_shape():
    nodes = [Node("x", "Input", shape=(28, 28, 1)), Node("K", "Const", shape=(5, 5, 1, 2)),
             Node("c", "Conv2D", ("x", "K"), {"stride": 3, "padding": "SAME"})]
    g = infer_shapes(HLILGraph(nodes, {"K": np.zeros((5, 5, 1, 2), np.float32)}, "x", "c"))
    assert g.node("c").shape == (10, 10, 2)


def test_matmul_dimension_mismatch():
    nodes = [Node("x", "Input", shape=(1, 784)), Node("W", "Const", shape=(10, 10)),
             Node("y", "MatMul", ("x", "W"))]
    with pytest.raises(ShapeError):
        infer_shapes(HLILGraph(nodes, {"W": np.zeros((10, 10), np.float32)}, "x", "y"))


def test_add_only_bias_broadcast():
    nodes = [Node("x", "Input", shape=(2, 3)), Node("b", "Const", shape=(2, 1)),
             Node("y", "Add", ("x", "b"))]
    with pytest.raises(ShapeError):
        infer_shapes(HLILGraph(nodes, {"b": np.zeros((2, 1), np.float32)}, "x", "y"))


# -- eval_float ------------------------------------------------------------------

def _conv_graph(m, f):
    nodes = [Node("x", "Input", shape=(m, m, 1)), Node("K", "Const", shape=(f, f, 1, 1)),
             Node("c", "Conv2D", ("x", "K"), {"stride": 1, "padding": "VALID"})]
    return HLILGraph(nodes, {"K": np.ones((f, f, 1, 1), np.float32)}, "x", "c")


def test_eval_float_conv_all_ones():
    out = eval_float(_conv_graph(3, 2), np.ones((3, 3, 1), np.float32))
    np.testing.assert_array_equal(out[:, :, 0], np.full((2, 2), 4.0))


def _unary(op, shape, **attrs):
    return HLILGraph([Node("x", "Input", shape=shape), Node("y", op, ("x",), attrs)], {}, "x", "y")


def test_eval_float_relu():
    out = eval_float(_unary("ReLU", (3,)), np.array([-1.5, 0.0, 2.25], np.float32))
    np.testing.assert_array_equal(out, [0.0, 0.0, 2.25])


def test_eval_float_argmax_first_max():
    assert int(eval_float(_unary("ArgMax", (4,)), np.array([2.0, 7.0, 7.0, 1.0], np.float32))[0]) == 1


def test_eval_float_batchnorm():
    nodes = [Node("x", "Input", shape=(1, 1, 2))] + \
        [Node(k, "Const", shape=(2,)) for k in ("g", "b", "m", "v")] + \
        [Node("y", "BatchNorm", ("x", "g", "b", "m", "v"), {"epsilon": 0.0})]
    w = {"g": np.array([2, 1], np.float32), "b": np.array([1, 0], np.float32),
         "m": np.array([1, 1], np.float32), "v": np.array([4, 1], np.float32)}
    out = eval_float(HLILGraph(nodes, w, "x", "y"), np.array([[[3, 3]]], np.float32))
    np.testing.assert_allclose(out[0, 0], [3.0, 2.0])


# -- eval_fixed ------------------------------------------------------------------

def test_fixed_point_product():
    a = quantize(np.array([[0.5]]), 15)
    nodes = [Node("x", "Input", shape=(1, 1)), Node("w", "Const", shape=(1, 1)),
             Node("p", "MatMul", ("x", "w")), Node("sd", "ScaleDown", ("p",), {"amount": 15})]
    p = LLILProgram(nodes, {"w": a}, "x", "sd", scale=15)
    out = eval_fixed(p, a)
    assert int(ring.signed(out)[0, 0]) == 8192 == int(ring.signed(quantize(np.array(0.25), 15)))


def test_scaledown_is_signed_shift():
    nodes = [Node("x", "Input", shape=(1,)), Node("sd", "ScaleDown", ("x",), {"amount": 15})]
    p = LLILProgram(nodes, {}, "x", "sd", scale=15)
    assert int(ring.signed(eval_fixed(p, ring.ring([-32768])))[0]) == -1


def test_lr_program_agrees_with_float():
    rng = np.random.default_rng(7)
    W = rng.uniform(-1, 1, (784, 10)).astype(np.float32)
    x = rng.uniform(0, 1, (1, 784)).astype(np.float32)
    W[:, 3] += 0.05 * x[0]  # make class 3 the clear winner
    g = models.logistic_regression(W, np.zeros(10, np.float32))
    assert int(eval_float(g, x)[0]) == 3
    assert int(eval_fixed(compile_to_llil(g, 15), quantize(x, 15))[0]) == 3


def test_add_scale_mismatch_rejected():
    nodes = [Node("x", "Input", shape=(1, 2)), Node("w", "Const", shape=(2, 2)),
             Node("p", "MatMul", ("x", "w")), Node("y", "Add", ("p", "x"))]
    p = LLILProgram(nodes, {"w": ring.ring(np.eye(2, dtype=np.int64))}, "x", "y", scale=4)
    with pytest.raises(ScaleMismatchError):
        eval_fixed(p, ring.ring(np.ones((1, 2), np.int64)))


# -- conv2d_ref and im2col ---------------------------------------------------------

def test_conv_ref_all_ones():
    out = conv2d_ref(ring.ring(np.ones((3, 3), np.int64)), ring.ring(np.ones((2, 2), np.int64)))
    np.testing.assert_array_equal(ring.signed(out), np.full((2, 2), 4))


def test_conv_ref_identity_filter_crops():
    img = ring.ring(np.arange(25, dtype=np.int64).reshape(5, 5))
    filt = ring.ring(np.array([[1, 0], [0, 0]]))
    np.testing.assert_array_equal(conv2d_ref(img, filt), img[:4, :4])


def test_conv_ref_equals_im2col_path():
    rng = np.random.default_rng(3)
    img = ring.ring(rng.integers(-1000, 1000, (5, 5)))
    filt = ring.ring(rng.integers(-1000, 1000, (3, 3)))
    via_cols = (im2col(img[:, :, None], 3) @ filt.reshape(-1, 1)).reshape(3, 3)
    np.testing.assert_array_equal(conv2d_ref(img, filt), via_cols)
    np.testing.assert_array_equal(conv2d_im2col(img, filt), via_cols)


def test_conv_ref_filter_larger_than_image():
    with pytest.raises(ShapeError):
        conv2d_ref(ring.ring(np.ones((2, 2), np.int64)), ring.ring(np.ones((3, 3), np.int64)))


# -- text form -------------------------------------------------------------------

def test_text_form_of_compiled_lr():
    assert to_text(compile_to_llil(lr_graph(8, 3), 15)) == (
        "xW = MatMul(x, W);\n"
        "ScaleDown(xW, 15);\n"
        "xWb = MatAdd(xW, b);\n"
        "output(ArgMax(xWb));"
    )
