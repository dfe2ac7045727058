"""Small model builders used by the demos, the CLI smoke paths and the tests."""

from __future__ import annotations

import numpy as np

from .ir.graph import HLILGraph, Node, infer_shapes


def logistic_regression(W: np.ndarray, b: np.ndarray) -> HLILGraph:
    """``output(ArgMax(MatMul(x, W) + b))`` over a (1, d) query."""
    W = np.asarray(W, dtype=np.float32)
    b = np.asarray(b, dtype=np.float32)
    nodes = [
        Node("x", "Input", shape=(1, W.shape[0])),
        Node("W", "Const", shape=W.shape),
        Node("b", "Const", shape=b.shape),
        Node("xW", "MatMul", ("x", "W")),
        Node("xWb", "Add", ("xW", "b")),
        Node("out", "ArgMax", ("xWb",)),
    ]
    return infer_shapes(HLILGraph(nodes, {"W": W, "b": b}, "x", "out"))


def two_layer(W1, b1, W2, b2) -> HLILGraph:
    """Dense -> ReLU -> Dense -> ArgMax."""
    ws = {k: np.asarray(v, dtype=np.float32) for k, v in dict(W1=W1, b1=b1, W2=W2, b2=b2).items()}
    nodes = [
        Node("x", "Input", shape=(1, ws["W1"].shape[0])),
        Node("W1", "Const", shape=ws["W1"].shape),
        Node("b1", "Const", shape=ws["b1"].shape),
        Node("W2", "Const", shape=ws["W2"].shape),
        Node("b2", "Const", shape=ws["b2"].shape),
        Node("h", "MatMul", ("x", "W1")),
        Node("hb", "Add", ("h", "b1")),
        Node("a", "ReLU", ("hb",)),
        Node("y", "MatMul", ("a", "W2")),
        Node("yb", "Add", ("y", "b2")),
        Node("out", "ArgMax", ("yb",)),
    ]
    return infer_shapes(HLILGraph(nodes, ws, "x", "out"))


def small_cnn(rng: np.random.Generator, m: int = 12, channels: int = 4, classes: int = 5,
              scale: float = 0.5) -> HLILGraph:
    """Conv2D -> BatchNorm -> ReLU -> MaxPool -> AvgPool -> Reshape -> MatMul -> Add -> ArgMax."""
    f = 3
    q = m - f + 1
    p1 = (q - 2) // 2 + 1
    p2 = p1 // 2
    flat = p2 * p2 * channels
    ws = {
        "K": rng.uniform(-scale, scale, (f, f, 1, channels)),
        "gamma": rng.uniform(0.5, 1.5, channels),
        "beta": rng.uniform(-0.2, 0.2, channels),
        "mean": rng.uniform(-0.2, 0.2, channels),
        "var": rng.uniform(0.5, 1.5, channels),
        "Wd": rng.uniform(-scale, scale, (flat, classes)),
        "bd": rng.uniform(-0.1, 0.1, classes),
    }
    ws = {k: np.asarray(v, dtype=np.float32) for k, v in ws.items()}
    nodes = [Node("x", "Input", shape=(m, m, 1))]
    nodes += [Node(k, "Const", shape=v.shape) for k, v in ws.items()]
    nodes += [
        Node("c", "Conv2D", ("x", "K"), {"stride": 1, "padding": "VALID"}),
        Node("bn", "BatchNorm", ("c", "gamma", "beta", "mean", "var"), {"epsilon": 1e-3}),
        Node("r", "ReLU", ("bn",)),
        Node("mp", "MaxPool", ("r",), {"window": 2, "stride": 2}),
        Node("ap", "AvgPool", ("mp",), {"window": 2, "stride": 2}),
        Node("flat", "Reshape", ("ap",), {"shape": [1, flat]}),
        Node("d", "MatMul", ("flat", "Wd")),
        Node("db", "Add", ("d", "bd")),
        Node("out", "ArgMax", ("db",)),
    ]
    return infer_shapes(HLILGraph(nodes, ws, "x", "out"))
