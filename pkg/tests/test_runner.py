import numpy as np
import pytest

from mpc_util import assert_counters_symmetric, program_shares, run_program, signed
from tmpc import models, ring
from tmpc.athos import compile_to_llil, quantize
from tmpc.errors import UnsupportedOpError
from tmpc.ir import LLILProgram, Node, eval_fixed
from tmpc.net.local import run_local
from tmpc.net.wire import REVEAL_OUTPUT, REVEAL_PHASES
from tmpc.porthos.costs import reshaped_conv_elements
from tmpc.porthos.runner import run_llil_mpc


def test_lr_program_matches_fixed_backend():
    rng = np.random.default_rng(0)
    g = models.logistic_regression(rng.uniform(-1, 1, (784, 10)), rng.uniform(-1, 1, 10))
    p = compile_to_llil(g, 15)
    xs = [rng.uniform(-1, 1, (1, 784)).astype(np.float32) for _ in range(200)]
    got, run = run_program(p, xs, rng)
    want = [int(eval_fixed(p, quantize(x, 15))[0]) for x in xs]
    agree = np.mean([int(a[0]) == b for a, b in zip(got, want)])
    assert agree >= 0.99
    assert_counters_symmetric(run)


def test_single_add_has_no_protocol_traffic():
    nodes = [Node("x", "Input", shape=(2, 3)), Node("b", "Const", shape=(3,)), Node("y", "Add", ("x", "b"))]
    p = LLILProgram(nodes, {"b": ring.ring([1, 2, 3])}, "x", "y", scale=0)
    x = np.arange(6, dtype=np.float32).reshape(2, 3)
    got, run = run_program(p, [x], np.random.default_rng(1))
    np.testing.assert_array_equal(signed(got[0]), x + [1, 2, 3])
    for rep in run.reports:
        assert all(r.phase == REVEAL_OUTPUT for r in rep.records)


def test_single_conv_uses_reshaped_counts():
    nodes = [Node("x", "Input", shape=(28, 28, 1)), Node("K", "Const", shape=(5, 5, 1, 1)),
             Node("c", "Conv2D", ("x", "K"), {"stride": 1, "padding": "VALID"})]
    rng = np.random.default_rng(2)
    K = ring.ring(rng.integers(-100, 100, (5, 5, 1, 1)))
    p = LLILProgram(nodes, {"K": K}, "x", "c", scale=0)
    x = rng.integers(-100, 100, (28, 28, 1)).astype(np.float32)
    got, run = run_program(p, [x], rng)
    np.testing.assert_array_equal(got[0], eval_fixed(p, ring.ring(x.astype(np.int64))))
    assert sum(r.elements(phases=REVEAL_PHASES) for r in run.reports) == reshaped_conv_elements(28, 5)


@pytest.mark.parametrize("reshaped", [True, False])
def test_cnn_end_to_end(reshaped):
    g = models.small_cnn(np.random.default_rng(3))
    p = compile_to_llil(g, 12)
    rng = np.random.default_rng(4)
    xs = [rng.normal(size=g.input_shape).astype(np.float32) for _ in range(3)]
    bundles = [program_shares(p, quantize(x, 12), rng) for x in xs]
    run = run_local(lambda c: [run_llil_mpc(c, p, b[c.party]) for b in bundles], reshaped_conv=reshaped)
    for x, out in zip(xs, run.results[0]):
        assert int(out[0]) == int(eval_fixed(p, quantize(x, 12))[0])
    assert_counters_symmetric(run)


def test_exact_truncation_option():
    rng = np.random.default_rng(5)
    g = models.logistic_regression(rng.uniform(-1, 1, (16, 4)), rng.uniform(-1, 1, 4))
    p = compile_to_llil(g, 15)
    xs = [rng.uniform(-1, 1, (1, 16)).astype(np.float32) for _ in range(10)]
    got, _ = run_program(p, xs, rng, exact_truncation=True)
    for x, o in zip(xs, got):
        assert int(o[0]) == int(eval_fixed(p, quantize(x, 15))[0])


def test_output_shares_without_reveal():
    nodes = [Node("x", "Input", shape=(4,)), Node("r", "ReLU", ("x",))]
    p = LLILProgram(nodes, {}, "x", "r", scale=0)
    x = np.array([3, -1, 0, -8], np.float32)
    b = program_shares(p, quantize(x, 0), np.random.default_rng(6))
    run = run_local(lambda c: run_llil_mpc(c, p, b[c.party], reveal_output=False))
    np.testing.assert_array_equal(signed(run.results[0] + run.results[1]), [3, 0, 0, 0])


def test_missing_share_rejected():
    nodes = [Node("x", "Input", shape=(2,)), Node("r", "ReLU", ("x",))]
    p = LLILProgram(nodes, {}, "x", "r", scale=0)
    with pytest.raises(Exception, match="missing share"):
        run_local(lambda c: run_llil_mpc(c, p, None if c.party == 2 else {}), timeout=2)


def test_argmax_must_be_output():
    nodes = [Node("x", "Input", shape=(1, 3)), Node("a", "ArgMax", ("x",)), Node("r", "ReLU", ("a",))]
    p = LLILProgram(nodes, {}, "x", "r", scale=0)
    b = program_shares(p, ring.ring(np.zeros((1, 3), np.int64)), np.random.default_rng(7))
    with pytest.raises(UnsupportedOpError):
        run_local(lambda c: run_llil_mpc(c, p, b[c.party]), timeout=2)
