"""Logistic regression from float graph to three-party inference.

Builds a 784 -> 10 classifier, compiles it to fixed point at s=15, prints the
compiled program, then classifies one query with each backend.
"""

import time

import numpy as np

from tmpc import models
from tmpc.athos import compile_to_llil, quantize
from tmpc.ir import eval_fixed, eval_float, to_text
from tmpc.net.counters import merge_reports
from tmpc.net.local import run_local
from tmpc.porthos.runner import run_llil_mpc
from tmpc.porthos.sharing import share

rng = np.random.default_rng(0)
graph = models.logistic_regression(rng.uniform(-1, 1, (784, 10)), rng.uniform(-1, 1, 10))
program = compile_to_llil(graph, 15)
print(to_text(program))
print()

x = rng.uniform(0, 1, (1, 784)).astype(np.float32)
xq = quantize(x, 15)

t = time.perf_counter()
print("float :", int(eval_float(graph, x)[0]), f"({(time.perf_counter() - t) * 1e3:.2f} ms)")
t = time.perf_counter()
print("fixed :", int(eval_fixed(program, xq)[0]), f"({(time.perf_counter() - t) * 1e3:.2f} ms)")

# the model owner shares W and b, the client shares x; P2 holds nothing
s0, s1 = {}, {}
for node_id, value in [("x", xq), ("W", program.weights["W"]), ("b", program.weights["b"])]:
    s0[node_id], s1[node_id] = share(value, rng)
bundles = [s0, s1, None]

t = time.perf_counter()
run = run_local(lambda ctx: run_llil_mpc(ctx, program, bundles[ctx.party]), recipients=(0,))
print("mpc   :", int(run.results[0][0]), f"({(time.perf_counter() - t) * 1e3:.2f} ms incl. mesh setup)")

totals = merge_reports(run.reports)
print()
print("communication by phase (elements):")
for phase, v in sorted(totals["per_phase"].items()):
    print(f"  {phase:14s} {v['elements']:>8}")
print(f"  {'total':14s} {totals['total']['elements']:>8}  ({totals['total']['bytes']} bytes on the wire)")
