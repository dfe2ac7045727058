"""What the shared k12 key saves in ReLU.

Every time the helper hands out a fresh sharing, P1's half can be expanded
from the key it shares with the helper instead of being sent.
"""

import numpy as np

from tmpc import ring
from tmpc.net.local import run_local
from tmpc.net.wire import PHASE_NAMES
from tmpc.porthos.nonlinear import relu
from tmpc.porthos.sharing import share

rng = np.random.default_rng(1)
x = rng.integers(-2 ** 30, 2 ** 30, (64, 64))
x0, x1 = share(ring.ring(x), rng)
parts = {0: x0, 1: x1, 2: np.zeros_like(x0)}

per_link = {}
for opt in (False, True):
    run = run_local(lambda ctx: relu(ctx, parts[ctx.party]), prf_opt=opt, seed=5)
    out = ring.signed(run.results[0] + run.results[1])
    assert np.array_equal(out, np.maximum(x, 0))
    counts = {}
    for rep in run.reports:
        for r in rep.sent():
            key = (f"P{r.sender}->P{r.receiver}", PHASE_NAMES[r.phase])
            counts[key] = counts.get(key, 0) + r.elements
    per_link[opt] = counts

print(f"{'link':8s} {'phase':10s} {'no-prf-opt':>11} {'prf-opt':>9}")
for key in sorted(set(per_link[False]) | set(per_link[True])):
    print(f"{key[0]:8s} {key[1]:10s} {per_link[False].get(key, 0):>11} {per_link[True].get(key, 0):>9}")
before, after = sum(per_link[False].values()), sum(per_link[True].values())
print(f"\nper element: {before / x.size:.0f} -> {after / x.size:.0f}, {1 - after / before:.1%} less in total")
