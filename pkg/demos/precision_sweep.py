"""Choosing the fixed-point scale.

Too few fractional bits and the classifier drifts from the float model; too
many and products leave the 64-bit ring.  The sweep shows both edges.
"""

import numpy as np

from tmpc import models
from tmpc.athos import SweepConfig, calibrate, sweep_scale

rng = np.random.default_rng(0)
graph = models.two_layer(rng.uniform(-1, 1, (32, 32)), rng.uniform(-1, 1, 32),
                         rng.uniform(-1, 1, (32, 10)), rng.uniform(-1, 1, 10))
inputs = [rng.uniform(-4, 4, (1, 32)).astype(np.float32) for _ in range(300)]
report = sweep_scale(graph, SweepConfig(s_min=1, s_max=30, calibration=calibrate(graph, inputs)))
print(report.table())
print(f"\nchosen s = {report.chosen}")
