"""Naive vs reshaped secure convolution.

Lowering to a matrix product first reveals every masked image patch, so the
image is sent about f*f times over.  Masking the image itself and forming the
patch matrix of the public masked image locally sends it once.
"""

from tmpc.cli import bench_conv
from tmpc.porthos import costs

print(f"{'m':>4} {'f':>3} {'naive':>10} {'reshaped':>9} {'ratio':>7}")
for m, f in [(5, 5), (28, 5), (64, 11), (112, 7)]:
    res = bench_conv(m, f)
    n = res["modes"]["naive"]["elements"]
    r = res["modes"]["reshaped"]["elements"]
    assert n == costs.naive_conv_elements(m, f) and r == costs.reshaped_conv_elements(m, f)
    print(f"{m:>4} {f:>3} {n:>10} {r:>9} {n / r:>7.1f}")

# the largest case is counted from the formulas only
m, f = 224, 7
n, r = costs.naive_conv_elements(m, f), costs.reshaped_conv_elements(m, f)
print(f"{m:>4} {f:>3} {n:>10} {r:>9} {n / r:>7.1f}  (formula)")
