import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from tmpc import ring
from tmpc.athos import dequantize, quantize
from tmpc.ir import conv2d_im2col, conv2d_ref
from tmpc.porthos.sharing import reconstruct, share

u64 = hnp.arrays(np.uint64, st.integers(1, 20), elements=st.integers(0, 2 ** 64 - 1))
odd = st.integers(0, 2 ** 64 - 2)


@given(st.floats(-1000, 1000, allow_nan=False), st.integers(1, 30))
def test_quantize_round_trip(r, s):
    assert abs(float(dequantize(quantize(np.array([r]), s), s)[0]) - r) <= 2.0 ** -s


@given(u64, st.integers(0, 2 ** 32))
def test_share_reconstruct(x, seed):
    x0, x1 = share(x, np.random.default_rng(seed))
    np.testing.assert_array_equal(reconstruct(x0, x1), x)


@given(odd, odd)
def test_odd_ring_matches_integers(a, b):
    m = 2 ** 64 - 1
    A, B = np.array([a], np.uint64), np.array([b], np.uint64)
    assert int(ring.odd_add(A, B)[0]) == (a + b) % m
    assert int(ring.odd_sub(A, B)[0]) == (a - b) % m
    assert int(ring.odd_neg(A)[0]) == (-a) % m


@given(st.integers(0, 2 ** 64 - 1), st.integers(0, 2 ** 64 - 1))
def test_wrap_bit(a, b):
    assert int(ring.wrap(np.array([a], np.uint64), np.array([b], np.uint64))[0]) == int(a + b >= 2 ** 64)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 9), st.integers(1, 4), st.integers(1, 3), st.integers(1, 3), st.integers(0, 2 ** 32))
def test_im2col_conv_equals_direct(m, f, c, stride, seed):
    f = min(f, m)
    rng = np.random.default_rng(seed)
    img = ring.ring(rng.integers(-2 ** 63, 2 ** 63, (m, m, c), dtype=np.int64))
    flt = ring.ring(rng.integers(-2 ** 63, 2 ** 63, (f, f, c, 2), dtype=np.int64))
    for pad in ("VALID", "SAME"):
        np.testing.assert_array_equal(conv2d_im2col(img, flt, stride, pad), conv2d_ref(img, flt, stride, pad))
