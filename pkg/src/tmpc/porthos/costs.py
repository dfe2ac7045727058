"""Closed-form element counts for the linear protocols (one direction summed, all links)."""


def matmul_elements(a: int, b: int, c: int) -> int:
    """Beaver matmul of (a, b) by (b, c): E and F both ways, plus one C share from P2."""
    return 2 * (a * b + b * c) + a * c


def conv_output(m: int, f: int, stride: int = 1) -> int:
    return (m - f) // stride + 1


def naive_conv_elements(m: int, f: int, stride: int = 1, channels: int = 1, filters: int = 1) -> int:
    """im2col first, then a matmul of (q*q, f*f*C) by (f*f*C, K)."""
    q = conv_output(m, f, stride)
    return matmul_elements(q * q, f * f * channels, filters)


def reshaped_conv_elements(m: int, f: int, stride: int = 1, channels: int = 1, filters: int = 1) -> int:
    """Mask the image itself: 2(m*m*C + f*f*C*K) + q*q*K."""
    q = conv_output(m, f, stride)
    return 2 * (m * m * channels + f * f * channels * filters) + q * q * filters
