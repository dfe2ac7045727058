"""Exception hierarchy shared by the compiler, interpreters and the 3-party runtime."""


class TmpcError(Exception):
    """Base class for all package errors."""


class ModelFormatError(TmpcError, ValueError):
    """Malformed container, unknown op-kind, dangling reference."""


class ShapeError(TmpcError, ValueError):
    pass


class ScaleMismatchError(TmpcError, ValueError):
    pass


class QuantizationOverflow(TmpcError, OverflowError):
    """A quantized magnitude reached the 2^62 guard band."""


class UnsupportedOpError(TmpcError, ValueError):
    pass


class ProtocolError(TmpcError):
    """Anything that goes wrong while the three parties are talking."""


class DesyncError(ProtocolError):
    """Received a frame with an unexpected phase tag."""


class HandshakeError(ProtocolError):
    pass


class MeshTimeout(ProtocolError, TimeoutError):
    pass


class StreamReuseError(TmpcError):
    """A PRF stream-id was issued twice under the same key."""
