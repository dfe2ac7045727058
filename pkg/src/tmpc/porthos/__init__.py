"""Three-party secure evaluation of LLIL programs.

Protocols live in ``arith``, ``nonlinear`` and ``runner``; only the sharing
helpers are imported here so that ``tmpc.net`` can depend on ``prf`` without
an import cycle.
"""

from .sharing import reconstruct, share

__all__ = ["reconstruct", "share"]
