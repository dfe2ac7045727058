from .compiler import compile_to_llil
from .quantize import dequantize, quantize
from .sweep import SweepConfig, SweepEntry, SweepReport, calibrate, sweep_scale

__all__ = [
    "SweepConfig", "SweepEntry", "SweepReport", "calibrate", "compile_to_llil",
    "dequantize", "quantize", "sweep_scale",
]
