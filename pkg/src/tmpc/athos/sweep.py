"""Precision selection by sweeping the global scale over a calibration set."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import QuantizationOverflow
from ..ir.graph import HLILGraph
from ..ir.interp import OverflowMonitor, eval_fixed, eval_float, first_argmax
from .compiler import compile_to_llil
from .quantize import dequantize, quantize

METRICS = ("argmax-agreement", "max-abs-error")


@dataclass
class SweepConfig:
    s_min: int = 8
    s_max: int = 24
    calibration: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    metric: str = "argmax-agreement"

    def __post_init__(self):
        if not 0 < self.s_min <= self.s_max <= 30:
            raise ValueError(f"need 0 < s_min <= s_max <= 30, got [{self.s_min}, {self.s_max}]")
        if not self.calibration:
            raise ValueError("calibration set is empty")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")


@dataclass
class SweepEntry:
    scale: int
    metric: float
    overflow: bool


@dataclass
class SweepReport:
    metric: str
    entries: list[SweepEntry]
    chosen: int

    def entry(self, s: int) -> SweepEntry:
        return next(e for e in self.entries if e.scale == s)

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "chosen": self.chosen,
            "entries": [{"scale": e.scale, "metric": e.metric, "overflow": e.overflow} for e in self.entries],
        }

    def table(self) -> str:
        lines = [f"{'s':>3}  {self.metric:>18}  overflow"]
        for e in self.entries:
            mark = " <" if e.scale == self.chosen else ""
            lines.append(f"{e.scale:>3}  {e.metric:>18.6g}  {'yes' if e.overflow else 'no':>8}{mark}")
        return "\n".join(lines)


def calibrate(graph: HLILGraph, inputs) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pair each input with its floating-point reference output."""
    return [(np.asarray(x, dtype=np.float32), eval_float(graph, x)) for x in inputs]


def _score(metric: str, fixed_out: np.ndarray, ref: np.ndarray, s: int) -> float:
    is_index = ref.dtype.kind == "i"
    if metric == "argmax-agreement":
        got = fixed_out if is_index else first_argmax(dequantize(fixed_out, s))
        want = ref if is_index else first_argmax(ref)
        return float(np.mean(got == want))
    if is_index:
        return float(np.max(np.abs(fixed_out - ref)))
    return float(np.max(np.abs(dequantize(fixed_out, s) - ref.astype(np.float64))))


def _evaluate_scale(graph: HLILGraph, cfg: SweepConfig, s: int) -> SweepEntry:
    worst = 0.0 if cfg.metric == "argmax-agreement" else float("inf")
    try:
        program = compile_to_llil(graph, s)
    except QuantizationOverflow:
        return SweepEntry(s, worst, True)
    monitor = OverflowMonitor()
    scores = []
    for x, ref in cfg.calibration:
        try:
            xq = quantize(x, s)
        except QuantizationOverflow:
            return SweepEntry(s, worst, True)
        scores.append(_score(cfg.metric, eval_fixed(program, xq, monitor=monitor), ref, s))
    agg = float(np.mean(scores)) if cfg.metric == "argmax-agreement" else float(np.max(scores))
    return SweepEntry(s, agg, monitor.overflowed)


def sweep_scale(graph: HLILGraph, cfg: SweepConfig) -> SweepReport:
    """Compile and evaluate at every s in [s_min, s_max]; pick the best scale.

    Scales that trip the overflow guard are recorded but only chosen when every
    scale overflows.  Ties go to the smaller scale.
    """
    entries = [_evaluate_scale(graph, cfg, s) for s in range(cfg.s_min, cfg.s_max + 1)]
    pool = [e for e in entries if not e.overflow] or entries
    if cfg.metric == "argmax-agreement":
        best = max(pool, key=lambda e: (e.metric, -e.scale))
    else:
        best = min(pool, key=lambda e: (e.metric, e.scale))
    return SweepReport(cfg.metric, entries, best.scale)
