"""Communication accounting: per (sender, receiver, phase) byte and element counts."""

from __future__ import annotations

import json
import threading
from collections import defaultdict
from dataclasses import dataclass, field

from .wire import PHASE_NAMES


class CommCounter:
    """Thread-safe counters; element counts exclude framing, byte counts include it."""

    def __init__(self):
        self._lock = threading.Lock()
        self._data: dict[tuple[int, int, int], list[int]] = defaultdict(lambda: [0, 0])

    def add(self, sender: int, receiver: int, tag: int, nbytes: int, elements: int) -> None:
        with self._lock:
            slot = self._data[(sender, receiver, tag)]
            slot[0] += nbytes
            slot[1] += elements

    def reset(self) -> None:
        with self._lock:
            self._data.clear()

    def snapshot(self) -> dict[tuple[int, int, int], tuple[int, int]]:
        with self._lock:
            return {k: (v[0], v[1]) for k, v in self._data.items()}


@dataclass
class CommRecord:
    sender: int
    receiver: int
    phase: int
    bytes: int
    elements: int

    @property
    def phase_name(self) -> str:
        return PHASE_NAMES.get(self.phase, str(self.phase))


@dataclass
class CommReport:
    """One party's view: every frame it sent and every frame it received."""

    party: int
    records: list[CommRecord] = field(default_factory=list)

    def sent(self) -> list[CommRecord]:
        return [r for r in self.records if r.sender == self.party]

    def received(self) -> list[CommRecord]:
        return [r for r in self.records if r.receiver == self.party]

    def elements(self, *, sender=None, receiver=None, phases=None) -> int:
        return _sum(self.sent(), "elements", sender, receiver, phases)

    def bytes(self, *, sender=None, receiver=None, phases=None) -> int:
        return _sum(self.sent(), "bytes", sender, receiver, phases)

    def to_dict(self) -> dict:
        return {
            "party": self.party,
            "records": [
                {"from": r.sender, "to": r.receiver, "phase": r.phase_name, "tag": r.phase,
                 "bytes": r.bytes, "elements": r.elements}
                for r in sorted(self.records, key=lambda r: (r.sender, r.receiver, r.phase))
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "CommReport":
        recs = [CommRecord(r["from"], r["to"], r["tag"], r["bytes"], r["elements"]) for r in d["records"]]
        return cls(d["party"], recs)


def _sum(records, attr, sender, receiver, phases) -> int:
    total = 0
    for r in records:
        if sender is not None and r.sender != sender:
            continue
        if receiver is not None and r.receiver != receiver:
            continue
        if phases is not None and r.phase not in phases:
            continue
        total += getattr(r, attr)
    return total


def merge_reports(reports) -> dict:
    """Whole-protocol totals, counting each frame once (on the sender's side)."""
    per_phase: dict[str, dict[str, int]] = {}
    per_link: dict[str, dict[str, int]] = {}
    total = {"bytes": 0, "elements": 0}
    for rep in reports:
        for r in rep.sent():
            for bucket, key in ((per_phase, r.phase_name), (per_link, f"P{r.sender}->P{r.receiver}")):
                slot = bucket.setdefault(key, {"bytes": 0, "elements": 0})
                slot["bytes"] += r.bytes
                slot["elements"] += r.elements
            total["bytes"] += r.bytes
            total["elements"] += r.elements
    return {"total": total, "per_phase": per_phase, "per_link": per_link}
