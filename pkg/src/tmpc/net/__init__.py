from .counters import CommCounter, CommRecord, CommReport, merge_reports
from .party import PartyConfig, PartyContext, comm_report, connect_mesh, derive_keys
from .wire import PHASE_NAMES

__all__ = [
    "CommCounter", "CommRecord", "CommReport", "PHASE_NAMES", "PartyConfig", "PartyContext",
    "comm_report", "connect_mesh", "derive_keys", "merge_reports",
]
