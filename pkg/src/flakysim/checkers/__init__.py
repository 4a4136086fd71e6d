"""Offline trace checkers and a dispatcher that runs a named selection."""

from __future__ import annotations

from typing import Iterable

from ..trace import Trace
from .common import INCONCLUSIVE, PASS, VIOLATION, Params, Report, Verdict
from .consensus import check_consensus_safety, check_decision_bound, check_liveness
from .linearizability import (check_linearizable, check_register_liveness,
                              check_register_trace, check_safe_register)
from .sync import (check_bounded_entry, check_monotonicity, check_progress, check_startup,
                   check_validity, slots_in)

SYNC_CHECKS = ("monotonicity", "validity", "bounded_entry", "startup", "progress")

DEFAULT_CHECKS = {
    "consensus": SYNC_CHECKS + ("consensus_safety", "decision_bound", "liveness"),
    "register": ("linearizable", "register_liveness"),
    "rfc": SYNC_CHECKS + ("consensus_safety", "safe_register"),
}

__all__ = [
    "PASS", "VIOLATION", "INCONCLUSIVE", "Params", "Report", "Verdict", "DEFAULT_CHECKS",
    "run_checks", "check_monotonicity", "check_validity", "check_bounded_entry",
    "check_startup", "check_progress", "check_consensus_safety", "check_decision_bound",
    "check_liveness", "check_linearizable",
]


def _worst(name: str, verdicts: list[Verdict]) -> Verdict:
    for status in (VIOLATION, INCONCLUSIVE):
        for v in verdicts:
            if v.status == status:
                return v
    return verdicts[0] if verdicts else Verdict(name, PASS)


def run_checks(trace: Trace, checks: Iterable[str] | None = None, **overrides) -> Report:
    """Run the named checks (default: all that apply to the protocol)."""
    params = Params.from_trace(trace, **overrides)
    names = list(checks) if checks else list(DEFAULT_CHECKS[params.protocol])
    horizon = trace.header.get("horizon", params.end_time)
    slots = slots_in(trace)
    per_slot = {
        "monotonicity": lambda s: check_monotonicity(trace, s),
        "validity": lambda s: check_validity(trace, params.core, s),
        "bounded_entry": lambda s: check_bounded_entry(trace, params, s),
        "startup": lambda s: check_startup(trace, params, s),
        "progress": lambda s: check_progress(trace, params, s),
        "decision_bound": lambda s: check_decision_bound(trace, params, s),
        "liveness": lambda s: check_liveness(trace, params, s),
    }
    whole = {
        "consensus_safety": lambda: check_consensus_safety(trace),
        "linearizable": lambda: check_register_trace(trace),
        "safe_register": lambda: check_safe_register(trace),
        "register_liveness": lambda: check_register_liveness(
            trace, params.core, params.end_time, horizon, params.liveness_bound),
    }
    report = Report()
    for name in names:
        if name in per_slot:
            report.verdicts.append(_worst(name, [per_slot[name](s) for s in slots]))
        elif name in whole:
            report.verdicts.append(whole[name]())
        else:
            raise ValueError(f"unknown check {name!r}")
    return report
