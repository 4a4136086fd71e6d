"""Trace checks for the five view-synchronizer properties.

Times are trace instants (time, seq) so that "strictly before" is exact even
for events that share a timestamp.  The liveness-style properties (startup and
progress) report "inconclusive" when the trace ends too soon after their
premise was met to tell a slow run from a stuck one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..trace import Trace, TraceEvent
from .common import INCONCLUSIVE, PASS, VIOLATION, Params, Verdict


@dataclass
class SyncObservations:
    """First EnterView / Advance event per (process, view) for one slot."""
    enter: dict[tuple[int, int], TraceEvent] = field(default_factory=dict)
    advance: dict[tuple[int, int], TraceEvent] = field(default_factory=dict)
    enters_by_process: dict[int, list[TraceEvent]] = field(default_factory=dict)

    @classmethod
    def from_trace(cls, trace: Trace, slot: int = 0) -> "SyncObservations":
        obs = cls()
        for e in trace.events:
            if e.kind == "EnterView" and e.data.get("slot", 0) == slot:
                obs.enter.setdefault((e.process, e.data["view"]), e)
                obs.enters_by_process.setdefault(e.process, []).append(e)
            elif e.kind == "Advance" and e.data.get("slot", 0) == slot:
                obs.advance.setdefault((e.process, e.data["view"]), e)
        return obs

    def views_entered(self, procs) -> list[int]:
        return sorted({v for (p, v) in self.enter if p in procs})

    def first_enter(self, procs, v: int) -> TraceEvent | None:
        evs = [self.enter[(p, v)] for p in procs if (p, v) in self.enter]
        return min(evs, key=lambda e: e.instant) if evs else None

    def first_advance(self, procs, v: int) -> TraceEvent | None:
        evs = [self.advance[(p, v)] for p in procs if (p, v) in self.advance]
        return min(evs, key=lambda e: e.instant) if evs else None


def slots_in(trace: Trace) -> list[int]:
    return sorted({e.data.get("slot", 0) for e in trace.of_kind("EnterView", "Advance")}) or [0]


def check_monotonicity(trace: Trace, slot: int = 0) -> Verdict:
    obs = SyncObservations.from_trace(trace, slot)
    for p, evs in sorted(obs.enters_by_process.items()):
        for a, b in zip(evs, evs[1:]):
            if not (a.data["view"] < b.data["view"] and a.instant < b.instant):
                return Verdict("monotonicity", VIOLATION,
                               f"p{p} entered view {a.data['view']} then view {b.data['view']}",
                               (a.seq, b.seq))
    return Verdict("monotonicity", PASS)


def check_validity(trace: Trace, core, slot: int = 0) -> Verdict:
    if core is None:
        return Verdict("validity", INCONCLUSIVE, "no connected core")
    obs = SyncObservations.from_trace(trace, slot)
    for (p, v1), e in sorted(obs.enter.items(), key=lambda kv: kv[1].instant):
        first = obs.first_advance(core, v1 - 1)
        if first is None:
            return Verdict("validity", VIOLATION,
                           f"p{p} entered view {v1} but no core process advanced from {v1 - 1}",
                           (e.seq,))
        if not first.instant < e.instant:
            return Verdict("validity", VIOLATION,
                           f"p{p} entered view {v1} before any core advance from {v1 - 1}",
                           (first.seq, e.seq))
    return Verdict("validity", PASS)


def stable_from(obs: SyncObservations, core, gst: int) -> int:
    """The smallest view from which core entries are all at or after GST."""
    early = [v for v in obs.views_entered(core) if obs.first_enter(core, v).time < gst]
    return max(early, default=0) + 1


def check_bounded_entry(trace: Trace, params: Params, slot: int = 0) -> Verdict:
    core, gst = params.core, params.gst
    if core is None or gst is None:
        return Verdict("bounded_entry", INCONCLUSIVE, "no connected core or asynchronous run")
    d = params.entry_spread
    obs = SyncObservations.from_trace(trace, slot)
    first_view = stable_from(obs, core, gst)
    pending = None
    for v in obs.views_entered(core):
        if v < first_view:
            continue
        ef = obs.first_enter(core, v)
        af = obs.first_advance(core, v)
        if af is not None and af.time < ef.time + d:
            continue
        late = [p for p in sorted(core)
                if (p, v) not in obs.enter or obs.enter[(p, v)].time > ef.time + d]
        if not late:
            continue
        if params.end_time < ef.time + d:
            pending = pending or v
            continue
        witnesses = (ef.seq,) + tuple(obs.enter[(p, v)].seq for p in late if (p, v) in obs.enter)
        return Verdict("bounded_entry", VIOLATION,
                       f"view {v}: first core entry at {ef.time}, processes {late} "
                       f"not in by {ef.time + d}", witnesses)
    if pending is not None:
        return Verdict("bounded_entry", INCONCLUSIVE, f"view {pending} too close to trace end")
    return Verdict("bounded_entry", PASS, f"checked views >= {first_view} with d={d}")


def _deadline(params: Params, premise_time: int) -> int | None:
    if params.gst is None:
        return None
    return max(premise_time, params.gst) + params.guard_window


def check_startup(trace: Trace, params: Params, slot: int = 0) -> Verdict:
    core, n = params.core, params.n
    if core is None:
        return Verdict("startup", INCONCLUSIVE, "no connected core")
    obs = SyncObservations.from_trace(trace, slot)
    starters = [obs.advance[(p, 0)] for p in sorted(core) if (p, 0) in obs.advance]
    if 2 * len(starters) <= n:
        return Verdict("startup", PASS, "premise not met")
    if obs.first_enter(core, 1) is not None:
        return Verdict("startup", PASS)
    premise = max(e.time for e in starters)
    deadline = _deadline(params, premise)
    if deadline is None or params.end_time < deadline:
        return Verdict("startup", INCONCLUSIVE, "trace too short after the premise")
    return Verdict("startup", VIOLATION,
                   f"a core majority advanced from view 0 by {premise} but no core process "
                   f"entered view 1 by {params.end_time}", tuple(e.seq for e in starters))


def check_progress(trace: Trace, params: Params, slot: int = 0) -> Verdict:
    core, n = params.core, params.n
    if core is None:
        return Verdict("progress", INCONCLUSIVE, "no connected core")
    obs = SyncObservations.from_trace(trace, slot)
    pending = None
    for v in obs.views_entered(core):
        entered = [p for p in sorted(core) if (p, v) in obs.enter]
        if 2 * len(entered) <= n or any((p, v) not in obs.advance for p in entered):
            continue
        if obs.first_enter(core, v + 1) is not None:
            continue
        premise = max(obs.advance[(p, v)].time for p in entered)
        deadline = _deadline(params, premise)
        if deadline is None or params.end_time < deadline:
            pending = pending or v
            continue
        return Verdict("progress", VIOLATION,
                       f"core processes {entered} all advanced from view {v} by {premise} "
                       f"but no core process entered view {v + 1} by {params.end_time}",
                       tuple(obs.advance[(p, v)].seq for p in entered))
    if pending is not None:
        return Verdict("progress", INCONCLUSIVE, f"view {pending} too close to trace end")
    return Verdict("progress", PASS)
