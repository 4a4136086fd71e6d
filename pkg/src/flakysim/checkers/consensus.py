"""Consensus checks: agreement, validity, the stable-view timing bound and
eventual decision of the connected core."""

from __future__ import annotations

from ..consensus import leader
from ..trace import Trace, TraceEvent
from .common import INCONCLUSIVE, PASS, VIOLATION, Params, Verdict
from .sync import SyncObservations, stable_from


def _by_slot(events) -> dict[int, list[TraceEvent]]:
    out: dict[int, list[TraceEvent]] = {}
    for e in events:
        out.setdefault(e.data.get("slot", 0), []).append(e)
    return out


def check_consensus_safety(trace: Trace) -> Verdict:
    """Agreement (one decided value per slot) and validity (it was proposed)."""
    decides = _by_slot(trace.of_kind("Decide"))
    proposes = _by_slot(trace.of_kind("Propose"))
    for slot, evs in sorted(decides.items()):
        first = evs[0]
        for e in evs[1:]:
            if e.data["value"] != first.data["value"]:
                return Verdict("consensus_safety", VIOLATION,
                               f"agreement: slot {slot} decided {first.data['value']!r} "
                               f"and {e.data['value']!r}", (first.seq, e.seq))
        proposed = {p.data["value"] for p in proposes.get(slot, [])}
        for e in evs:
            if e.data["value"] not in proposed:
                return Verdict("consensus_safety", VIOLATION,
                               f"validity: slot {slot} decided {e.data['value']!r}, "
                               "which nobody proposed", (e.seq,))
    return Verdict("consensus_safety", PASS)


def first_decisions(trace: Trace, slot: int = 0) -> dict[int, TraceEvent]:
    out: dict[int, TraceEvent] = {}
    for e in trace.of_kind("Decide"):
        if e.data.get("slot", 0) == slot:
            out.setdefault(e.process, e)
    return out


def timer_name(protocol: str, slot: int) -> str:
    return "decision" if protocol == "consensus" else f"decision/{slot}"


def view_timeouts(trace: Trace, timer: str, slot: int = 0) -> dict[tuple[int, int], int]:
    """Timer duration armed by each process on entering each view."""
    out = {}
    last_enter: dict[int, TraceEvent] = {}
    for e in trace.events:
        if e.kind == "EnterView" and e.data.get("slot", 0) == slot:
            last_enter[e.process] = e
        elif e.kind == "TimerSet" and e.data["timer"] == timer and e.process in last_enter:
            ent = last_enter.pop(e.process)
            if ent.time == e.time:
                out[(e.process, ent.data["view"])] = e.data["duration"]
    return out


def stable_views(trace: Trace, params: Params, slot: int = 0) -> list[int]:
    """Views meeting the premise of the timing bound."""
    core, gst = params.core, params.gst
    if core is None or gst is None:
        return []
    obs = SyncObservations.from_trace(trace, slot)
    first_view = stable_from(obs, core, gst)
    timeouts = view_timeouts(trace, timer_name(params.protocol, slot), slot)
    proposals = {e.process: e for e in trace.of_kind("Propose") if e.data.get("slot", 0) == slot}
    bound = params.decision_bound
    out = []
    for v in obs.views_entered(core):
        ef = obs.first_enter(core, v)
        lead = leader(v, params.n)
        if v < first_view or lead not in core or ef.time < gst:
            continue
        prop = proposals.get(lead)
        if prop is None or prop.time > ef.time:
            continue
        entered = [p for p in core if (p, v) in obs.enter]
        if all(timeouts.get((p, v), 0) > bound for p in entered):
            out.append(v)
    return out


def check_decision_bound(trace: Trace, params: Params, slot: int = 0) -> Verdict:
    """In a stable view nobody in the core advances and everyone decides in time."""
    views = stable_views(trace, params, slot)
    if not views:
        return Verdict("decision_bound", INCONCLUSIVE, "no view meets the premise")
    core = params.core
    obs = SyncObservations.from_trace(trace, slot)
    decided = first_decisions(trace, slot)
    bound = params.decision_bound
    unsure = None
    for v in views:
        ef = obs.first_enter(core, v)
        adv = [obs.advance[(p, v)] for p in sorted(core) if (p, v) in obs.advance]
        if adv:
            return Verdict("decision_bound", VIOLATION,
                           f"core process p{adv[0].process} advanced in stable view {v}",
                           tuple(e.seq for e in adv))
        deadline = ef.time + bound
        late = [p for p in sorted(core) if p not in decided or decided[p].time > deadline]
        if late:
            if params.end_time < deadline:
                unsure = unsure or v
                continue
            return Verdict("decision_bound", VIOLATION,
                           f"stable view {v} entered at {ef.time}: {late} not decided by "
                           f"{deadline}", (ef.seq,))
    if unsure is not None:
        return Verdict("decision_bound", INCONCLUSIVE, f"trace ends too soon after view {unsure}")
    return Verdict("decision_bound", PASS,
                   f"stable views {views}: no core advance, all core decided in time")


def check_liveness(trace: Trace, params: Params, slot: int = 0) -> Verdict:
    """Every proposing core member decides by the liveness bound."""
    core = params.core
    bound = params.liveness_bound
    if core is None or bound is None:
        return Verdict("liveness", INCONCLUSIVE, "no connected core or asynchronous run")
    proposers = {e.process for e in trace.of_kind("Propose") if e.data.get("slot", 0) == slot}
    decided = first_decisions(trace, slot)
    late = [decided[p] for p in sorted(core & proposers)
            if p in decided and decided[p].time > bound]
    if late:
        return Verdict("liveness", VIOLATION,
                       f"decisions after the bound {bound}: "
                       + ", ".join(f"p{e.process}@{e.time}" for e in late),
                       tuple(e.seq for e in late))
    missing = [p for p in sorted(core & proposers) if p not in decided]
    if not missing:
        return Verdict("liveness", PASS, f"all proposing core members decided by {bound}")
    if params.end_time < 2 * bound:
        return Verdict("liveness", INCONCLUSIVE,
                       f"{missing} undecided; trace ends at {params.end_time} < 2x bound {bound}")
    return Verdict("liveness", VIOLATION, f"{missing} never decided (bound {bound})")
