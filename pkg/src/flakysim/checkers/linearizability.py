"""Linearizability of read/write register histories.

The main test builds a dependency graph from the tags the register protocol
assigns to operations: real-time order, write-to-read by equal tags,
write-to-write by tag order, and the derived read-to-write edges.  The history
is linearizable when that graph is acyclic.

Two independent oracles back it up on small histories: a search for a legal
sequential order, and an enumeration of every possible choice of write-read
and write-write relations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations, product
from typing import Any, Iterable, Sequence

from ..trace import Trace
from .common import INCONCLUSIVE, PASS, VIOLATION, Verdict

INITIAL = 0
INF = (float("inf"), float("inf"))


@dataclass(frozen=True)
class Operation:
    id: int
    process: int
    kind: str                       # "read" | "write"
    value: Any                      # written value, or value returned by a read
    invoked: tuple                  # instant (time, seq)
    responded: tuple | None = None  # None while pending
    tag: tuple | None = None

    @property
    def complete(self) -> bool:
        return self.responded is not None


def precedes(a: Operation, b: Operation) -> bool:
    """a completes before b is invoked."""
    return a.responded is not None and a.responded < b.invoked


class InstrumentationError(ValueError):
    """The tags in a history do not fit the protocol's tagging rules."""


@dataclass
class DependencyGraph:
    ops: list[Operation]
    rt: set[tuple[int, int]] = field(default_factory=set)
    wr: set[tuple[int, int]] = field(default_factory=set)
    ww: set[tuple[int, int]] = field(default_factory=set)
    rw: set[tuple[int, int]] = field(default_factory=set)

    def edges(self) -> set[tuple[int, int]]:
        return self.rt | self.wr | self.ww | self.rw

    def find_cycle(self) -> list[int] | None:
        adj: dict[int, list[int]] = {o.id: [] for o in self.ops}
        for a, b in sorted(self.edges()):
            adj[a].append(b)
        color = dict.fromkeys(adj, 0)
        parent: dict[int, int] = {}
        for root in sorted(adj):
            if color[root]:
                continue
            stack = [(root, iter(adj[root]))]
            color[root] = 1
            while stack:
                v, it = stack[-1]
                for w in it:
                    if color[w] == 0:
                        color[w] = 1
                        parent[w] = v
                        stack.append((w, iter(adj[w])))
                        break
                    if color[w] == 1:
                        cycle = [w, v]
                        while cycle[-1] != w:
                            cycle.append(parent[cycle[-1]])
                        return list(reversed(cycle[1:]))
                else:
                    color[v] = 2
                    stack.pop()
        return None


def real_time(ops: Sequence[Operation]) -> set[tuple[int, int]]:
    return {(a.id, b.id) for a in ops for b in ops if a.id != b.id and precedes(a, b)}


def derive_rw(ops: Sequence[Operation], wr: set, ww: set) -> set[tuple[int, int]]:
    writer_of = {r: w for (w, r) in wr}
    writes = [o.id for o in ops if o.kind == "write"]
    out = set()
    for o in ops:
        if o.kind != "read":
            continue
        w0 = writer_of.get(o.id)
        if w0 is None:
            out.update((o.id, w) for w in writes)
        else:
            out.update((o.id, w) for (a, w) in ww if a == w0)
    return out


def build_dependency_graph(ops: Sequence[Operation]) -> DependencyGraph:
    """Dependency graph with witnesses taken from operation tags."""
    writes = [o for o in ops if o.kind == "write"]
    reads = [o for o in ops if o.kind == "read"]
    by_tag: dict[tuple, Operation] = {}
    for w in writes:
        if w.tag is None:
            raise InstrumentationError(f"write {w.id} has no tag")
        if tuple(w.tag) in by_tag:
            raise InstrumentationError(f"writes {by_tag[tuple(w.tag)].id} and {w.id} share a tag")
        by_tag[tuple(w.tag)] = w
    g = DependencyGraph(list(ops), rt=real_time(ops))
    for r in reads:
        if r.tag is None:
            raise InstrumentationError(f"read {r.id} has no tag")
        w = by_tag.get(tuple(r.tag))
        if w is not None:
            g.wr.add((w.id, r.id))
        elif tuple(r.tag) != (0, 0):
            raise InstrumentationError(f"read {r.id} has tag {r.tag} matching no write")
    for a in writes:
        for b in writes:
            if tuple(a.tag) < tuple(b.tag):
                g.ww.add((a.id, b.id))
    g.rw = derive_rw(ops, g.wr, g.ww)
    return g


def graph_problems(g: DependencyGraph) -> list[str]:
    """Conditions a dependency graph must meet beyond acyclicity."""
    by_id = {o.id: o for o in g.ops}
    out = []
    writer_of = {}
    for w, r in g.wr:
        if r in writer_of:
            out.append(f"read {r} has two writers")
        writer_of[r] = w
        if by_id[w].value != by_id[r].value:
            out.append(f"read {r} returned {by_id[r].value!r} but its writer {w} "
                       f"wrote {by_id[w].value!r}")
    for o in g.ops:
        if o.kind == "read" and o.id not in writer_of and o.value != INITIAL:
            out.append(f"read {o.id} returned {o.value!r} without a writer")
    return out


def check_linearizable(ops: Sequence[Operation]) -> Verdict:
    try:
        g = build_dependency_graph(ops)
    except InstrumentationError as exc:
        return Verdict("linearizable", VIOLATION, f"instrumentation: {exc}")
    problems = graph_problems(g)
    if problems:
        return Verdict("linearizable", VIOLATION, "; ".join(problems))
    cycle = g.find_cycle()
    if cycle is not None:
        return Verdict("linearizable", VIOLATION, f"dependency cycle through operations {cycle}")
    return Verdict("linearizable", PASS, f"{len(ops)} operations, acyclic")


# -- oracles -----------------------------------------------------------------

def linearizable_bruteforce(ops: Sequence[Operation]) -> bool:
    """Search for a sequential order that respects real time and register semantics."""
    ops = list(ops)
    k = len(ops)
    before = [0] * k
    for i, a in enumerate(ops):
        for j, b in enumerate(ops):
            if i != j and precedes(a, b):
                before[j] |= 1 << i

    @lru_cache(maxsize=None)
    def search(done: int, current: Any) -> bool:
        if done == (1 << k) - 1:
            return True
        for j, o in enumerate(ops):
            bit = 1 << j
            if done & bit or (before[j] & ~done):
                continue
            if o.kind == "write":
                if search(done | bit, o.value):
                    return True
            elif o.value == current and search(done | bit, current):
                return True
        return False

    return search(0, INITIAL)


def linearizable_by_witnesses(ops: Sequence[Operation]) -> bool:
    """True iff some choice of write-read and write-write relations gives an
    acyclic dependency graph.  Exponential; for small histories only."""
    ops = list(ops)
    writes = [o for o in ops if o.kind == "write"]
    reads = [o for o in ops if o.kind == "read"]
    rt = real_time(ops)
    # each read: a writer with the same value, or none if it returned the initial value
    choices = []
    for r in reads:
        opts: list[int | None] = [w.id for w in writes if w.value == r.value]
        if r.value == INITIAL:
            opts.append(None)
        if not opts:
            return False
        choices.append(opts)
    for order in permutations([w.id for w in writes]):
        ww = {(order[i], order[j]) for i in range(len(order)) for j in range(i + 1, len(order))}
        for pick in product(*choices):
            wr = {(w, r.id) for w, r in zip(pick, reads) if w is not None}
            g = DependencyGraph(ops, rt=rt, wr=wr, ww=ww, rw=derive_rw(ops, wr, ww))
            if g.find_cycle() is None:
                return True
    return False


# -- history extraction ------------------------------------------------------

def _written_tags(trace: Trace) -> dict[tuple[int, int], tuple]:
    """(process, seq) -> tag published for that operation, seen in gossip."""
    out = {}
    for e in trace.of_kind("Send"):
        if e.data["kind"] != "STATE":
            continue
        write = e.data["body"][2]
        val, tag, seq = write[e.process - 1]
        if seq > 0:
            out.setdefault((e.process, seq), tuple(tag))
    return out


def register_history(trace: Trace) -> list[Operation]:
    """Operations of a register run.

    Pending reads are dropped.  A pending write is kept, with no response, if
    some completed read returned its tag; otherwise it took no visible effect
    and is dropped.
    """
    invokes = {}
    responds = {}
    for e in trace.events:
        if e.kind == "Invoke":
            invokes[(e.process, e.data["seq"])] = e
        elif e.kind == "Respond":
            responds[(e.process, e.data["seq"])] = e
    ops = []
    pending = []
    for key, inv in sorted(invokes.items(), key=lambda kv: kv[1].instant):
        res = responds.get(key)
        kind = inv.data["op"]
        if res is None:
            if kind == "write":
                pending.append((key, inv))
            continue
        value = inv.data["arg"] if kind == "write" else res.data["value"]
        ops.append(Operation(len(ops), inv.process, kind, value, inv.instant, res.instant,
                             tuple(res.data["tag"])))
    if pending:
        published = _written_tags(trace)
        seen = {o.tag for o in ops if o.kind == "read"}
        for key, inv in pending:
            tag = published.get(key)
            if tag is not None and tag in seen:
                ops.append(Operation(len(ops), inv.process, "write", inv.data["arg"],
                                     inv.instant, None, tag))
    return ops


def rfc_history(trace: Trace) -> list[Operation]:
    """Operations of a consensus-backed register, tagged by log position.

    A write decided in slot k gets tag (k + 1, invoker); a read gets the tag of
    the last write decided before its slot.
    """
    log: dict[int, tuple] = {}
    for e in trace.of_kind("Decide"):
        log.setdefault(e.data["slot"], tuple(e.data["value"]))
    slot_of = {(op[0], op[1]): k for k, op in log.items()}
    tag_at = {}
    last = (0, 0)
    for k in range(max(log, default=-1) + 1):
        tag_at[k] = last
        op = log.get(k)
        if op is None:
            break
        if op[2] == "write":
            last = (k + 1, op[0])
    responds = {(e.process, e.data["number"]): e for e in trace.of_kind("Respond")}
    ops = []
    for inv in trace.of_kind("Invoke"):
        key = (inv.process, inv.data["number"])
        res = responds.get(key)
        kind = inv.data["op"]
        slot = slot_of.get(key)
        if kind == "write":
            if slot is None:
                continue
            ops.append(Operation(len(ops), inv.process, kind, inv.data["arg"], inv.instant,
                                 None if res is None else res.instant, (slot + 1, inv.process)))
        elif res is not None:
            ops.append(Operation(len(ops), inv.process, kind, res.data["value"], inv.instant,
                                 res.instant, tag_at.get(slot, (0, 0))))
    return ops


def _overlaps(a: Operation, b: Operation) -> bool:
    return not precedes(a, b) and not precedes(b, a)


def safe_subhistory(ops: Sequence[Operation]) -> list[Operation]:
    """Writes plus the reads that overlap no write."""
    writes = [o for o in ops if o.kind == "write"]
    keep = [o for o in ops
            if o.kind == "write" or not any(_overlaps(o, w) for w in writes)]
    return [Operation(i, o.process, o.kind, o.value, o.invoked, o.responded, o.tag)
            for i, o in enumerate(keep)]


def check_register_trace(trace: Trace) -> Verdict:
    return check_linearizable(register_history(trace))


def check_safe_register(trace: Trace) -> Verdict:
    v = check_linearizable(safe_subhistory(rfc_history(trace)))
    return Verdict("safe_register", v.status, v.detail, v.events)


def check_register_liveness(trace: Trace, core, end_time: int, horizon: int,
                            bound: int | None) -> Verdict:
    """Every operation a core member invokes completes within the run."""
    if core is None:
        return Verdict("register_liveness", INCONCLUSIVE, "no connected core")
    key = "seq" if any("seq" in e.data for e in trace.of_kind("Invoke")) else "number"
    done = {(e.process, e.data[key]) for e in trace.of_kind("Respond")}
    open_ops = [e for e in trace.of_kind("Invoke")
                if e.process in core and (e.process, e.data[key]) not in done]
    if not open_ops:
        return Verdict("register_liveness", PASS)
    if bound is None or end_time < max(horizon, bound):
        return Verdict("register_liveness", INCONCLUSIVE,
                       f"{len(open_ops)} core operations still running at {end_time}")
    return Verdict("register_liveness", VIOLATION,
                   f"{len(open_ops)} core operations never completed",
                   tuple(e.seq for e in open_ops))
