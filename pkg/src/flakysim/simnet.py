"""Deterministic discrete-event network simulator.

Time is an integer number of ticks.  Every random choice comes from a stream
keyed by the run seed plus a fixed identity (a channel, a process), so a run is
a pure function of its configuration and seed.

Channels follow four classes: reliable, eventually reliable, disconnected and
flaky.  Under partial synchrony a message on a delivering channel that is sent
at time ``t`` arrives by ``max(t, gst) + delta``; before GST local clocks run
slow by a per-process stretch factor.
"""

from __future__ import annotations

import heapq
import math
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Protocol

from .trace import Trace, TraceEvent

# heap entry tags
_CRASH, _START, _DELIVER, _TIMER, _CALL = range(5)


# -- drop policies ---------------------------------------------------------

@dataclass(frozen=True)
class SeededRandom:
    """Drop each message independently with probability ``rate``."""
    rate: float

    def decide(self, meta: "MessageMeta", u: float) -> tuple[bool, int | None]:
        return u < self.rate, None


@dataclass(frozen=True)
class Rule:
    action: str = "drop"                    # "drop" | "deliver"
    kinds: frozenset[str] | None = None
    senders: frozenset[int] | None = None
    receivers: frozenset[int] | None = None
    after: int | None = None                # send time >= after
    before: int | None = None               # send time < before
    delay: int | None = None

    def matches(self, m: "MessageMeta") -> bool:
        return ((self.kinds is None or m.kind in self.kinds)
                and (self.senders is None or m.sender in self.senders)
                and (self.receivers is None or m.receiver in self.receivers)
                and (self.after is None or m.send_time >= self.after)
                and (self.before is None or m.send_time < self.before))


@dataclass(frozen=True)
class Scripted:
    """First matching rule wins; unmatched messages get ``default``."""
    rules: tuple[Rule, ...]
    default: str = "drop"

    def decide(self, meta: "MessageMeta", u: float) -> tuple[bool, int | None]:
        for rule in self.rules:
            if rule.matches(meta):
                return rule.action == "drop", rule.delay
        return self.default == "drop", None


# -- channel classes -------------------------------------------------------

@dataclass(frozen=True)
class Reliable:
    correct = True


@dataclass(frozen=True)
class EventuallyReliable:
    stabilize_at: int | None          # None: never before GST-less horizon
    drop_rate: float = 0.0            # loss before stabilisation
    correct = True


@dataclass(frozen=True)
class Disconnected:
    correct = False


@dataclass(frozen=True)
class Flaky:
    policy: SeededRandom | Scripted
    correct = False


ChannelClass = Reliable | EventuallyReliable | Disconnected | Flaky


@dataclass(frozen=True)
class MessageMeta:
    sender: int
    receiver: int
    kind: str
    send_time: int


@dataclass(frozen=True)
class Synchrony:
    """``gst=None`` selects the asynchronous model."""
    gst: int | None = 0
    delta: int = 10
    pre_gst_max_delay: int | None = None   # default 10 * delta
    pre_gst_delivery: str = "bounded"      # "bounded" | "park"
    max_drift: int = 10

    @property
    def partial(self) -> bool:
        return self.gst is not None

    @property
    def pre_max(self) -> int:
        return self.pre_gst_max_delay if self.pre_gst_max_delay is not None else 10 * self.delta


@dataclass
class NetConfig:
    n: int
    synchrony: Synchrony
    channels: dict[tuple[int, int], ChannelClass]
    crash_times: dict[int, int] = field(default_factory=dict)
    seed: int = 0


# -- process interface -----------------------------------------------------

class Node(Protocol):
    pid: int

    def start(self, sim: "Simulator") -> None: ...
    def on_message(self, sim: "Simulator", src: int, msg: tuple) -> None: ...
    def on_timer(self, sim: "Simulator", name: str) -> None: ...


class LocalClock:
    """Maps nominal timer durations to simulated time for one process.

    Before GST the clock runs ``stretch`` times slower than real time; from GST
    on it is exact.  A timer that straddles GST finishes its remaining local
    duration at rate one.
    """

    def __init__(self, stretch: Fraction, gst: int | None):
        self.stretch = stretch
        self.gst = gst

    def fire_time(self, now: int, duration: int) -> int:
        gst = self.gst
        if gst is not None and now >= gst:
            return now + duration
        stretched = now + duration * self.stretch
        if gst is None or stretched <= gst:
            return math.ceil(stretched)
        elapsed_local = Fraction(gst - now) / self.stretch
        return gst + math.ceil(duration - elapsed_local)


class Simulator:
    """Single-threaded event loop over a fixed set of nodes."""

    def __init__(self, config: NetConfig, nodes: dict[int, Node], header: dict | None = None):
        self.config = config
        self.nodes = nodes
        self.n = config.n
        self.header = dict(header or {})
        self.now = 0
        self.crashed: set[int] = set()
        self.events: list[TraceEvent] = []
        self._heap: list[tuple] = []
        self._hseq = 0
        self._msg_id = 0
        self._local: deque[tuple[int, int, tuple]] = deque()
        self._timer_gen: dict[tuple[int, str], int] = {}
        self._calls: list[Callable[[], None]] = []
        self._stopped = False
        sync = config.synchrony
        self._gst = sync.gst
        self._delta = sync.delta
        self._pre_max = sync.pre_max
        self._park = sync.pre_gst_delivery == "park"

        self._chan_rng = {}
        for p in range(1, self.n + 1):
            for q in range(1, self.n + 1):
                if p != q:
                    self._chan_rng[(p, q)] = random.Random(f"{config.seed}/chan/{p}/{q}")
        self.clocks = {}
        for p in range(1, self.n + 1):
            u = random.Random(f"{config.seed}/drift/{p}").random()
            stretch = Fraction(round(100 + u * 100 * (sync.max_drift - 1)), 100)
            self.clocks[p] = LocalClock(stretch, sync.gst)

        for p, t in sorted(config.crash_times.items()):
            self._push(t, _CRASH, p, None, None)
        for p in sorted(nodes):
            self._push(0, _START, p, None, None)

    # -- scheduling ---------------------------------------------------------

    def _push(self, t: int, tag: int, a, b, c) -> None:
        heapq.heappush(self._heap, (t, self._hseq, tag, a, b, c))
        self._hseq += 1

    def record(self, pid: int, kind: str, data: dict) -> None:
        self.events.append(TraceEvent(self.now, len(self.events), pid, kind, data))

    def call_at(self, t: int, pid: int, fn: Callable[[], None]) -> None:
        """Run ``fn`` at time ``t`` unless ``pid`` has crashed by then."""
        self._calls.append(fn)
        self._push(t, _CALL, pid, len(self._calls) - 1, None)

    def set_timer(self, pid: int, name: str, duration: int, record: bool = True) -> None:
        key = (pid, name)
        gen = self._timer_gen.get(key, 0) + 1
        self._timer_gen[key] = gen
        fire = self.clocks[pid].fire_time(self.now, duration)
        if record:
            self.record(pid, "TimerSet", {"timer": name, "duration": duration, "fire_at": fire})
        self._push(fire, _TIMER, pid, name, (gen, record))

    def cancel_timer(self, pid: int, name: str) -> None:
        key = (pid, name)
        self._timer_gen[key] = self._timer_gen.get(key, 0) + 1

    def stop(self) -> None:
        self._stopped = True

    # -- messaging ----------------------------------------------------------

    def broadcast(self, src: int, msg: tuple) -> None:
        """Send ``msg`` = (kind, slot, body) to every process, self included.

        The copy to ``src`` itself is handled later in the current step, once
        the running handler has returned, and is not recorded.
        """
        self._msg_id += 1
        mid = self._msg_id
        kind = msg[0]
        self.record(src, "Send", {"msg": mid, "kind": kind, "slot": msg[1], "body": msg[2]})
        now = self.now
        for dst in range(1, self.n + 1):
            if dst == src:
                self._local.append((src, dst, msg))
                continue
            self._route(src, dst, msg, kind, mid, now)

    def _route(self, src: int, dst: int, msg: tuple, kind: str, mid: int, now: int) -> None:
        rng = self._chan_rng[(src, dst)]
        u_drop = rng.random()
        u_delay = rng.random()
        if dst in self.crashed:
            self.record(src, "Drop", {"msg": mid, "to": dst, "reason": "crashed"})
            return
        cls = self.config.channels.get((src, dst))
        forced_delay = None
        if isinstance(cls, Disconnected):
            drop, reason = True, "disconnected"
        elif isinstance(cls, Flaky):
            drop, forced_delay = cls.policy.decide(MessageMeta(src, dst, kind, now), u_drop)
            reason = "flaky"
        elif isinstance(cls, EventuallyReliable):
            st = cls.stabilize_at
            drop = (st is None or now < st) and u_drop < cls.drop_rate
            reason = "unstable"
        else:
            drop, reason = False, ""
        if drop:
            self.record(src, "Drop", {"msg": mid, "to": dst, "reason": reason})
            return
        at = now + self._delay(now, u_delay, forced_delay, cls is None or cls.correct)
        self._push(at, _DELIVER, src, dst, (mid, msg))

    def _delay(self, now: int, u: float, forced: int | None, correct: bool) -> int:
        gst = self._gst
        if gst is not None and now >= gst:
            d = forced if forced is not None else 1 + int(u * self._delta)
            return max(1, min(d, self._delta)) if correct else max(1, d)
        if gst is not None and self._park:
            base = gst - now
            return base + 1 + int(u * self._delta) if forced is None else max(1, forced)
        d = forced if forced is not None else 1 + int(u * self._pre_max)
        d = max(1, d)
        if gst is not None and correct:
            d = min(d, gst + self._delta - now)
        return d

    def _drain(self) -> None:
        local = self._local
        while local:
            src, dst, msg = local.popleft()
            if dst not in self.crashed:
                self.nodes[dst].on_message(self, src, msg)

    # -- main loop ----------------------------------------------------------

    def run_until(self, horizon: int, stop_when: Callable[["Simulator"], bool] | None = None) -> Trace:
        heap = self._heap
        crashed = self.crashed
        nodes = self.nodes
        end = horizon
        while heap and heap[0][0] <= horizon and not self._stopped:
            t, _, tag, a, b, c = heapq.heappop(heap)
            self.now = t
            if tag == _DELIVER:
                mid, msg = c
                if b in crashed:
                    self.record(a, "Drop", {"msg": mid, "to": b, "reason": "crashed"})
                    continue
                self.record(b, "Deliver", {"msg": mid, "from": a})
                nodes[b].on_message(self, a, msg)
            elif tag == _TIMER:
                gen, rec = c
                if a in crashed or self._timer_gen.get((a, b)) != gen:
                    continue
                if rec:
                    self.record(a, "TimerFire", {"timer": b})
                nodes[a].on_timer(self, b)
            elif tag == _CALL:
                if a in crashed:
                    continue
                self._calls[b]()
            elif tag == _START:
                if a in crashed:
                    continue
                nodes[a].start(self)
            elif tag == _CRASH:
                if a not in crashed:
                    crashed.add(a)
                    self.record(a, "Crash", {})
            self._drain()
            if stop_when is not None and stop_when(self):
                end = t
                break
        if self._stopped:
            end = self.now
        header = dict(self.header)
        header["end_time"] = end
        return Trace(header, self.events)
