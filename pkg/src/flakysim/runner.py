"""Wiring of protocol state machines into simulator nodes, and scenario runs.

Every node owns one periodic ``tick`` timer that drives all gossip (WISH and
STATE messages).  Messages are ``(kind, slot, body)`` triples; ``slot`` is 0
except for the consensus-backed register, which runs one consensus instance
per log slot.
"""

from __future__ import annotations

from typing import Any, Callable

from .consensus import Consensus
from .register import Register
from .rfc import Op, RegisterFromConsensus
from .scenario import Scenario
from .simnet import Simulator
from .synchronizer import Synchronizer
from .trace import Trace


class _Slot:
    """One synchronizer plus consensus instance, bound to a node and a slot."""

    def __init__(self, node: "_ConsensusBase", slot: int):
        sc = node.scenario
        self.node = node
        self.slot = slot
        self.timer = "decision" if slot == 0 and not node.multi else f"decision/{slot}"
        self.sync = Synchronizer(node.pid, sc.n, sc.mutations)
        self.cons = Consensus(node.pid, sc.n, sc.initial_timeout, sc.gamma, self)

    # consensus host interface
    def start_timer(self, duration: int) -> None:
        self.node.sim.set_timer(self.node.pid, self.timer, duration)

    def stop_timer(self) -> None:
        self.node.sim.cancel_timer(self.node.pid, self.timer)

    def advance(self, force: bool = False) -> None:
        sim, pid = self.node.sim, self.node.pid
        view = self.sync.curr_view
        payload = self.sync.advance(force)
        sim.record(pid, "Advance", {"view": view, "slot": self.slot})
        sim.broadcast(pid, ("WISH", self.slot, payload))

    def decided(self, value: Any) -> None:
        self.node.sim.record(self.node.pid, "Decide",
                             {"value": value, "view": self.cons.view, "slot": self.slot})
        self.node.on_decided(self.slot, value)

    def on_wish(self, body: tuple) -> None:
        entered, rebroadcast = self.sync.on_wish(body)
        if entered is None:
            return
        sim, pid = self.node.sim, self.node.pid
        sim.record(pid, "EnterView", {"view": entered, "slot": self.slot})
        self.cons.on_new_view(entered)
        if rebroadcast is not None:
            sim.broadcast(pid, ("WISH", self.slot, self.sync.snapshot()))

    def gossip(self) -> None:
        sim, pid = self.node.sim, self.node.pid
        wish = self.sync.periodic()
        if wish is not None:
            sim.broadcast(pid, ("WISH", self.slot, wish))
        sim.broadcast(pid, ("STATE", self.slot, self.cons.snapshot()))


class _ConsensusBase:
    multi = False

    def __init__(self, pid: int, scenario: Scenario):
        self.pid = pid
        self.scenario = scenario
        self.sim: Simulator | None = None
        self.slots: dict[int, _Slot] = {}

    def slot(self, k: int) -> _Slot | None:
        s = self.slots.get(k)
        if s is None and k < (self.scenario.slots if self.multi else 1):
            s = self.slots[k] = _Slot(self, k)
            s.advance()
        return s

    def start(self, sim: Simulator) -> None:
        self.sim = sim
        sim.set_timer(self.pid, "tick", self.scenario.rho, record=False)
        self.slot(0)

    def on_message(self, sim: Simulator, src: int, msg: tuple) -> None:
        kind, k, body = msg
        s = self.slot(k)
        if s is None:
            return
        if kind == "WISH":
            s.on_wish(body)
        elif kind == "STATE":
            s.cons.on_state(body)

    def on_timer(self, sim: Simulator, name: str) -> None:
        if name == "tick":
            for k in sorted(self.slots):
                self.slots[k].gossip()
            sim.set_timer(self.pid, "tick", self.scenario.rho, record=False)
            return
        k = 0 if name == "decision" else int(name.split("/")[1])
        self.slots[k].cons.on_timer_expire()

    def on_decided(self, slot: int, value: Any) -> None:
        pass


class ConsensusNode(_ConsensusBase):
    def propose(self, value: Any) -> None:
        self.sim.record(self.pid, "Propose", {"value": value, "slot": 0})
        self.slots[0].cons.propose(value)

    @property
    def decision(self) -> Any:
        return self.slots[0].cons.decision if 0 in self.slots else None

    def rogue_advance(self) -> None:
        """Adversarial advance that ignores the once-per-view rule."""
        self.slots[0].advance(force=True)


class RfcNode(_ConsensusBase):
    multi = True

    def __init__(self, pid: int, scenario: Scenario):
        super().__init__(pid, scenario)
        self.rfc = RegisterFromConsensus(pid, self)
        self.on_response: Callable[[], None] | None = None

    # register-from-consensus host interface
    def propose(self, slot: int, op: Op) -> None:
        s = self.slot(slot)
        if s is None:
            return      # out of slots: the operation stays pending
        self.sim.record(self.pid, "Propose", {"value": tuple(op), "slot": slot})
        s.cons.propose(tuple(op))

    def responded(self, op: Op, value: Any, slot: int) -> None:
        self.sim.record(self.pid, "Respond", {"op": op.kind, "value": value,
                                              "number": op.number, "slot": slot})
        if self.on_response is not None:
            self.on_response()

    def on_decided(self, slot: int, value: Any) -> None:
        self.rfc.on_decide(slot, value)
        self.slot(self.rfc.idx)

    def invoke(self, kind: str, arg: Any = None) -> None:
        number = self.rfc._numbers + 1
        self.sim.record(self.pid, "Invoke", {"op": kind, "arg": arg, "number": number})
        self.rfc.invoke(kind, arg)

    @property
    def idle(self) -> bool:
        return self.rfc.op is None


class RegisterNode:
    def __init__(self, pid: int, scenario: Scenario):
        self.pid = pid
        self.scenario = scenario
        self.sim: Simulator | None = None
        self.reg = Register(pid, scenario.n, self)
        self.on_response: Callable[[], None] | None = None

    def start(self, sim: Simulator) -> None:
        self.sim = sim
        sim.set_timer(self.pid, "tick", self.scenario.rho, record=False)

    def on_message(self, sim: Simulator, src: int, msg: tuple) -> None:
        if msg[0] == "STATE":
            self.reg.on_state(msg[2])

    def on_timer(self, sim: Simulator, name: str) -> None:
        if name == "tick":
            sim.broadcast(self.pid, ("STATE", 0, self.reg.snapshot()))
            sim.set_timer(self.pid, "tick", self.scenario.rho, record=False)

    def invoke(self, kind: str, arg: Any = None) -> None:
        seq = self.reg.seq + 1
        self.sim.record(self.pid, "Invoke", {"op": kind, "arg": arg, "seq": seq})
        if kind == "read":
            self.reg.read()
        else:
            self.reg.write_value(arg)

    def responded(self, op: str, value: Any, tag, seq: int) -> None:
        self.sim.record(self.pid, "Respond", {"op": op, "value": value, "tag": tag, "seq": seq})
        if self.on_response is not None:
            self.on_response()

    @property
    def idle(self) -> bool:
        return self.reg.status == "IDLE"


# -- workload ----------------------------------------------------------------

class _OpDriver:
    """Feeds one process its operations one at a time."""

    def __init__(self, sim: Simulator, node, ops, think: int):
        self.sim, self.node, self.ops, self.think = sim, node, list(ops), think
        self.next = 0
        node.on_response = self._responded

    @property
    def done(self) -> bool:
        return self.next >= len(self.ops) and self.node.idle

    def schedule(self, earliest: int) -> None:
        if self.next >= len(self.ops):
            return
        op = self.ops[self.next]
        self.sim.call_at(max(earliest, op.at), self.node.pid, self._fire)

    def _fire(self) -> None:
        op = self.ops[self.next]
        self.next += 1
        self.node.invoke(op.op, op.value)

    def _responded(self) -> None:
        self.schedule(self.sim.now + max(self.think, 1))


def _header(sc: Scenario, seed: int, horizon: int) -> dict:
    core = sc.core()
    return {
        "scenario": sc.model_dump(mode="json"),
        "seed": seed,
        "horizon": horizon,
        "core": None if core is None else sorted(core),
        "diameter": sc.core_diameter(),
        "effective_gst": sc.effective_gst(),
    }


def build_simulation(sc: Scenario, seed: int | None = None, horizon: int | None = None):
    """Create the simulator and nodes for a scenario; returns (sim, nodes, drivers)."""
    seed = sc.seed if seed is None else seed
    horizon = sc.horizon if horizon is None else horizon
    cls = {"consensus": ConsensusNode, "register": RegisterNode, "rfc": RfcNode}[sc.protocol]
    nodes = {p: cls(p, sc) for p in range(1, sc.n + 1)}
    sim = Simulator(sc.net_config(seed), nodes, _header(sc, seed, horizon))
    drivers = {}
    wl = sc.workload
    if sc.protocol == "consensus":
        for p, prop in sorted(wl.proposals.items()):
            node = nodes[p]
            sim.call_at(prop.at, p, lambda node=node, v=prop.value: node.propose(v))
        rogue = sc.adversary.rogue_advance
        if rogue is not None:
            node = nodes[rogue.process]

            def fire(node=node, period=rogue.period):
                node.rogue_advance()
                sim.call_at(sim.now + period, node.pid, fire)

            sim.call_at(rogue.start, rogue.process, fire)
    else:
        for p, ops in sorted(wl.ops.items()):
            d = drivers[p] = _OpDriver(sim, nodes[p], ops, wl.think)
            d.schedule(0)
    return sim, nodes, drivers


def _stop_condition(sc: Scenario, nodes, drivers) -> Callable[[Simulator], bool] | None:
    if sc.stop_early is None:
        return None
    core = sc.core()
    if core is None:
        return None
    settle = sc.stop_early.settle
    reached: list[int] = []
    if sc.protocol == "consensus":
        proposers = set(sc.workload.proposals)

        def finished() -> bool:
            return all(nodes[p].decision is not None for p in core if p in proposers)
    else:
        mine = [d for p, d in drivers.items() if p in core]

        def finished() -> bool:
            return all(d.done for d in mine)

    def stop_when(sim: Simulator) -> bool:
        if not reached:
            if not finished():
                return False
            reached.append(sim.now)
        return sim.now >= reached[0] + settle

    return stop_when


def run_scenario(sc: Scenario, seed: int | None = None, horizon: int | None = None) -> Trace:
    horizon = sc.horizon if horizon is None else horizon
    sim, nodes, drivers = build_simulation(sc, seed, horizon)
    return sim.run_until(horizon, _stop_condition(sc, nodes, drivers))
