"""Scenario files: schema, validation and conversion to simulator inputs.

Scenarios are YAML documents checked against pydantic models.  Unknown keys are
rejected and every error carries the path of the offending field.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Literal, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from . import simnet
from .topology import (FailurePattern, TopologyError, TopologyGraph, connected_core,
                       diameter, residual_graph)

SCENARIO_VERSION = 1
BUNDLED_DIR = Path(__file__).parent / "scenarios"
LIVENESS_CHECKS = frozenset({"startup", "progress", "liveness", "register_liveness"})


class ScenarioError(ValueError):
    """A scenario failed validation; the message names the field path."""


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class FailurePatternSpec(_Model):
    crashed: list[int] = []
    faulty_channels: list[tuple[int, int]] = []


class RuleSpec(_Model):
    action: Literal["drop", "deliver"] = "drop"
    kinds: list[str] | None = None
    senders: list[int] | None = None
    receivers: list[int] | None = None
    after: int | None = None
    before: int | None = None
    delay: int | None = Field(default=None, ge=1)


class PolicySpec(_Model):
    rules: list[RuleSpec] = []
    default: Literal["drop", "deliver"] = "drop"


ChannelKind = Literal["reliable", "eventually_reliable", "disconnected", "flaky"]


class OverrideSpec(_Model):
    channel: tuple[int, int]
    kind: ChannelKind
    drop_rate: float | None = Field(default=None, ge=0, le=1)
    stabilize_at: int | None = Field(default=None, ge=0)
    policy: PolicySpec | None = None


class ChannelsSpec(_Model):
    correct: Literal["reliable", "eventually_reliable"] = "reliable"
    faulty: Literal["disconnected", "flaky"] = "disconnected"
    drop_rate: float = Field(default=0.5, ge=0, le=1)
    stabilize_at: int | None = Field(default=None, ge=0)
    policy: PolicySpec | None = None
    overrides: list[OverrideSpec] = []


class SynchronySpec(_Model):
    mode: Literal["partial", "async"] = "partial"
    gst: int = Field(default=0, ge=0)
    delta: int = Field(default=10, ge=1)
    pre_gst_max_delay: int | None = Field(default=None, ge=1)
    pre_gst_delivery: Literal["bounded", "park"] = "bounded"
    max_drift: int = Field(default=10, ge=1)


class ProposalSpec(_Model):
    at: int = Field(default=0, ge=0)
    value: int


class OpSpec(_Model):
    op: Literal["read", "write"]
    value: int | None = None
    at: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _value_for_writes(self):
        if self.op == "write" and self.value is None:
            raise ValueError("write needs a value")
        if self.op == "read" and self.value is not None:
            raise ValueError("read takes no value")
        return self


class WorkloadSpec(_Model):
    proposals: dict[int, ProposalSpec] = {}
    ops: dict[int, list[OpSpec]] = {}
    think: int = Field(default=0, ge=0)    # pause between a response and the next op


class RogueAdvanceSpec(_Model):
    process: int
    start: int = Field(ge=0)
    period: int = Field(ge=1)


class AdversarySpec(_Model):
    rogue_advance: RogueAdvanceSpec | None = None


class TopologySpec(_Model):
    edges: list[tuple[int, int]]


class StopEarlySpec(_Model):
    settle: int = Field(default=0, ge=0)


class Scenario(_Model):
    version: Literal[1] = 1
    name: str = "unnamed"
    protocol: Literal["consensus", "register", "rfc"] = "consensus"
    n: int = Field(ge=1, le=64)
    topology: Union[Literal["complete"], TopologySpec] = "complete"
    failure_pattern: FailurePatternSpec = FailurePatternSpec()
    crash_times: dict[int, int] = {}
    channels: ChannelsSpec = ChannelsSpec()
    synchrony: SynchronySpec = SynchronySpec()
    rho: int = Field(default=5, ge=1)
    gamma: int = Field(default=10, ge=1)
    initial_timeout: int = Field(default=5, ge=1)
    workload: WorkloadSpec = WorkloadSpec()
    adversary: AdversarySpec = AdversarySpec()
    mutations: list[Literal["no_enter_rebroadcast", "no_periodic_wish", "weak_threshold"]] = []
    checks: list[str] = []
    horizon: int = Field(default=5000, ge=0)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    stop_early: StopEarlySpec | None = None
    slots: int = Field(default=8, ge=1)

    @model_validator(mode="after")
    def _consistent(self):
        n = self.n
        ids = range(1, n + 1)

        def check_pid(p, where):
            if p not in ids:
                raise ValueError(f"{where}: process {p} outside 1..{n}")

        try:
            pattern = FailurePattern(self.failure_pattern.crashed,
                                     self.failure_pattern.faulty_channels)
            pattern.validate_for(n)
        except TopologyError as exc:
            raise ValueError(f"failure_pattern: {exc}") from None
        if isinstance(self.topology, TopologySpec):
            for p, q in self.topology.edges:
                check_pid(p, "topology.edges")
                check_pid(q, "topology.edges")
        for p in self.crash_times:
            if p not in pattern.crashed:
                raise ValueError(f"crash_times: process {p} is not in failure_pattern.crashed")
        for p in self.workload.proposals:
            check_pid(p, "workload.proposals")
        for p in self.workload.ops:
            check_pid(p, "workload.ops")
        if self.adversary.rogue_advance is not None:
            check_pid(self.adversary.rogue_advance.process, "adversary.rogue_advance.process")
        faulty = self.faulty_set()
        for k, ov in enumerate(self.channels.overrides):
            p, q = ov.channel
            check_pid(p, f"channels.overrides.{k}.channel")
            check_pid(q, f"channels.overrides.{k}.channel")
            if p == q:
                raise ValueError(f"channels.overrides.{k}: self-channels are always reliable")
            is_correct_kind = ov.kind in ("reliable", "eventually_reliable")
            if ((p, q) in faulty) == is_correct_kind:
                expect = "faulty" if (p, q) in faulty else "correct"
                raise ValueError(
                    f"channels.overrides.{k}: channel ({p},{q}) is {expect} under the "
                    f"failure pattern and topology but was given kind {ov.kind!r}")
        unknown = set(self.checks) - set(KNOWN_CHECKS)
        if unknown:
            raise ValueError(f"checks: unknown check names {sorted(unknown)}")
        return self

    # -- derived quantities --------------------------------------------------

    def graph(self) -> TopologyGraph:
        if self.topology == "complete":
            return TopologyGraph.complete(self.n)
        return TopologyGraph(range(1, self.n + 1), self.topology.edges)

    def pattern(self) -> FailurePattern:
        return FailurePattern(self.failure_pattern.crashed, self.failure_pattern.faulty_channels)

    def faulty_set(self) -> set[tuple[int, int]]:
        """Channels that are faulty: listed in the pattern or absent from the topology."""
        out = {tuple(c) for c in self.failure_pattern.faulty_channels}
        if isinstance(self.topology, TopologySpec):
            edges = {tuple(e) for e in self.topology.edges}
            crashed = set(self.failure_pattern.crashed)
            for p in range(1, self.n + 1):
                for q in range(1, self.n + 1):
                    if p != q and (p, q) not in edges and p not in crashed and q not in crashed:
                        out.add((p, q))
        return out

    def core(self) -> frozenset[int] | None:
        return connected_core(self.graph(), self.pattern(), self.n)

    def core_diameter(self) -> int | None:
        s = self.core()
        return None if s is None else diameter(residual_graph(self.graph(), self.pattern()), s)

    def effective_gst(self) -> int | None:
        """GST, pushed later by any eventually reliable channel that stabilises after it."""
        if self.synchrony.mode == "async":
            return None
        gst = self.synchrony.gst
        ch = self.channels
        if ch.correct == "eventually_reliable" and ch.stabilize_at is not None:
            gst = max(gst, ch.stabilize_at)
        for ov in ch.overrides:
            if ov.kind == "eventually_reliable" and ov.stabilize_at is not None:
                gst = max(gst, ov.stabilize_at)
        return gst

    # -- conversion ----------------------------------------------------------

    def _policy(self, spec: PolicySpec | None, rate: float):
        if spec is None:
            return simnet.SeededRandom(rate)
        rules = tuple(
            simnet.Rule(r.action,
                        None if r.kinds is None else frozenset(r.kinds),
                        None if r.senders is None else frozenset(r.senders),
                        None if r.receivers is None else frozenset(r.receivers),
                        r.after, r.before, r.delay)
            for r in spec.rules)
        return simnet.Scripted(rules, spec.default)

    def _channel(self, kind: str, drop_rate: float, stabilize_at, policy):
        gst = self.synchrony.gst if self.synchrony.mode == "partial" else None
        if kind == "reliable":
            return simnet.Reliable()
        if kind == "eventually_reliable":
            return simnet.EventuallyReliable(stabilize_at if stabilize_at is not None else gst,
                                             drop_rate)
        if kind == "disconnected":
            return simnet.Disconnected()
        return simnet.Flaky(self._policy(policy, drop_rate))

    def net_config(self, seed: int | None = None) -> simnet.NetConfig:
        ch = self.channels
        faulty = self.faulty_set()
        chans = {}
        for p in range(1, self.n + 1):
            for q in range(1, self.n + 1):
                if p == q:
                    continue
                kind = ch.faulty if (p, q) in faulty else ch.correct
                chans[(p, q)] = self._channel(kind, ch.drop_rate, ch.stabilize_at, ch.policy)
        for ov in ch.overrides:
            rate = ov.drop_rate if ov.drop_rate is not None else ch.drop_rate
            chans[tuple(ov.channel)] = self._channel(ov.kind, rate, ov.stabilize_at, ov.policy)
        sy = self.synchrony
        sync = simnet.Synchrony(gst=sy.gst if sy.mode == "partial" else None, delta=sy.delta,
                                pre_gst_max_delay=sy.pre_gst_max_delay,
                                pre_gst_delivery=sy.pre_gst_delivery, max_drift=sy.max_drift)
        crashes = {p: self.crash_times.get(p, 0) for p in self.failure_pattern.crashed}
        return simnet.NetConfig(self.n, sync, chans, crashes,
                                self.seed if seed is None else seed)


KNOWN_CHECKS = (
    "monotonicity", "validity", "bounded_entry", "startup", "progress",
    "consensus_safety", "liveness", "decision_bound",
    "linearizable", "register_liveness", "safe_register",
)


# -- timing bounds -----------------------------------------------------------

def decision_bound(delta: int, rho: int, diam: int) -> int:
    """d + 3(delta + rho)·diameter with d = diameter·delta."""
    return diam * delta + 3 * (delta + rho) * diam


def escalation_allowance(initial_timeout: int, gamma: int, bound: int) -> int:
    """Total timer time spent before the timeout first exceeds ``bound``."""
    k = 0 if initial_timeout > bound else math.floor((bound - initial_timeout) / gamma) + 1
    return sum(initial_timeout + j * gamma for j in range(k + 1))


def liveness_bound(sc: Scenario) -> int | None:
    """Time by which every core member should have decided, or None if undefined."""
    gst = sc.effective_gst()
    diam = sc.core_diameter()
    if gst is None or diam is None:
        return None
    b = decision_bound(sc.synchrony.delta, sc.rho, diam)
    return gst + 20 * b + sc.n * escalation_allowance(sc.initial_timeout, sc.gamma, b)


# -- loading -----------------------------------------------------------------

def _format_errors(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(x) for x in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def parse_scenario(data: Any, check_horizon: bool = True) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("<root>: scenario must be a mapping")
    try:
        sc = Scenario.model_validate(data)
    except ValidationError as exc:
        raise ScenarioError(_format_errors(exc)) from None
    if check_horizon and LIVENESS_CHECKS & set(sc.checks):
        bound = liveness_bound(sc)
        if bound is not None and sc.horizon < bound:
            raise ScenarioError(
                f"horizon: {sc.horizon} is below the liveness sufficiency bound {bound} "
                "required by the requested liveness checks")
    return sc


def load_scenario(path: str | Path, check_horizon: bool = True) -> Scenario:
    p = Path(path)
    if not p.exists() and (BUNDLED_DIR / f"{path}.yaml").exists():
        p = BUNDLED_DIR / f"{path}.yaml"
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path}: invalid YAML: {exc}") from None
    return parse_scenario(data, check_horizon)


def bundled_scenarios() -> list[str]:
    return sorted(p.stem for p in BUNDLED_DIR.glob("*.yaml"))
