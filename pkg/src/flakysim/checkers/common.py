"""Verdict types and run parameters shared by the trace checkers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..scenario import decision_bound, escalation_allowance
from ..trace import Trace

PASS, VIOLATION, INCONCLUSIVE = "pass", "violation", "inconclusive"


@dataclass(frozen=True)
class Verdict:
    check: str
    status: str
    detail: str = ""
    events: tuple[int, ...] = ()     # seq numbers of witnessing trace events

    @property
    def ok(self) -> bool:
        return self.status != VIOLATION

    def to_dict(self) -> dict[str, Any]:
        return {"check": self.check, "status": self.status, "detail": self.detail,
                "events": list(self.events)}


@dataclass
class Report:
    verdicts: list[Verdict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(v.ok for v in self.verdicts)

    def by_check(self) -> dict[str, Verdict]:
        return {v.check: v for v in self.verdicts}

    def violations(self) -> list[Verdict]:
        return [v for v in self.verdicts if v.status == VIOLATION]

    def to_dict(self) -> dict[str, Any]:
        return {"ok": self.ok, "verdicts": [v.to_dict() for v in self.verdicts]}


@dataclass(frozen=True)
class Params:
    """Model parameters a checker needs, normally read from the trace header."""
    n: int
    core: frozenset[int] | None
    diameter: int | None
    gst: int | None              # effective GST; None for asynchronous runs
    delta: int
    rho: int
    gamma: int
    initial_timeout: int
    end_time: int
    protocol: str = "consensus"

    @classmethod
    def from_trace(cls, trace: Trace, **overrides) -> "Params":
        h = trace.header
        sc = h["scenario"]
        core = h.get("core")
        vals = dict(
            n=sc["n"],
            core=None if core is None else frozenset(core),
            diameter=h.get("diameter"),
            gst=h.get("effective_gst"),
            delta=sc["synchrony"]["delta"],
            rho=sc["rho"],
            gamma=sc["gamma"],
            initial_timeout=sc["initial_timeout"],
            end_time=h["end_time"],
            protocol=sc.get("protocol", "consensus"),
        )
        vals.update(overrides)
        return cls(**vals)

    @property
    def entry_spread(self) -> int:
        """The Bounded Entry constant: diameter times delta."""
        return (self.diameter or 0) * self.delta

    @property
    def decision_bound(self) -> int:
        return decision_bound(self.delta, self.rho, self.diameter or 0)

    @property
    def guard_window(self) -> int:
        """Quiet time after which a missing 'eventually' is reported as a violation."""
        diam = self.diameter or 0
        return 2 * ((self.rho + self.delta) * (diam + 1) + self.rho)

    @property
    def liveness_bound(self) -> int | None:
        if self.gst is None or self.diameter is None:
            return None
        b = self.decision_bound
        return self.gst + 20 * b + self.n * escalation_allowance(self.initial_timeout,
                                                                 self.gamma, b)
