"""A safe register built from a sequence of consensus instances.

Processes agree, slot by slot, on which operation comes next and replay the
decided log against a local copy of the register.  An operation is identified
by (invoker, per-invoker number, kind, argument) so two invocations with the
same payload never compare equal.
"""

from __future__ import annotations

from typing import Any, NamedTuple, Protocol

from .synchronizer import ContractError


class Op(NamedTuple):
    invoker: int
    number: int
    kind: str          # "read" | "write"
    arg: Any = None


class Host(Protocol):
    def propose(self, slot: int, op: Op) -> None: ...
    def responded(self, op: Op, value: Any, slot: int) -> None: ...


class RegisterFromConsensus:
    def __init__(self, pid: int, host: Host):
        self.pid = pid
        self.host = host
        self.idx = 0
        self.val: Any = None          # read back as 0 while no write is decided
        self.op: Op | None = None
        self.log: list[Op] = []
        self._numbers = 0
        self._early: dict[int, Op] = {}

    def invoke(self, kind: str, arg: Any = None) -> Op:
        if self.op is not None:
            raise ContractError(f"p{self.pid} already has a pending operation")
        self._numbers += 1
        self.op = Op(self.pid, self._numbers, kind, arg)
        self.host.propose(self.idx, self.op)
        return self.op

    def on_decide(self, slot: int, decided: Any) -> None:
        """Feed a decision; decisions for later slots wait for their turn."""
        if slot < self.idx:
            return
        self._early.setdefault(slot, Op(*decided))
        while self.idx in self._early:
            self._apply(self._early.pop(self.idx))

    def _apply(self, decided: Op) -> None:
        slot = self.idx
        self.idx += 1
        self.log.append(decided)
        if decided.kind == "write":
            self.val = decided.arg
        if self.op is None:
            return
        if decided == self.op:
            op, self.op = self.op, None
            value = (0 if self.val is None else self.val) if op.kind == "read" else "ACK"
            self.host.responded(op, value, slot)
        else:
            self.host.propose(self.idx, self.op)
