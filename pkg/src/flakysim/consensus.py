"""Single-decree consensus state machine run on top of the view synchronizer.

Processes gossip three arrays: the latest view-entry report of every process
(M1B), every leader's latest proposal (M2A) and every process's latest accepted
proposal (M2B).  The guarded rules are level-triggered, so they are
re-evaluated after every mutation until none applies.

Side effects go through a small host interface (timers, advance, decision
notification) so the machine can be driven without a simulator.
"""

from __future__ import annotations

from typing import Any, Protocol

from .synchronizer import ContractError

ENTERED, PROPOSED, ACCEPTED, DECIDED = "ENTERED", "PROPOSED", "ACCEPTED", "DECIDED"

Entry1B = tuple[int, int, Any]    # (view, cview, val)
Entry2 = tuple[int, Any]          # (view, val)


def leader(v: int, n: int) -> int:
    if v < 1:
        raise ValueError(f"views start at 1, got {v}")
    return (v - 1) % n + 1


class Host(Protocol):
    def start_timer(self, duration: int) -> None: ...
    def stop_timer(self) -> None: ...
    def advance(self) -> None: ...
    def decided(self, value: Any) -> None: ...


class Consensus:
    def __init__(self, pid: int, n: int, initial_timeout: int, gamma: int, host: Host):
        self.pid = pid
        self.n = n
        self.gamma = gamma
        self.host = host
        self.view = 0
        self.phase: str | None = None
        self.cview = 0
        self.val: Any = None
        self.my_proposal: Any = None
        self.timeout = initial_timeout
        self.m1b: list[Entry1B] = [(0, 0, None)] * n
        self.m2a: list[Entry2] = [(0, None)] * n
        self.m2b: list[Entry2] = [(0, None)] * n
        self.decision: Any = None       # latched result of propose
        self._proposed = False

    # -- operations ----------------------------------------------------------

    def propose(self, x: Any) -> None:
        if self._proposed:
            raise ContractError(f"p{self.pid} called propose twice")
        if x is None:
            raise ValueError("cannot propose the empty value")
        self._proposed = True
        self.my_proposal = x
        self.step()

    def on_new_view(self, v: int) -> None:
        if v <= self.view:
            raise ContractError(f"p{self.pid} entered view {v} after {self.view}")
        self.view = v
        self.host.start_timer(self.timeout)
        self.m1b[self.pid - 1] = (v, self.cview, self.val)
        self.phase = ENTERED
        self.step()

    def on_timer_expire(self) -> None:
        self.timeout += self.gamma
        self.host.advance()

    def snapshot(self) -> tuple[tuple, tuple, tuple]:
        return (tuple(self.m1b), tuple(self.m2a), tuple(self.m2b))

    def on_state(self, msg: tuple[tuple, tuple, tuple]) -> None:
        v1b, v2a, v2b = msg
        m1b, m2a, m2b = self.m1b, self.m2a, self.m2b
        for j in range(self.n):
            if v1b[j][0] > m1b[j][0]:
                m1b[j] = v1b[j]
            if v2a[j][0] > m2a[j][0]:
                m2a[j] = v2a[j]
            if v2b[j][0] > m2b[j][0]:
                m2b[j] = v2b[j]
        self.step()

    # -- guarded rules -------------------------------------------------------

    def step(self) -> None:
        """Fire enabled rules in the order decide, accept, propose until quiet."""
        while self.try_decide() or self.try_accept() or self.try_propose():
            pass

    def try_propose(self) -> bool:
        if self.phase != ENTERED or leader(self.view, self.n) != self.pid:
            return False
        view = self.view
        quorum = [e for e in self.m1b if e[0] == view]
        if 2 * len(quorum) <= self.n:
            return False
        with_val = [e for e in quorum if e[2] is not None]
        if not with_val:
            if self.my_proposal is None:
                return False
            chosen = self.my_proposal
        else:
            # first entry with the highest cview; all such entries agree
            best = max(e[1] for e in with_val)
            chosen = next(e[2] for e in with_val if e[1] == best)
        self.m2a[self.pid - 1] = (view, chosen)
        self.phase = PROPOSED
        return True

    def try_accept(self) -> bool:
        if self.phase not in (ENTERED, PROPOSED):
            return False
        entry = self.m2a[leader(self.view, self.n) - 1]
        if entry[0] != self.view:
            return False
        self.cview, self.val = entry
        self.m2b[self.pid - 1] = entry
        self.phase = ACCEPTED
        return True

    def try_decide(self) -> bool:
        if self.phase == DECIDED:
            return False
        counts: dict[Entry2, int] = {}
        for e in self.m2b:
            if e[0] >= self.view and e[0] >= 1:
                counts[e] = counts.get(e, 0) + 1
        for (v, x), c in counts.items():
            if 2 * c > self.n:
                self.val = x
                self.host.stop_timer()
                self.phase = DECIDED
                if self.decision is None:
                    self.decision = x
                self.host.decided(x)
                return True
        return False
