"""View synchronizer state machine for a single process.

Each process keeps the highest view every process is known to wish for and
enters the largest view wished for by a majority.  Wishes spread by periodic
retransmission of the whole array, so they reach processes that have no direct
correct channel to the wisher.

The class is a plain transition system: methods update local state and return
what should be broadcast, leaving the sending to the caller.
"""

from __future__ import annotations

from typing import Iterable


class ContractError(RuntimeError):
    """A caller broke a usage precondition of a protocol object."""


# Deliberate defects used to check that the trace checkers catch bugs.
MUTATIONS = frozenset({"no_enter_rebroadcast", "no_periodic_wish", "weak_threshold"})


def majority_view(views: Iterable[int], n: int) -> int:
    """Largest v held by some entry such that more than n/2 entries are >= v.

    Equivalent to the element at index n // 2 of the array sorted descending.
    """
    ordered = sorted(views, reverse=True)
    return ordered[n // 2]


def majority_view_bruteforce(views: Iterable[int], n: int) -> int:
    vs = list(views)
    cands = [v for v in vs if 2 * sum(1 for w in vs if w >= v) > n]
    return max(cands)


class Synchronizer:
    def __init__(self, pid: int, n: int, mutations: Iterable[str] = ()):
        self.pid = pid
        self.n = n
        self.curr_view = 0
        self.views = [0] * n
        self.mutations = frozenset(mutations)
        unknown = self.mutations - MUTATIONS
        if unknown:
            raise ValueError(f"unknown mutations {sorted(unknown)}")
        # view from which advance was last called; guards the caller contract
        self._advanced_from: int | None = None
        if "weak_threshold" in self.mutations:
            self._rank = max(n // 2 - 1, 0)
        else:
            self._rank = n // 2

    def snapshot(self) -> tuple[int, ...]:
        return tuple(self.views)

    def advance(self, force: bool = False) -> tuple[int, ...]:
        """Wish to leave the current view.  Returns the WISH payload."""
        if self._advanced_from == self.curr_view and not force:
            raise ContractError(
                f"p{self.pid} called advance twice in view {self.curr_view}")
        self._advanced_from = self.curr_view
        self.views[self.pid - 1] = self.curr_view + 1
        return self.snapshot()

    def periodic(self) -> tuple[int, ...] | None:
        if "no_periodic_wish" in self.mutations:
            return None
        return self.snapshot()

    def on_wish(self, incoming: Iterable[int]) -> tuple[int | None, tuple[int, ...] | None]:
        """Merge a WISH.  Returns (view entered or None, payload to rebroadcast or None)."""
        views = self.views
        for j, v in enumerate(incoming):
            if v > views[j]:
                views[j] = v
        target = sorted(views, reverse=True)[self._rank]
        if target <= self.curr_view:
            return None, None
        self.curr_view = target
        if "no_enter_rebroadcast" in self.mutations:
            return target, None
        return target, self.snapshot()
