"""Atomic read/write register replicated over all processes.

Operations run in two quorum phases.  The query phase collects (val, tag)
acknowledgements from a majority; the propagate phase publishes the chosen
(val, tag) and waits until a majority acknowledge it.  There are no
point-to-point replies: every request and acknowledgement lives in arrays that
each process gossips in full, so the state size depends on n only.

Tags are (counter, writer) pairs compared lexicographically.  A process only
ever replaces its local (val, tag) with a strictly larger tag.
"""

from __future__ import annotations

from typing import Any, Protocol

from .synchronizer import ContractError

IDLE = "IDLE"
WR_QUERY, WR_PROPAGATE = "WR_QUERY", "WR_PROPAGATE"
RD_QUERY, RD_PROPAGATE = "RD_QUERY", "RD_PROPAGATE"

Tag = tuple[int, int]
ZERO_TAG: Tag = (0, 0)


class Host(Protocol):
    def responded(self, op: str, value: Any, tag: Tag, seq: int) -> None: ...


class Register:
    def __init__(self, pid: int, n: int, host: Host, literal_tags: bool = False):
        self.pid = pid
        # literal_tags: overwrite the local tag at quorum time even if it
        # shrinks; kept only to reproduce the anomaly this causes
        self.literal_tags = literal_tags
        self.n = n
        self.host = host
        self.val: Any = 0
        self.tag: Tag = ZERO_TAG
        self.seq = 0
        self.status = IDLE
        self.wr_val: Any = None
        self.rd_val: Any = None
        self.op_tag: Tag | None = None     # tag of the running operation
        self.query = [0] * n
        self.query_ack = [[(0, ZERO_TAG, 0)] * n for _ in range(n)]
        self.write = [(0, ZERO_TAG, 0)] * n
        self.write_ack = [[0] * n for _ in range(n)]

    # -- operations ----------------------------------------------------------

    def _begin(self, status: str) -> int:
        if self.status != IDLE:
            raise ContractError(f"p{self.pid} invoked an operation while {self.status}")
        self.seq += 1
        self.query[self.pid - 1] = self.seq
        self.status = status
        self.op_tag = None
        return self.seq

    def read(self) -> int:
        seq = self._begin(RD_QUERY)
        self.step()
        return seq

    def write_value(self, v: Any) -> int:
        if self.status != IDLE:
            raise ContractError(f"p{self.pid} invoked an operation while {self.status}")
        self.wr_val = v
        seq = self._begin(WR_QUERY)
        self.step()
        return seq

    # -- gossip --------------------------------------------------------------

    def snapshot(self) -> tuple:
        return (tuple(self.query),
                tuple(tuple(r) for r in self.query_ack),
                tuple(self.write),
                tuple(tuple(r) for r in self.write_ack))

    def on_state(self, msg: tuple) -> None:
        q, r, w, x = msg
        n = self.n
        query, write = self.query, self.write
        for j in range(n):
            if q[j] > query[j]:
                query[j] = q[j]
            if w[j][2] > write[j][2]:
                write[j] = w[j]
            mine_r, theirs_r = self.query_ack[j], r[j]
            mine_x, theirs_x = self.write_ack[j], x[j]
            for k in range(n):
                if theirs_r[k][2] > mine_r[k][2]:
                    mine_r[k] = theirs_r[k]
                if theirs_x[k] > mine_x[k]:
                    mine_x[k] = theirs_x[k]
        self.step()

    # -- guarded rules -------------------------------------------------------

    def step(self) -> None:
        while (self._ack_queries() | self._apply_writes()
               or self._query_quorum() or self._propagate_quorum()):
            pass

    def _ack_queries(self) -> bool:
        row = self.query_ack[self.pid - 1]
        fired = False
        for j, s in enumerate(self.query):
            if s > row[j][2]:
                row[j] = (self.val, self.tag, s)
                fired = True
        return fired

    def _apply_writes(self) -> bool:
        row = self.write_ack[self.pid - 1]
        fired = False
        for j, (v, t, s) in enumerate(self.write):
            if s > row[j]:
                if t > self.tag:
                    self.val, self.tag = v, t
                row[j] = s
                fired = True
        return fired

    def _query_acks(self) -> list[tuple]:
        i, seq = self.pid - 1, self.seq
        acks = [self.query_ack[j][i] for j in range(self.n)]
        return [a for a in acks if a[2] == seq]

    def _query_quorum(self) -> bool:
        if self.status not in (RD_QUERY, WR_QUERY):
            return False
        acks = self._query_acks()
        if 2 * len(acks) <= self.n:
            return False
        best = max(acks, key=lambda a: a[1])
        if self.status == RD_QUERY:
            value, tag = best[0], best[1]
            self.rd_val = value
            self.status = RD_PROPAGATE
        else:
            value, tag = self.wr_val, (best[1][0] + 1, self.pid)
            self.status = WR_PROPAGATE
        if tag > self.tag or self.literal_tags:
            self.val, self.tag = value, tag
        self.op_tag = tag
        self.write[self.pid - 1] = (value, tag, self.seq)
        return True

    def _propagate_quorum(self) -> bool:
        if self.status not in (RD_PROPAGATE, WR_PROPAGATE):
            return False
        i, seq = self.pid - 1, self.seq
        acked = sum(1 for j in range(self.n) if self.write_ack[j][i] == seq)
        if 2 * acked <= self.n:
            return False
        op = "read" if self.status == RD_PROPAGATE else "write"
        value = self.rd_val if op == "read" else "ACK"
        self.status = IDLE
        self.host.responded(op, value, self.op_tag, seq)
        return True
