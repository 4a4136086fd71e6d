from hypothesis import given, settings
from hypothesis import strategies as st

from flakysim.rfc import Op, RegisterFromConsensus


class Log:
    """Stand-in for per-slot consensus: the first proposal for a slot wins."""

    def __init__(self, n):
        self.decided = {}
        self.responses = []
        self.nodes = {p: RegisterFromConsensus(p, self._host(p)) for p in range(1, n + 1)}

    def _host(self, p):
        log = self

        class Host:
            def propose(self, slot, op):
                log.decided.setdefault(slot, op)

            def responded(self, op, value, slot):
                log.responses.append((p, op, value, slot))
        return Host()

    def feed(self, p, upto=None):
        node = self.nodes[p]
        while node.idx in self.decided and (upto is None or node.idx < upto):
            node.on_decide(node.idx, tuple(self.decided[node.idx]))


def test_solo_write_takes_slot_zero():
    log = Log(3)
    op = log.nodes[1].invoke("write", 3)
    assert log.decided[0] == op == Op(1, 1, "write", 3)
    log.feed(1)
    assert log.responses == [(1, op, "ACK", 0)]


def test_read_sees_earlier_decided_write():
    log = Log(3)
    log.nodes[1].invoke("write", 3)
    log.feed(1)
    log.nodes[2].invoke("read")
    log.feed(2)
    assert log.responses[-1][2:] == (3, 1)


def test_read_before_any_write_returns_zero():
    log = Log(2)
    log.nodes[2].invoke("read")
    log.feed(2)
    assert log.responses == [(2, Op(2, 1, "read", None), 0, 0)]


def test_losing_a_slot_reproposes_in_the_next():
    log = Log(3)
    mine = log.nodes[2].invoke("write", 5)
    log.decided.clear()
    log.decided[0] = Op(1, 1, "write", 9)      # someone else won slot 0
    log.feed(2, upto=1)
    assert log.nodes[2].val == 9
    assert log.decided[1] == mine
    log.feed(2)
    assert log.responses == [(2, mine, "ACK", 1)]


def test_own_read_responds_with_current_value():
    log = Log(2)
    node = log.nodes[1]
    node.val = 5
    op = node.invoke("read")
    node.on_decide(0, tuple(op))
    assert log.responses == [(1, op, 5, 0)]


def test_decisions_for_later_slots_wait_their_turn():
    log = Log(2)
    node = log.nodes[1]
    node.on_decide(1, (2, 1, "write", 8))
    assert node.idx == 0 and node.log == []
    node.on_decide(0, (2, 2, "write", 4))
    assert node.idx == 2 and node.val == 8


def test_identical_payloads_from_distinct_invocations_differ():
    assert Op(1, 1, "write", 3) != Op(1, 2, "write", 3)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 3), st.sampled_from(["read", "write"])), max_size=12),
       st.randoms())
def test_replicas_replay_one_sequential_history(plan, rnd):
    log = Log(3)
    value = 0
    for p, kind in plan:
        node = log.nodes[p]
        if node.op is None:
            if kind == "write":
                value += 1
                node.invoke("write", value)
            else:
                node.invoke("read")
        log.feed(rnd.randint(1, 3))
    while any(log.nodes[p].idx < len(log.decided) for p in (1, 2, 3)):
        for p in (1, 2, 3):
            log.feed(p)
    logs = [log.nodes[p].log for p in (1, 2, 3)]
    assert logs[0] == logs[1] == logs[2]
    # responses agree with a sequential register run over the decided log
    current, expect = 0, {}
    for slot, op in enumerate(logs[0]):
        if op.kind == "write":
            current = op.arg
            expect[op] = "ACK"
        else:
            expect[op] = current
    for p, op, got, slot in log.responses:
        assert logs[0][slot] == op
        assert got == expect[op]
