import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flakysim.consensus import ACCEPTED, DECIDED, ENTERED, PROPOSED, Consensus, leader
from flakysim.synchronizer import ContractError


class FakeHost:
    def __init__(self):
        self.calls = []

    def start_timer(self, d):
        self.calls.append(("start", d))

    def stop_timer(self):
        self.calls.append(("stop",))

    def advance(self):
        self.calls.append(("advance",))

    def decided(self, x):
        self.calls.append(("decided", x))


def node(pid=1, n=3, timeout=10, gamma=5):
    host = FakeHost()
    return Consensus(pid, n, timeout, gamma, host), host


@pytest.mark.parametrize("v,n,p", [(1, 3, 1), (4, 3, 1), (3, 3, 3), (5, 5, 5), (6, 5, 1)])
def test_leader_rotation(v, n, p):
    assert leader(v, n) == p


def test_leader_undefined_for_view_zero():
    with pytest.raises(ValueError):
        leader(0, 3)


def test_propose_before_any_view_only_records():
    c, host = node()
    c.propose(7)
    assert c.my_proposal == 7
    assert host.calls == []
    with pytest.raises(ContractError):
        c.propose(8)


def test_new_view_fills_own_1b_entry():
    c, host = node()
    c.on_new_view(1)
    assert c.m1b[0] == (1, 0, None)
    assert host.calls == [("start", 10)]
    assert c.phase == ENTERED


def test_new_view_reports_last_accepted_value():
    c, _ = node(pid=2)
    c.on_new_view(2)
    c.cview, c.val = 2, 9
    c.on_new_view(5)
    assert c.m1b[1] == (5, 2, 9)


def test_views_must_increase():
    c, _ = node()
    c.on_new_view(2)
    with pytest.raises(ContractError):
        c.on_new_view(2)


def test_timer_expiry_escalates_timeout_and_advances():
    c, host = node(timeout=10, gamma=5)
    c.on_timer_expire()
    assert c.timeout == 15
    assert host.calls == [("advance",)]
    for _ in range(3):
        c.on_timer_expire()
    assert c.timeout == 10 + 4 * 5


def test_leader_with_empty_quorum_proposes_own_value():
    c, _ = node()
    c.propose(7)
    c.on_new_view(1)
    c.on_state((((1, 0, None), (1, 0, None), (0, 0, None)), ((0, None),) * 3, ((0, None),) * 3))
    # proposes, then accepts its own proposal in the same step
    assert c.m2a[0] == (1, 7)
    assert c.m2b[0] == (1, 7)
    assert c.phase == ACCEPTED


def test_leader_adopts_value_with_highest_accepted_view():
    c, _ = node(pid=1, n=3)
    c.on_new_view(4)
    c.m1b = [(4, 2, 9), (4, 0, None), (4, 3, 4)]
    c.propose(7)
    assert c.m2a[0] == (4, 4)


def test_leader_without_value_skips_its_turn():
    c, _ = node()
    c.on_new_view(1)
    c.on_state((((1, 0, None),) * 3, ((0, None),) * 3, ((0, None),) * 3))
    assert c.m2a[0] == (0, None)
    assert c.phase == ENTERED


def test_follower_accepts_leader_proposal():
    c, _ = node(pid=2)
    c.on_new_view(1)
    c.on_state((((0, 0, None),) * 3, ((1, 7), (0, None), (0, None)), ((0, None),) * 3))
    assert (c.cview, c.val) == (1, 7)
    assert c.m2b[1] == (1, 7)
    assert c.phase == ACCEPTED


def test_stale_proposal_is_ignored():
    c, _ = node(pid=2, n=3)
    c.on_new_view(4)               # leader(4) = 1
    c.m2a[0] = (3, 7)
    c.step()
    assert c.phase == ENTERED and c.m2b[1] == (0, None)


def test_leader_accepts_own_proposal_from_proposed_phase():
    c, _ = node()
    c.on_new_view(1)
    c.m1b = [(1, 0, None)] * 3
    c.phase = ENTERED
    c.my_proposal = 3
    assert c.try_propose() and c.phase == PROPOSED
    assert c.try_accept() and c.phase == ACCEPTED


def test_majority_of_equal_2b_entries_decides():
    c, host = node(pid=3)
    c.on_new_view(5)
    c.m2b = [(5, 7), (5, 7), (0, None)]
    c.step()
    assert c.phase == DECIDED and c.decision == 7
    assert ("stop",) in host.calls and ("decided", 7) in host.calls


def test_mismatched_views_do_not_decide():
    c, _ = node(pid=3)
    c.on_new_view(5)
    c.m2b = [(5, 7), (4, 7), (0, None)]
    assert not c.try_decide()


def test_lagging_process_decides_from_later_view():
    c, _ = node(pid=3)
    c.on_new_view(2)
    c.on_state((((0, 0, None),) * 3, ((0, None),) * 3, ((6, 8), (6, 8), (0, None))))
    assert c.phase == DECIDED and c.decision == 8


def test_new_view_after_deciding_rearms_timer_and_keeps_decision():
    c, host = node(pid=3)
    c.on_new_view(5)
    c.m2b = [(5, 7), (5, 7), (0, None)]
    c.step()
    host.calls.clear()
    c.on_new_view(6)
    assert host.calls[0] == ("start", 10)
    assert c.phase == ENTERED
    assert c.decision == 7
    # deciding sets val but not cview, since this process never accepted in view 5
    assert c.m1b[2] == (6, 0, 7)


def test_state_merge_is_strictly_greater():
    c, _ = node()
    c.m2a = [(3, 1), (0, None), (0, None)]
    c.on_state((((0, 0, None),) * 3, ((3, 2), (4, 5), (0, None)), ((0, None),) * 3))
    assert c.m2a[0] == (3, 1)
    assert c.m2a[1] == (4, 5)


# Entries a process may publish are functions of (slot owner, view): one value per view.
def entry_tables(n):
    return st.lists(st.tuples(st.integers(0, n - 1), st.integers(1, 6)), max_size=12)


@settings(max_examples=200)
@given(st.integers(2, 5).flatmap(lambda n: st.tuples(st.just(n), entry_tables(n), st.randoms())))
def test_state_merge_keeps_highest_view_in_any_order(case):
    n, writes, rnd = case
    def val(j, v): return (v * 7 + j) % 5
    msgs = []
    for j, v in writes:
        m2a = [(0, None)] * n
        m2a[j] = (v, val(j, v))
        msgs.append((((0, 0, None),) * n, tuple(m2a), ((0, None),) * n))
    a, _ = node(pid=1, n=n)
    b, _ = node(pid=1, n=n)
    for m in msgs + msgs:
        a.on_state(m)
    order = list(msgs)
    rnd.shuffle(order)
    for m in order:
        b.on_state(m)
    want = [(0, None)] * n
    for j, v in writes:
        if v > want[j][0]:
            want[j] = (v, val(j, v))
    assert a.m2a == b.m2a == want
