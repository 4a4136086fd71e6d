import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flakysim.synchronizer import (ContractError, Synchronizer, majority_view,
                                   majority_view_bruteforce)


def views_arrays(max_n=7):
    return st.integers(1, max_n).flatmap(
        lambda n: st.tuples(st.just(n), st.lists(st.integers(0, 9), min_size=n, max_size=n)))


def test_startup_advance_wishes_view_one():
    s = Synchronizer(1, 3)
    assert s.advance() == (1, 0, 0)
    assert s.views == [1, 0, 0]


def test_advance_wishes_next_view():
    s = Synchronizer(2, 3)
    s.curr_view = 4
    s.advance()
    assert s.views[1] == 5


def test_advance_enter_advance():
    s = Synchronizer(1, 3)
    s.curr_view = 4
    s.advance()
    entered, _ = s.on_wish((5, 5, 0))
    assert entered == 5
    assert s.advance()[0] == 6


def test_second_advance_in_same_view_is_a_contract_error():
    s = Synchronizer(1, 3)
    s.advance()
    with pytest.raises(ContractError):
        s.advance()
    assert s.advance(force=True) == (1, 0, 0)


def test_wish_with_majority_enters_view():
    s = Synchronizer(1, 3)
    s.advance()
    entered, rebroadcast = s.on_wish((1, 1, 0))
    assert s.views == [1, 1, 0]
    assert entered == 1
    assert rebroadcast == (1, 1, 0)


def test_majority_view_picks_highest_supported():
    assert majority_view([5, 2, 7], 3) == 5


def test_all_zero_wish_changes_nothing():
    s = Synchronizer(2, 3)
    assert s.on_wish((0, 0, 0)) == (None, None)
    assert s.views == [0, 0, 0] and s.curr_view == 0


@settings(max_examples=500)
@given(views_arrays())
def test_sorted_rank_matches_bruteforce(nv):
    n, views = nv
    assert majority_view(views, n) == majority_view_bruteforce(views, n)


@settings(max_examples=200)
@given(st.integers(2, 7).flatmap(lambda n: st.tuples(
    st.just(n), st.lists(st.lists(st.integers(0, 6), min_size=n, max_size=n), max_size=6),
    st.randoms())))
def test_merge_is_idempotent_and_order_insensitive(case):
    n, wishes, rnd = case
    a, b = Synchronizer(1, n), Synchronizer(1, n)
    for w in wishes:
        a.on_wish(w)
        a.on_wish(w)
    shuffled = list(wishes)
    rnd.shuffle(shuffled)
    for w in shuffled:
        b.on_wish(w)
    assert a.views == b.views
    assert a.curr_view == b.curr_view


@settings(max_examples=200)
@given(st.integers(1, 7).flatmap(lambda n: st.tuples(
    st.just(n), st.lists(st.lists(st.integers(0, 9), min_size=n, max_size=n), max_size=10))))
def test_entered_views_increase_and_have_majority_support(case):
    n, wishes = case
    s = Synchronizer(1, n)
    last, sent = 0, [s.snapshot()]
    for w in wishes:
        entered, out = s.on_wish(w)
        assert s.curr_view >= last
        if entered is not None:
            assert entered > last
            assert 2 * sum(1 for v in s.views if v >= entered) > n
            last = entered
        if out is not None:
            # later WISH payloads dominate earlier ones entrywise
            assert all(x <= y for x, y in zip(sent[-1], out))
            sent.append(out)


def test_no_enter_rebroadcast_suppresses_the_reply():
    s = Synchronizer(1, 3, ["no_enter_rebroadcast"])
    assert s.on_wish((1, 1, 0)) == (1, None)


def test_no_periodic_wish_suppresses_gossip():
    assert Synchronizer(1, 3, ["no_periodic_wish"]).periodic() is None
    assert Synchronizer(1, 3).periodic() == (0, 0, 0)


def test_weak_threshold_follows_a_minority():
    weak = Synchronizer(1, 5, ["weak_threshold"])
    assert weak.on_wish((0, 0, 0, 3, 3))[0] == 3
    assert Synchronizer(1, 5).on_wish((0, 0, 0, 3, 3))[0] is None


def test_unknown_mutation_rejected():
    with pytest.raises(ValueError):
        Synchronizer(1, 3, ["nonsense"])
