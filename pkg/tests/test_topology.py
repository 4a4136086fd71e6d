from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flakysim.topology import (FailProneSystem, FailurePattern, TopologyError, TopologyGraph,
                               connected_core, diameter, is_k_fail_prone, residual_graph,
                               strongly_connected_components)

# Three-process configurations: 1<->3 down; nothing reaches 2; flaky links around 2.
FIG1 = {
    "a": FailurePattern((), [(1, 3), (3, 1)]),
    "b": FailurePattern((), [(1, 2), (3, 2)]),
    "c": FailurePattern((), [(1, 2), (2, 1), (2, 3), (3, 2)]),
}


def reach(g: TopologyGraph) -> dict[int, set[int]]:
    """Reachability closure by repeated expansion (independent of Tarjan)."""
    out = {v: {v} for v in g.vertices}
    changed = True
    while changed:
        changed = False
        for p, q in g.edges:
            for v in g.vertices:
                if p in out[v] and q not in out[v]:
                    out[v].add(q)
                    changed = True
    return out


def scc_oracle(g: TopologyGraph) -> set[frozenset[int]]:
    r = reach(g)
    return {frozenset(u for u in g.vertices if u in r[v] and v in r[u]) for v in g.vertices}


def bfs_dist(g, a, b):
    frontier, seen, d = {a}, {a}, 0
    while b not in frontier:
        frontier = {q for p, q in g.edges if p in frontier} - seen
        if not frontier:
            return None
        seen |= frontier
        d += 1
    return d


graphs = st.integers(1, 6).flatmap(lambda n: st.builds(
    lambda es: TopologyGraph(range(1, n + 1), es),
    st.sets(st.tuples(st.integers(1, n), st.integers(1, n)))))


def test_residual_removes_faulty_channels():
    g = residual_graph(TopologyGraph.complete(3), FailurePattern((), [(1, 2), (2, 1)]))
    assert g.edges == TopologyGraph.complete(3).edges - {(1, 2), (2, 1)}
    assert g.vertices == {1, 2, 3}


def test_residual_removes_crashed_process():
    g = residual_graph(TopologyGraph.complete(3), FailurePattern({2}))
    assert g.vertices == {1, 3}
    assert g.edges == {(1, 3), (3, 1)}


def test_residual_fig1b_keeps_1_3_connected():
    g = residual_graph(TopologyGraph.complete(3), FIG1["b"])
    assert g.edges == {(1, 3), (3, 1), (2, 1), (2, 3)}
    assert frozenset({1, 3}) in strongly_connected_components(g)


def test_faulty_channel_touching_crashed_rejected():
    with pytest.raises(TopologyError):
        FailurePattern({1}, [(1, 2)])


@pytest.mark.parametrize("edges,expected", [
    ([], [{1}, {2}, {3}]),
    ([(1, 2), (2, 3), (3, 1)], [{1, 2, 3}]),
    ([(1, 3), (3, 1), (1, 2)], [{1, 3}, {2}]),
])
def test_scc_examples(edges, expected):
    comps = strongly_connected_components(TopologyGraph([1, 2, 3], edges))
    assert comps == [frozenset(c) for c in expected]


@settings(max_examples=200)
@given(graphs)
def test_scc_matches_reachability_closure(g):
    comps = strongly_connected_components(g)
    assert set(comps) == scc_oracle(g)
    # a partition, listed in canonical order
    assert sum(len(c) for c in comps) == len(g.vertices)
    assert set().union(*comps) == g.vertices
    assert [min(c) for c in comps] == sorted(min(c) for c in comps)


@pytest.mark.parametrize("fig,core", [("a", {1, 2, 3}), ("b", {1, 3}), ("c", {1, 3})])
def test_connected_core_of_three_process_examples(fig, core):
    assert connected_core(TopologyGraph.complete(3), FIG1[fig], 3) == frozenset(core)


def test_connected_core_absent_when_all_singletons():
    assert connected_core(TopologyGraph([1, 2, 3], []), FailurePattern(), 3) is None


@settings(max_examples=200)
@given(graphs, st.data())
def test_core_is_the_unique_majority_component(g, data):
    n = len(g.vertices)
    crashed = data.draw(st.sets(st.sampled_from(sorted(g.vertices)), max_size=n - 1))
    f = FailurePattern(crashed)
    core = connected_core(g, f, n)
    big = [c for c in scc_oracle(residual_graph(g, f)) if 2 * len(c) > n]
    assert len(big) <= 1
    assert core == (big[0] if big else None)


@settings(max_examples=200)
@given(graphs, st.data())
def test_residual_is_monotone_in_faults(g, data):
    es = sorted(g.edges)
    small = data.draw(st.sets(st.sampled_from(es))) if es else set()
    extra = data.draw(st.sets(st.sampled_from(es))) if es else set()
    r1 = residual_graph(g, FailurePattern((), small))
    r2 = residual_graph(g, FailurePattern((), small | extra))
    assert r2.vertices <= r1.vertices and r2.edges <= r1.edges


@pytest.mark.parametrize("vertices,edges,s,d", [
    ([1, 2, 3], [], {1}, 0),
    ([1, 3], [(1, 3), (3, 1)], {1, 3}, 1),
    ([1, 2, 3], [(1, 2), (2, 3), (3, 1)], {1, 2, 3}, 2),
])
def test_diameter_examples(vertices, edges, s, d):
    assert diameter(TopologyGraph(vertices, edges), s) == d


@settings(max_examples=200)
@given(graphs)
def test_diameter_matches_bfs_and_size_bound(g):
    for comp in strongly_connected_components(g):
        d = diameter(g, comp)
        want = max(bfs_dist(g, a, b) for a in comp for b in comp)
        assert d == want
        assert d <= len(comp) - 1


def test_diameter_rejects_disconnected_set():
    with pytest.raises(TopologyError):
        diameter(TopologyGraph([1, 2], [(1, 2)]), {1, 2})


def test_minority_system_is_1_fail_prone_for_n3():
    assert is_k_fail_prone(FailProneSystem.minority(3), 1, 3)


def test_pattern_larger_than_k_is_not_k_fail_prone():
    pats = list(FailProneSystem.minority(3).patterns) + [FailurePattern({1, 2})]
    assert not is_k_fail_prone(FailProneSystem(pats), 1, 3)


def test_missing_singleton_is_not_k_fail_prone():
    pats = [p for p in FailProneSystem.minority(3).patterns if p.crashed != {2}]
    assert not is_k_fail_prone(FailProneSystem(pats), 1, 3)


@pytest.mark.parametrize("n", [3, 4, 5, 7])
def test_minority_generator_enumerates_subsets(n):
    k = (n - 1) // 2
    crash_sets = {p.crashed for p in FailProneSystem.minority(n).patterns}
    want = {frozenset(c) for j in range(k + 1) for c in combinations(range(1, n + 1), j)}
    assert crash_sets == want
    assert is_k_fail_prone(FailProneSystem.minority(n), k, n)
