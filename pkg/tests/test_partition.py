import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cardreduce.graph import gen_random_regular, named_graph
from cardreduce.partition import (
    NonConvergence, Partition, PartitionError, ResamplingState, circulant_csr, find_partition,
    find_partition_csr, verify_partition, verify_partition_csr, window,
)


def brute_verify(g, d, part):
    lo, hi = window(d, part.c, part.gamma)
    return all(lo - 1e-9 <= sum(w in part.A for w in g.adjacency[v]) <= hi + 1e-9
               for v in range(g.n))


def test_bias_one_gives_everything():
    g = named_graph("petersen")
    p = find_partition(g, 3, 1.0, 0.1, seed=3)
    assert p.A == frozenset(range(10)) and not p.B and p.iterations == 0
    assert verify_partition(g, 3, p)


def test_verify_examples():
    k4 = named_graph("K4")
    assert verify_partition(k4, 3, Partition(frozenset(range(4)), frozenset(), 1.0, 0.5, 0))
    c4 = named_graph("C4")
    assert not verify_partition(c4, 2, Partition(frozenset({0}), frozenset({1, 2, 3}), 0.5, 0.1, 0))


def test_verify_rejects_overlap_and_gaps():
    k4 = named_graph("K4")
    assert not verify_partition(k4, 3, Partition(frozenset({0, 1}), frozenset({1, 2, 3}), 0.5, 0.5, 0))
    assert not verify_partition(k4, 3, Partition(frozenset({0}), frozenset({2, 3}), 0.5, 0.5, 0))
    assert not verify_partition(k4, 3, Partition(frozenset({7}), frozenset(range(4)), 0.5, 0.5, 0))


def test_desk_example_window_50_to_90():
    g = gen_random_regular(500, 100, 0)
    p = find_partition(g, 100, 0.7, 0.2, seed=0)
    counts = [sum(w in p.A for w in g.adjacency[v]) for v in range(g.n)]
    assert 50 <= min(counts) and max(counts) <= 90
    assert brute_verify(g, 100, p)


def test_parameter_errors():
    g = named_graph("K4")
    with pytest.raises(PartitionError):
        find_partition(g, 3, 0.1, 0.2)
    with pytest.raises(PartitionError):
        find_partition(g, 3, 1.5, 0.1)
    with pytest.raises(PartitionError):
        find_partition(named_graph("P4"), 2, 0.5, 0.1)


def test_non_convergence_reported():
    g = gen_random_regular(60, 12, 1)
    with pytest.raises(NonConvergence) as info:
        find_partition(g, 12, 0.925, 0.025, seed=0, max_rounds=2000)
    assert info.value.resamples == 2000 and info.value.violated > 0


def test_deterministic_under_seed():
    g = gen_random_regular(200, 40, 2)
    a = find_partition(g, 40, 0.7, 0.2, seed=11)
    b = find_partition(g, 40, 0.7, 0.2, seed=11)
    assert a == b


@given(st.integers(0, 2 ** 31))
@settings(max_examples=25, deadline=None)
def test_success_always_verifies(seed):
    g = gen_random_regular(120, 30, seed % 50)
    try:
        p = find_partition(g, 30, 0.6, 0.25, seed=seed, max_rounds=20000)
    except NonConvergence:
        return
    assert verify_partition(g, 30, p) and brute_verify(g, 30, p)
    assert p.A | p.B == frozenset(range(120)) and not p.A & p.B


def test_resample_touches_only_distance_two():
    g = gen_random_regular(80, 6, 4)
    st_ = ResamplingState(*g.csr(), 0.5, np.random.default_rng(1))
    dist = {}
    frontier = [0]
    dist[0] = 0
    while frontier:
        nxt = []
        for v in frontier:
            for w in g.adjacency[v]:
                if w not in dist:
                    dist[w] = dist[v] + 1
                    nxt.append(w)
        frontier = nxt
    for _ in range(20):
        before = st_.y.copy()
        st_.resample(0)
        after = st_.y
        assert np.array_equal(after, st_.counts(st_.x))
        changed = np.flatnonzero(before != after)
        assert all(dist[int(u)] <= 2 for u in changed)


def test_circulant_is_regular_and_stress_runs():
    indptr, indices = circulant_csr(401, 40, 0)
    assert np.all(np.diff(indptr) == 40)
    rows = [set(indices[indptr[v]:indptr[v + 1]].tolist()) for v in range(401)]
    assert all(len(r) == 40 and v not in r for v, r in enumerate(rows))
    assert all(v in rows[w] for v in range(401) for w in rows[v])
    p = find_partition_csr(indptr, indices, 40, 0.7, 0.2, seed=1)
    assert verify_partition_csr(indptr, indices, 40, p)
