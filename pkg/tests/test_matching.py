import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from cardreduce.graph import Graph, gen_random_regular, induced_subgraph, named_graph, spectral_gap
from cardreduce.matching import (
    MatchingError, SizeGuardError, f_factor, maximum_matching, perfect_matching,
    pm_lemma_check, tutte_all_components_check, tutte_classical_check, tutte_generalized_check,
    verify_factor, verify_matching,
)


def _graphs_on(n: int):
    pairs = list(itertools.combinations(range(n), 2))
    if not pairs:
        return st.just(Graph.from_edges(n, []))
    return st.lists(st.sampled_from(pairs), unique=True).map(lambda es: Graph.from_edges(n, es))


graphs = st.integers(0, 10).flatmap(_graphs_on)


def test_perfect_matching_examples():
    m = perfect_matching(named_graph("K4"))
    assert m is not None and len(m.edges) == 2 and m.is_perfect(named_graph("K4"))
    assert perfect_matching(named_graph("C5")) is None
    p = named_graph("petersen")
    spokes = {(i, i + 5) for i in range(5)}
    assert spokes <= p.edges and len(spokes) == 5
    m = perfect_matching(p)
    assert m is not None and verify_matching(p, m) and m.is_perfect(p)


@given(graphs)
@settings(max_examples=200, deadline=None)
def test_maximum_matching_size_matches_exhaustive(g):
    m = maximum_matching(g)
    assert verify_matching(g, m)
    assert len(m.edges) == oracles.max_matching_size(g.n, g.edges)


@given(graphs)
@settings(max_examples=150, deadline=None)
def test_perfect_matching_iff_classical_tutte(g):
    assert (perfect_matching(g) is not None) == tutte_classical_check(g).ok


def test_tutte_all_components_examples():
    assert tutte_all_components_check(named_graph("K4")).ok
    res = tutte_all_components_check(named_graph("S3"))
    assert not res.ok and res.witness == (0,)
    assert tutte_all_components_check(named_graph("petersen")).ok
    # the empty deletion set requires connectivity
    res = tutte_all_components_check(named_graph("2K3"))
    assert not res.ok and res.witness == ()
    with pytest.raises(SizeGuardError):
        tutte_all_components_check(named_graph("C21"))


def test_tutte_generalized_examples():
    assert tutte_generalized_check(named_graph("K5"), 2).ok
    res = tutte_generalized_check(named_graph("P4"), 2)
    assert not res.ok
    s, t = res.witness
    assert set(t) & {0, 3} or s
    with pytest.raises(MatchingError):
        tutte_generalized_check(named_graph("K5"), 3)


def test_c6_two_factor_variants():
    # C6 has a 2-factor (itself); the classical deficiency condition agrees,
    # the all-components count with T = V minus a vertex pair does not
    c6 = named_graph("C6")
    assert f_factor(c6, 2).edges == c6.edges
    assert tutte_generalized_check(c6, 2, variant="classical").ok
    assert not tutte_generalized_check(c6, 2).ok


@given(graphs, st.sampled_from([2, 4]))
@settings(max_examples=60, deadline=None)
def test_generalized_classical_is_exact(g, f):
    if g.n > 8:
        return
    want = oracles.has_f_factor(g.n, g.edges, f)
    assert tutte_generalized_check(g, f, variant="classical").ok == want
    if tutte_generalized_check(g, f).ok:
        assert want


def test_f_factor_examples():
    for n in range(3, 12):
        c = named_graph(f"C{n}")
        fs = f_factor(c, 2)
        assert fs.edges == c.edges
    g = named_graph("petersen")
    assert f_factor(g, 0).edges == frozenset()
    fs = f_factor(named_graph("K5"), 2)
    assert verify_factor(named_graph("K5"), fs)
    chosen = Graph.from_edges(5, fs.edges)
    assert len(chosen.components()) == 1


def test_f_factor_errors():
    with pytest.raises(MatchingError):
        f_factor(named_graph("K5"), 3)
    with pytest.raises(MatchingError):
        f_factor(named_graph("C5"), 4)
    with pytest.raises(MatchingError):
        f_factor(named_graph("K5"), 2, gadget="bogus")


@pytest.mark.parametrize("gadget", ["copies", "tutte"])
def test_gadgets_agree_with_exhaustive(gadget):
    rng = random.Random(9)
    for _ in range(60):
        n = rng.randint(3, 8)
        edges = [e for e in itertools.combinations(range(n), 2) if rng.random() < 0.7]
        g = Graph.from_edges(n, edges)
        if g.min_degree() < 2:
            continue
        fs = f_factor(g, 2, gadget=gadget)
        assert (fs is not None) == oracles.has_f_factor(n, g.edges, 2)
        if fs is not None:
            assert verify_factor(g, fs)


def test_f_factor_on_regular_graphs():
    for seed in range(10):
        g = gen_random_regular(40, 10, seed)
        for f in (2, 4):
            fs = f_factor(g, f)
            assert fs is not None and verify_factor(g, fs)


def test_pm_lemma_examples():
    k6 = named_graph("K6")
    audit = pm_lemma_check(k6, 5, spectral_gap(k6).lam, range(6))
    assert audit.ok and audit.min_degree_in_U == 5
    audit = pm_lemma_check(named_graph("2K3"), 2, 2.0, range(6))
    assert not audit.ok and audit.witness == ()
    p = named_graph("petersen")
    audit = pm_lemma_check(p, 3, 2.0, range(10))
    assert audit.ok and not audit.lambda_ok


def test_expander_corollary_on_generated_graph():
    g = gen_random_regular(201, 100, 0)
    lam = spectral_gap(g).lam
    assert lam < 100 / 5
    u = list(range(200))
    sub_min = min(sum(w in set(u) for w in g.adjacency[v]) for v in u)
    assert sub_min >= 90
    m = perfect_matching(induced_subgraph(g, u))
    assert m is not None and len(m.edges) == 100
