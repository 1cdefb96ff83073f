"""Maximum matchings (Edmonds' blossom), Tutte-type audits and f-factors."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

from .graph import Edge, Graph, induced_subgraph, norm_edge


class MatchingError(ValueError):
    """Bad parameters for a matching or factor computation."""


class SizeGuardError(MatchingError):
    """Exhaustive audit requested on a graph that is too large."""


@dataclass(frozen=True)
class Matching:
    edges: frozenset[Edge]

    def covers(self) -> set[int]:
        return {v for e in self.edges for v in e}

    def is_perfect(self, g: Graph) -> bool:
        return len(self.edges) * 2 == g.n and len(self.covers()) == g.n


@dataclass(frozen=True)
class FactorSubgraph:
    f: int
    edges: frozenset[Edge]

    def degrees(self, n: int) -> list[int]:
        deg = [0] * n
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg


# --------------------------------------------------------------------------
# Edmonds' algorithm


def _greedy(adj: Sequence[Sequence[int]], mate: list[int]) -> None:
    # low-degree vertices first leaves fewer dead ends for the augmentation phase
    for v in sorted(range(len(adj)), key=lambda x: len(adj[x])):
        if mate[v] != -1:
            continue
        for w in adj[v]:
            if mate[w] == -1:
                mate[v], mate[w] = w, v
                break


def max_matching_mates(adj: Sequence[Sequence[int]], greedy: bool = True) -> list[int]:
    """Maximum-cardinality matching on an adjacency list; returns the mate array.

    Augmenting-path search grows one alternating tree at a time and shrinks
    odd cycles by relabelling their vertices with the blossom base. Work per
    search is confined to the vertices the tree touched.
    """
    n = len(adj)
    mate = [-1] * n
    if greedy:
        _greedy(adj, mate)
    parent = [-1] * n
    base = list(range(n))
    used = [False] * n

    def lca(a: int, b: int) -> int:
        seen = set()
        while True:
            a = base[a]
            seen.add(a)
            if mate[a] == -1:
                break
            a = parent[mate[a]]
        while True:
            b = base[b]
            if b in seen:
                return b
            b = parent[mate[b]]

    def search(root: int) -> int:
        touched = [root]
        used[root] = True
        queue = deque([root])
        found = -1

        def mark(v: int, b: int, child: int, blossom: set[int]) -> None:
            while base[v] != b:
                blossom.add(base[v])
                blossom.add(base[mate[v]])
                parent[v] = child
                child = mate[v]
                v = parent[mate[v]]

        while queue and found == -1:
            v = queue.popleft()
            for to in adj[v]:
                if base[v] == base[to] or mate[v] == to:
                    continue
                if to == root or (mate[to] != -1 and parent[mate[to]] != -1):
                    cur = lca(v, to)
                    blossom: set[int] = set()
                    mark(v, cur, to, blossom)
                    mark(to, cur, v, blossom)
                    for i in list(touched):
                        if base[i] in blossom:
                            base[i] = cur
                            if not used[i]:
                                used[i] = True
                                touched.append(i)
                                queue.append(i)
                elif parent[to] == -1:
                    parent[to] = v
                    touched.append(to)
                    if mate[to] == -1:
                        found = to
                        break
                    nxt = mate[to]
                    used[nxt] = True
                    touched.append(nxt)
                    queue.append(nxt)
        if found != -1:
            v = found
            while v != -1:
                pv = parent[v]
                ppv = mate[pv]
                mate[v], mate[pv] = pv, v
                v = ppv
        for i in touched:
            used[i] = False
            parent[i] = -1
            base[i] = i
        return found

    for v in range(n):
        if mate[v] == -1 and adj[v]:
            search(v)
    return mate


def maximum_matching(g: Graph) -> Matching:
    mate = max_matching_mates(g.adjacency)
    return Matching(frozenset(norm_edge(v, w) for v, w in enumerate(mate) if w > v))


def perfect_matching(g: Graph) -> Matching | None:
    if g.n % 2:
        return None
    m = maximum_matching(g)
    return m if 2 * len(m.edges) == g.n else None


# --------------------------------------------------------------------------
# Tutte-type audits (exhaustive)


def _subsets(items: Sequence[int]) -> Iterable[tuple[int, ...]]:
    for k in range(len(items) + 1):
        yield from combinations(items, k)


def _allowed(s: Sequence[int]) -> int:
    # an empty deletion set leaves at least one component in a non-empty
    # graph, so "at most |S|" is read as "connected" when S is empty
    return len(s) if s else 1


@dataclass(frozen=True)
class TutteResult:
    ok: bool
    witness: tuple | None = None

    def as_dict(self) -> dict:
        w = self.witness
        if w is not None and w and isinstance(w[0], tuple):
            w = [list(x) for x in w]
        elif w is not None:
            w = list(w)
        return {"ok": self.ok, "witness": w}


def tutte_all_components_check(g: Graph, max_n: int = 20) -> TutteResult:
    """Every deletion set S leaves at most |S| components (any parity)."""
    if g.n > max_n:
        raise SizeGuardError(f"n={g.n} exceeds exhaustive guard {max_n}")
    for s in _subsets(range(g.n)):
        if len(s) == g.n:
            continue
        if len(g.components(s)) > _allowed(s):
            return TutteResult(False, s)
    return TutteResult(True)


def tutte_classical_check(g: Graph, max_n: int = 20) -> TutteResult:
    """Classical condition: odd components of G - S at most |S|, for all S."""
    if g.n > max_n:
        raise SizeGuardError(f"n={g.n} exceeds exhaustive guard {max_n}")
    for s in _subsets(range(g.n)):
        odd = sum(1 for c in g.components(s) if len(c) % 2)
        if odd > len(s):
            return TutteResult(False, s)
    return TutteResult(True)


def tutte_generalized_check(g: Graph, f: int, max_n: int = 16,
                            variant: str = "all-components") -> TutteResult:
    """Exhaustive check of the f-factor deficiency inequality over disjoint (S, T).

    ``variant="all-components"`` counts every component of G - S - T (the
    stronger sufficient condition); ``variant="classical"`` counts only the
    components C with e(C, T) odd, which for even f is Tutte's exact
    characterisation.
    """
    if f % 2:
        raise MatchingError(f"f must be even, got {f}")
    if g.n > max_n:
        raise SizeGuardError(f"n={g.n} exceeds exhaustive guard {max_n}")
    if variant not in ("all-components", "classical"):
        raise MatchingError(f"unknown variant {variant!r}")
    n = g.n
    # each vertex goes to S, T or neither: 3^n labelings
    for code in range(3 ** n):
        s, t, c = [], [], code
        for v in range(n):
            c, r = divmod(c, 3)
            if r == 1:
                s.append(v)
            elif r == 2:
                t.append(v)
        sset = set(s)
        rhs = len(s) * f - sum(f - sum(1 for w in g.adjacency[x] if w not in sset) for x in t)
        comps = g.components(s + t)
        if variant == "classical":
            tset = set(t)
            q = sum(1 for comp in comps
                    if sum(1 for u in comp for w in g.adjacency[u] if w in tset) % 2)
        else:
            q = len(comps)
            if not s and not t:
                rhs = 1
        if q > rhs:
            return TutteResult(False, (tuple(s), tuple(t)))
    return TutteResult(True)


@dataclass(frozen=True)
class LemmaAudit:
    ok: bool
    witness: tuple[int, ...] | None
    min_degree_in_U: int
    min_degree_ok: bool
    lambda_ok: bool

    def as_dict(self) -> dict:
        return {"ok": self.ok, "witness": None if self.witness is None else list(self.witness),
                "min_degree_in_U": self.min_degree_in_U, "min_degree_ok": self.min_degree_ok,
                "lambda_ok": self.lambda_ok}


def pm_lemma_check(g: Graph, d: int, lam: float, u: Iterable[int], max_n: int = 20) -> LemmaAudit:
    """Audit q(G[U - S]) <= |S| for every S inside U.

    The lemma's hypotheses (min degree of G[U] at least 9d/10 and
    lambda < d/50) are reported alongside, not assumed.
    """
    sub = induced_subgraph(g, u)
    if sub.n > max_n:
        raise SizeGuardError(f"|U|={sub.n} exceeds exhaustive guard {max_n}")
    mindeg = sub.min_degree()
    res = tutte_all_components_check(sub, max_n=max_n)
    witness = None
    if not res.ok:
        witness = tuple(sub.labels[i] for i in res.witness)
    return LemmaAudit(res.ok, witness, mindeg, mindeg >= 0.9 * d, lam < d / 50)


# --------------------------------------------------------------------------
# f-factors


def _factor_via_copies(g: Graph, f: int) -> FactorSubgraph | None:
    # vertex v -> f copies; edge uv -> path a_u - a_v, a_u joined to all copies of u.
    # a perfect matching either pairs a_u with a_v (edge unused) or matches both
    # ends into copies (edge chosen); each copy absorbs exactly one chosen edge.
    edges = g.sorted_edges
    nv = g.n * f
    adj: list[list[int]] = [[] for _ in range(nv + 2 * len(edges))]
    for k, (u, v) in enumerate(edges):
        au, av = nv + 2 * k, nv + 2 * k + 1
        for x, ax in ((u, au), (v, av)):
            for i in range(f):
                adj[x * f + i].append(ax)
                adj[ax].append(x * f + i)
        adj[au].append(av)
        adj[av].append(au)
    mate = max_matching_mates(adj)
    if any(m == -1 for m in mate):
        return None
    chosen = frozenset(e for k, e in enumerate(edges) if mate[nv + 2 * k] != nv + 2 * k + 1)
    return FactorSubgraph(f, chosen)


def _factor_via_tutte_gadget(g: Graph, f: int) -> FactorSubgraph | None:
    # vertex v -> deg(v) external nodes (one per incident edge) plus deg(v) - f
    # internal nodes joined to all of them; edge uv joins its two external nodes.
    ext: dict[tuple[int, int], int] = {}
    nxt = 0
    internal: list[list[int]] = []
    for v in range(g.n):
        for w in g.adjacency[v]:
            ext[(v, w)] = nxt
            nxt += 1
    for v in range(g.n):
        internal.append(list(range(nxt, nxt + g.degree(v) - f)))
        nxt += g.degree(v) - f
    adj: list[list[int]] = [[] for _ in range(nxt)]
    for v in range(g.n):
        for w in g.adjacency[v]:
            a = ext[(v, w)]
            if v < w:
                b = ext[(w, v)]
                adj[a].append(b)
                adj[b].append(a)
            for i in internal[v]:
                adj[a].append(i)
                adj[i].append(a)
    mate = max_matching_mates(adj)
    if any(m == -1 for m in mate):
        return None
    chosen = frozenset(e for e in g.sorted_edges if mate[ext[e]] == ext[(e[1], e[0])])
    return FactorSubgraph(f, chosen)


def f_factor(g: Graph, f: int, gadget: str = "copies") -> FactorSubgraph | None:
    """Spanning f-regular subgraph via reduction to perfect matching, or None."""
    if f % 2 or f < 0:
        raise MatchingError(f"f must be a non-negative even integer, got {f}")
    if g.n and f > g.min_degree():
        raise MatchingError(f"f={f} exceeds minimum degree {g.min_degree()}")
    if f == 0:
        return FactorSubgraph(0, frozenset())
    if gadget == "copies":
        res = _factor_via_copies(g, f)
    elif gadget == "tutte":
        res = _factor_via_tutte_gadget(g, f)
    else:
        raise MatchingError(f"unknown gadget {gadget!r}")
    if res is not None:
        assert all(x == f for x in res.degrees(g.n))
    return res


def verify_factor(g: Graph, fs: FactorSubgraph) -> bool:
    return fs.edges <= g.edges and all(x == fs.f for x in fs.degrees(g.n))


def verify_matching(g: Graph, m: Matching) -> bool:
    if not m.edges <= g.edges:
        return False
    return len(m.covers()) == 2 * len(m.edges)
