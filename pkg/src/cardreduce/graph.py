"""Undirected simple graphs, generators, spectra and the expander mixing check.

Vertices are the dense integers ``0..n-1``. Graph values are immutable once
built; every generator takes an explicit seed.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

Edge = tuple[int, int]


class GraphError(ValueError):
    """Malformed graph input or parameters."""


class GenerationError(RuntimeError):
    """A randomized generator ran out of its retry budget."""


class ConvergenceError(RuntimeError):
    """An iterative eigen-solver did not reach tolerance."""


def norm_edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    n: int
    adjacency: tuple[tuple[int, ...], ...]
    # labels[i] is the vertex of the parent graph that vertex i came from
    labels: tuple[int, ...] | None = field(default=None, compare=False)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]],
                   labels: Sequence[int] | None = None) -> "Graph":
        if n < 0:
            raise GraphError(f"negative vertex count {n}")
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for e in edges:
            u, v = int(e[0]), int(e[1])
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise GraphError(f"self-loop at {u}")
            if v in nbrs[u]:
                raise GraphError(f"parallel edge ({u}, {v})")
            nbrs[u].add(v)
            nbrs[v].add(u)
        adj = tuple(tuple(sorted(s)) for s in nbrs)
        return cls(n, adj, None if labels is None else tuple(labels))

    @cached_property
    def edges(self) -> frozenset[Edge]:
        return frozenset((u, v) for u in range(self.n) for v in self.adjacency[u] if u < v)

    @cached_property
    def sorted_edges(self) -> tuple[Edge, ...]:
        return tuple(sorted(self.edges))

    @property
    def m(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def degrees(self) -> list[int]:
        return [len(a) for a in self.adjacency]

    def has_edge(self, u: int, v: int) -> bool:
        return norm_edge(u, v) in self.edges

    def regular_degree(self) -> int | None:
        """Common degree if the graph is regular, else None."""
        degs = set(self.degrees())
        if len(degs) == 1:
            return degs.pop()
        if self.n == 0:
            return 0
        return None

    def max_degree(self) -> int:
        return max(self.degrees(), default=0)

    def min_degree(self) -> int:
        return min(self.degrees(), default=0)

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for u, nb in enumerate(self.adjacency):
            a[u, list(nb)] = 1.0
        return a

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """(indptr, indices) neighbour arrays."""
        degs = np.fromiter((len(a) for a in self.adjacency), dtype=np.int64, count=self.n)
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(degs, out=indptr[1:])
        indices = np.fromiter((v for a in self.adjacency for v in a), dtype=np.int64,
                              count=int(indptr[-1]))
        return indptr, indices

    def without_edges(self, removed: Iterable[Edge]) -> "Graph":
        drop = {norm_edge(*e) for e in removed}
        return Graph.from_edges(self.n, (e for e in self.sorted_edges if e not in drop),
                                labels=self.labels)

    def components(self, removed: Iterable[int] = ()) -> list[list[int]]:
        """Connected components of G minus the vertex set ``removed``."""
        gone = set(removed)
        seen = set(gone)
        comps = []
        for s in range(self.n):
            if s in seen:
                continue
            seen.add(s)
            comp, stack = [s], [s]
            while stack:
                u = stack.pop()
                for w in self.adjacency[u]:
                    if w not in seen:
                        seen.add(w)
                        comp.append(w)
                        stack.append(w)
            comps.append(comp)
        return comps

    def check(self) -> None:
        """Assert the structural invariants (degree sum, symmetry, simplicity)."""
        assert sum(self.degrees()) == 2 * len(self.edges)
        for u, nb in enumerate(self.adjacency):
            assert u not in nb
            assert len(set(nb)) == len(nb)
            for v in nb:
                assert u in self.adjacency[v]


# --------------------------------------------------------------------------
# generators


def _petersen_edges() -> list[Edge]:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return outer + spokes + inner


def named_graph(name: str) -> Graph:
    """Catalogue fixtures with a fixed labelling.

    ``K<n>``      complete graph
    ``C<n>``      cycle, i ~ i+1 mod n
    ``P<n>``      path on n vertices, i ~ i+1
    ``S<k>``      star K_{1,k}, centre 0
    ``petersen``  outer cycle 0..4, spokes i ~ i+5, inner 5+i ~ 5+(i+2)%5
    ``petersen-minus-vertex``  petersen with vertex 9 removed (9 vertices)
    ``rook3``     K_3 x K_3 rook's graph, vertex 3r+c (9 vertices, 4-regular)
    ``2K3``       two disjoint triangles {0,1,2}, {3,4,5}
    """
    m = re.fullmatch(r"([KCPS])(\d+)", name)
    if m:
        kind, k = m.group(1), int(m.group(2))
        if kind == "K":
            return Graph.from_edges(k, [(i, j) for i in range(k) for j in range(i + 1, k)])
        if kind == "C":
            if k < 3:
                raise GraphError("cycles need at least 3 vertices")
            return Graph.from_edges(k, [(i, (i + 1) % k) for i in range(k)])
        if kind == "P":
            return Graph.from_edges(k, [(i, i + 1) for i in range(k - 1)])
        return Graph.from_edges(k + 1, [(0, i) for i in range(1, k + 1)])
    if name == "petersen":
        return Graph.from_edges(10, _petersen_edges())
    if name == "petersen-minus-vertex":
        return Graph.from_edges(9, [e for e in _petersen_edges() if 9 not in e])
    if name == "rook3":
        cells = [(r, c) for r in range(3) for c in range(3)]
        edges = [(3 * a[0] + a[1], 3 * b[0] + b[1])
                 for i, a in enumerate(cells) for b in cells[i + 1:]
                 if a[0] == b[0] or a[1] == b[1]]
        return Graph.from_edges(9, edges)
    if name == "2K3":
        return Graph.from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
    raise GraphError(f"unknown graph name {name!r}")


def _repair_pairing(n: int, pairs: list[Edge], rng: random.Random, budget: int) -> list[Edge]:
    """Double-edge swaps until the multigraph is simple."""
    where: dict[Edge, set[int]] = {}
    for i, e in enumerate(pairs):
        where.setdefault(e, set()).add(i)
    bad = {i for i, e in enumerate(pairs) if e[0] == e[1] or len(where[e]) > 1}

    def recheck(e: Edge) -> None:
        for k in where.get(e, ()):
            if e[0] == e[1] or len(where[e]) > 1:
                bad.add(k)
            else:
                bad.discard(k)

    for _ in range(budget):
        if not bad:
            return pairs
        i = rng.choice(sorted(bad)) if len(bad) < 64 else rng.choice(tuple(bad))
        j = rng.randrange(len(pairs))
        if i == j:
            continue
        a, b = pairs[i]
        c, d = pairs[j]
        if rng.random() < 0.5:
            c, d = d, c
        e1, e2 = norm_edge(a, c), norm_edge(b, d)
        if e1[0] == e1[1] or e2[0] == e2[1] or e1 == e2:
            continue
        if where.get(e1) or where.get(e2):
            continue
        old_i, old_j = pairs[i], pairs[j]
        where[old_i].discard(i)
        where[old_j].discard(j)
        bad.discard(i)
        bad.discard(j)
        pairs[i], pairs[j] = e1, e2
        where.setdefault(e1, set()).add(i)
        where.setdefault(e2, set()).add(j)
        for e in (old_i, old_j, e1, e2):
            recheck(e)
    raise GenerationError(f"edge-swap repair did not converge within {budget} swaps")


def gen_random_regular(n: int, d: int, seed: int, retries: int = 20,
                       swap_budget: int | None = None) -> Graph:
    """Random simple d-regular graph from the pairing (configuration) model.

    Pairings with loops or multi-edges are rejected ``retries`` times; after
    that the last pairing is repaired by double-edge swaps.
    """
    if n <= 0 or d < 0:
        raise GraphError(f"need n > 0 and d >= 0, got n={n}, d={d}")
    if (n * d) % 2:
        raise GraphError(f"n*d must be even (n={n}, d={d})")
    if d >= n:
        raise GraphError(f"degree {d} must be below vertex count {n}")
    rng = random.Random(seed)
    points = [v for v in range(n) for _ in range(d)]
    pairs: list[Edge] = []
    for _ in range(max(retries, 1)):
        rng.shuffle(points)
        pairs = [norm_edge(points[i], points[i + 1]) for i in range(0, len(points), 2)]
        if all(u != v for u, v in pairs) and len(set(pairs)) == len(pairs):
            break
    else:
        budget = swap_budget if swap_budget is not None else 200 * len(pairs) + 1000
        pairs = _repair_pairing(n, pairs, rng, budget)
    g = Graph.from_edges(n, pairs)
    g.check()
    return g


def complement(g: Graph) -> Graph:
    a = g.adjacency_matrix() == 0
    np.fill_diagonal(a, False)
    iu, ju = np.nonzero(np.triu(a, 1))
    return Graph.from_edges(g.n, zip(iu.tolist(), ju.tolist()))


def induced_subgraph(g: Graph, w: Iterable[int]) -> Graph:
    """G[W], relabelled to 0..|W|-1 in increasing order; ``labels`` maps back."""
    verts = sorted(set(w))
    for v in verts:
        if not 0 <= v < g.n:
            raise GraphError(f"vertex {v} out of range for n={g.n}")
    index = {v: i for i, v in enumerate(verts)}
    edges = [(index[u], index[v]) for u in verts for v in g.adjacency[u]
             if u < v and v in index]
    parent = g.labels
    labels = [parent[v] for v in verts] if parent is not None else verts
    return Graph.from_edges(len(verts), edges, labels=labels)


# --------------------------------------------------------------------------
# edge-list text format: "n m" then m lines "u v" with u < v


def write_edgelist(g: Graph, path: str | Path) -> None:
    lines = [f"{g.n} {g.m}"] + [f"{u} {v}" for u, v in g.sorted_edges]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_edgelist(text: str) -> Graph:
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not rows or len(rows[0]) != 2:
        raise GraphError("edge list must start with a 'n m' header")
    n, m = int(rows[0][0]), int(rows[0][1])
    body = rows[1:]
    if len(body) != m:
        raise GraphError(f"header says {m} edges, found {len(body)}")
    edges = []
    for r in body:
        if len(r) != 2:
            raise GraphError(f"bad edge line {' '.join(r)!r}")
        u, v = int(r[0]), int(r[1])
        if not u < v:
            raise GraphError(f"edge line must have u < v, got {u} {v}")
        edges.append((u, v))
    return Graph.from_edges(n, edges)


def read_edgelist(path: str | Path) -> Graph:
    return parse_edgelist(Path(path).read_text(encoding="utf-8"))


# --------------------------------------------------------------------------
# spectra


@dataclass(frozen=True)
class SpectralReport:
    d: int | None
    lam: float
    method: str
    tol: float
    eigenvalues: tuple[float, ...] | None = None

    def as_dict(self) -> dict:
        return {"d": self.d, "lambda": self.lam, "method": self.method, "tol": self.tol,
                "eigenvalues": None if self.eigenvalues is None else list(self.eigenvalues)}


def _top_eigvec(a: np.ndarray, rng: np.random.Generator, tol: float, max_iter: int) -> np.ndarray:
    # shift keeps the Perron vector dominant on bipartite graphs
    shift = a.sum(axis=1).max() + 1.0
    v = rng.random(a.shape[0]) + 0.5
    v /= np.linalg.norm(v)
    for _ in range(max_iter):
        w = a @ v + shift * v
        w /= np.linalg.norm(w)
        if np.linalg.norm(w - v) < tol:
            return w
        v = w
    raise ConvergenceError("power iteration for the principal eigenvector did not converge")


def spectral_gap(g: Graph, mode: str = "dense", tol: float = 1e-10,
                 max_iter: int = 100_000, seed: int = 0) -> SpectralReport:
    """Largest non-principal eigenvalue magnitude of the adjacency matrix."""
    d = g.regular_degree()
    if g.n <= 1:
        return SpectralReport(d, 0.0, "dense-eigh" if mode == "dense" else "power-deflate", tol,
                              (0.0,) * g.n if mode == "dense" else None)
    a = g.adjacency_matrix()
    if mode == "dense":
        ev = np.linalg.eigvalsh(a)[::-1]
        lam = float(max(abs(ev[1]), abs(ev[-1])))
        return SpectralReport(d, lam, "dense-eigh", tol, tuple(float(x) for x in ev))
    if mode != "iterative":
        raise ValueError(f"unknown spectral mode {mode!r}")
    rng = np.random.default_rng(seed)
    if d is not None:
        top = np.full(g.n, 1.0 / math.sqrt(g.n))
    else:
        top = _top_eigvec(a, rng, tol, max_iter)
    # power iteration on A^2 on the complement of the principal direction,
    # so +lambda and -lambda of equal magnitude cannot make it oscillate
    v = rng.standard_normal(g.n)
    v -= (v @ top) * top
    v /= np.linalg.norm(v)
    for _ in range(max_iter):
        w = a @ (a @ v)
        w -= (w @ top) * top
        rq = float(v @ w)
        if np.linalg.norm(w - rq * v) < tol * max(1.0, abs(rq)):
            return SpectralReport(d, math.sqrt(max(rq, 0.0)), "power-deflate", tol)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return SpectralReport(d, 0.0, "power-deflate", tol)
        v = w / nrm
    raise ConvergenceError(f"power iteration did not converge in {max_iter} steps")


def edge_count_between(g: Graph, s: Iterable[int], t: Iterable[int]) -> int:
    """e(S, T): ordered pairs (u, v), u in S, v in T, uv an edge.

    Edges with both ends in S and T are therefore counted twice.
    """
    tset = set(t)
    return sum(1 for u in set(s) for v in g.adjacency[u] if v in tset)


@dataclass(frozen=True)
class MixingResult:
    holds: bool
    lhs: float
    rhs: float


def mixing_check(g: Graph, d: int, lam: float, s: Iterable[int], t: Iterable[int]) -> MixingResult:
    s, t = set(s), set(t)
    e = edge_count_between(g, s, t)
    lhs = abs(e - d / g.n * len(s) * len(t)) if g.n else 0.0
    rhs = lam * math.sqrt(len(s) * len(t))
    # the lemma is exact; allow float noise only
    return MixingResult(lhs <= rhs + 1e-9 * max(1.0, rhs), float(lhs), float(rhs))
