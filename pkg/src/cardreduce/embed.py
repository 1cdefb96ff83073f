"""Odd-subdivision topological embeddings of a small pattern graph H in G[B]."""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .graph import Edge, Graph, norm_edge


class EmbeddingError(RuntimeError):
    """The router ran out of budget; ``edge`` is the H-edge it got stuck on."""

    def __init__(self, msg: str, edge: Edge | None = None, attempts: int = 0):
        super().__init__(msg)
        self.edge = edge
        self.attempts = attempts


class EmbedParameterError(ValueError):
    pass


@dataclass(frozen=True)
class SubdivisionSpec:
    h: Graph
    parity: str = "odd"
    min_len: int = 3
    max_len: int = 41
    max_degree: int = 5

    def __post_init__(self) -> None:
        if self.parity != "odd":
            raise EmbedParameterError(f"only odd subdivisions are supported, got {self.parity!r}")
        if self.min_len < 1 or self.min_len % 2 == 0:
            raise EmbedParameterError(f"min_len must be a positive odd integer, got {self.min_len}")
        if self.max_len < self.min_len:
            raise EmbedParameterError("max_len below min_len")
        if self.h.n and self.h.max_degree() > self.max_degree:
            raise EmbedParameterError(
                f"pattern has maximum degree {self.h.max_degree()} > bound {self.max_degree}")


@dataclass(frozen=True)
class Embedding:
    """psi[i] is the branch vertex of H-vertex i; paths[(a, b)] runs psi[a] .. psi[b]."""

    psi: tuple[int, ...]
    paths: Mapping[Edge, tuple[int, ...]]

    @property
    def sigma(self) -> dict[Edge, int]:
        return {e: len(p) - 1 for e, p in self.paths.items()}

    def vertices(self) -> set[int]:
        out = set(self.psi)
        for p in self.paths.values():
            out.update(p)
        return out

    def edges(self) -> set[Edge]:
        return {norm_edge(p[i], p[i + 1]) for p in self.paths.values() for i in range(len(p) - 1)}

    def as_dict(self) -> dict:
        return {
            "psi": list(self.psi),
            "paths": [{"h_edge": list(e), "path": list(p)} for e, p in sorted(self.paths.items())],
            "sigma": [{"h_edge": list(e), "length": s} for e, s in sorted(self.sigma.items())],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Embedding":
        paths = {tuple(x["h_edge"]): tuple(x["path"]) for x in data["paths"]}
        return cls(tuple(data["psi"]), paths)


def verify_embedding(g: Graph, b: Iterable[int], spec: SubdivisionSpec, emb: Embedding) -> bool:
    h = spec.h
    bset = set(b)
    psi = emb.psi
    if len(psi) != h.n or len(set(psi)) != h.n or not set(psi) <= bset:
        return False
    if set(emb.paths) != set(h.edges):
        return False
    interiors: set[int] = set()
    for (a, c), path in emb.paths.items():
        if len(path) < 2 or path[0] != psi[a] or path[-1] != psi[c]:
            return False
        length = len(path) - 1
        if length % 2 == 0 or length < spec.min_len:
            return False
        if not set(path) <= bset or len(set(path)) != len(path):
            return False
        if any(not g.has_edge(path[i], path[i + 1]) for i in range(length)):
            return False
        inner = set(path[1:-1])
        if inner & set(psi) or inner & interiors:
            return False
        interiors |= inner
    return True


def subdivision_vertex_count(h: Graph, sigma: Mapping[Edge, int]) -> int:
    return h.n + sum(s - 1 for s in sigma.values())


# --------------------------------------------------------------------------
# heuristic router


def _ball(adj: Sequence[Sequence[int]], inside: set[int], src: int, radius: int) -> set[int]:
    seen = {src}
    frontier = [src]
    for _ in range(radius):
        nxt = []
        for v in frontier:
            for w in adj[v]:
                if w in inside and w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    return seen


def _distances(adj: Sequence[Sequence[int]], inside: set[int], src: int, limit: int) -> dict[int, int]:
    dist = {src: 0}
    frontier = [src]
    for k in range(1, limit + 1):
        nxt = []
        for v in frontier:
            for w in adj[v]:
                if w in inside and w not in dist:
                    dist[w] = k
                    nxt.append(w)
        frontier = nxt
    return dist


def _place(g: Graph, bset: set[int], h: Graph, rng: random.Random, spacing: int) -> list[int] | None:
    # H-vertices in BFS order from a maximum-degree vertex; each is put at
    # distance ``spacing`` from an already placed H-neighbour when possible,
    # which keeps the connecting paths short
    deg_b = {v: sum(1 for w in g.adjacency[v] if w in bset) for v in bset}
    order: list[int] = []
    seen: set[int] = set()
    for root in sorted(range(h.n), key=lambda i: (-h.degree(i), i)):
        if root in seen:
            continue
        seen.add(root)
        queue = deque([root])
        while queue:
            i = queue.popleft()
            order.append(i)
            for j in h.adjacency[i]:
                if j not in seen:
                    seen.add(j)
                    queue.append(j)
    psi = [-1] * h.n
    blocked: set[int] = set()

    def pick(pool: Iterable[int], need: int) -> int | None:
        ok = [v for v in pool if v not in blocked and deg_b[v] >= need]
        if not ok:
            return None
        roomy = [v for v in ok if deg_b[v] > need]
        return rng.choice(sorted(roomy or ok))

    for i in order:
        need = h.degree(i)
        placed_nbrs = [psi[j] for j in h.adjacency[i] if psi[j] >= 0]
        if placed_nbrs:
            maps = [_distances(g.adjacency, bset, v, len(bset)) for v in placed_nbrs]
            far = 4 * len(bset)
            score = {v: sum(m.get(v, far) for m in maps) for v in bset}
            ok = [v for v in bset if v not in blocked and deg_b[v] >= need]
            if not ok:
                return None
            best = min(score[v] for v in ok)
            choice = pick((v for v in ok if score[v] == best), need)
        else:
            choice = pick(bset, need)
        if choice is None:
            return None
        psi[i] = choice
        blocked |= _ball(g.adjacency, bset, choice, spacing - 1)
    return psi


def _state(length: int, min_len: int) -> int:
    # lengths below min_len are tracked exactly; beyond it only parity matters
    return length if length < min_len else min_len + (length - min_len) % 2


def _route_bfs(g: Graph, allowed: set[int], src: int, dst: int, min_len: int,
               max_len: int, rng: random.Random) -> tuple[int, ...] | None:
    goal = (dst, min_len)
    start = (src, 0)
    parent = {start: None}
    depth = {start: 0}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        v, s = cur
        if depth[cur] >= max_len:
            continue
        nbrs = list(g.adjacency[v])
        rng.shuffle(nbrs)
        for w in nbrs:
            if w != dst and w not in allowed:
                continue
            nl = depth[cur] + 1
            nxt = (w, _state(nl, min_len))
            if w == dst and nxt != goal:
                continue
            if nxt in parent:
                continue
            parent[nxt] = cur
            depth[nxt] = nl
            if nxt == goal:
                path = []
                node = nxt
                while node is not None:
                    path.append(node[0])
                    node = parent[node]
                path.reverse()
                if len(set(path)) == len(path):
                    return tuple(path)
                return None
            queue.append(nxt)
    return None


def _route_dfs(g: Graph, allowed: set[int], src: int, dst: int, min_len: int,
               max_len: int, rng: random.Random, node_budget: int = 20000) -> tuple[int, ...] | None:
    # simple-path search by increasing odd target length
    for target in range(min_len, max_len + 1, 2):
        budget = [node_budget]
        path = [src]
        on_path = {src}

        def go(v: int) -> bool:
            budget[0] -= 1
            if budget[0] < 0:
                return False
            if len(path) - 1 == target - 1:
                if g.has_edge(v, dst):
                    path.append(dst)
                    return True
                return False
            nbrs = [w for w in g.adjacency[v] if w in allowed and w not in on_path]
            rng.shuffle(nbrs)
            for w in nbrs:
                path.append(w)
                on_path.add(w)
                if go(w):
                    return True
                path.pop()
                on_path.discard(w)
            return False

        if target == 1:
            if g.has_edge(src, dst):
                return (src, dst)
            continue
        if go(src):
            return tuple(path)
    return None


def _route(g: Graph, h: Graph, psi: Sequence[int], free: set[int], demand: Sequence[int],
           edge: Edge, spec: SubdivisionSpec, rng: random.Random) -> tuple[int, ...] | None:
    a, c = edge
    src, dst = psi[a], psi[c]
    # first try to keep clear of the neighbours of branch vertices that still need paths
    reserved = {w for i in range(h.n) if demand[i] and i not in (a, c) for w in g.adjacency[psi[i]]}
    for allowed in (free - reserved, free):
        path = _route_bfs(g, allowed, src, dst, spec.min_len, spec.max_len, rng)
        if path is None:
            path = _route_dfs(g, allowed, src, dst, spec.min_len, spec.max_len, rng)
        if path is not None:
            return path
    return None


def _route_all(g: Graph, h: Graph, psi: Sequence[int], bset: set[int], order: Sequence[Edge],
               spec: SubdivisionSpec, rng: random.Random) -> tuple[dict, Edge | None]:
    free = bset - set(psi)
    paths: dict[Edge, tuple[int, ...]] = {}
    demand = [h.degree(i) for i in range(h.n)]

    def commit(e: Edge, path: tuple[int, ...]) -> None:
        paths[e] = path
        free.difference_update(path[1:-1])
        demand[e[0]] -= 1
        demand[e[1]] -= 1

    def release(e: Edge) -> tuple[int, ...]:
        path = paths.pop(e)
        free.update(path[1:-1])
        demand[e[0]] += 1
        demand[e[1]] += 1
        return path

    for e in order:
        path = _route(g, h, psi, free, demand, e, spec, rng)
        if path is not None:
            commit(e, path)
            continue
        # rip up one earlier path, most recent first, and route it again afterwards
        for old in reversed(list(paths)):
            saved = release(old)
            path = _route(g, h, psi, free, demand, e, spec, rng)
            if path is not None:
                commit(e, path)
                again = _route(g, h, psi, free, demand, old, spec, rng)
                if again is not None:
                    commit(old, again)
                    break
                release(e)
            commit(old, saved)
        if e not in paths:
            return paths, e
    return paths, None


def embed_topological(g: Graph, b: Iterable[int], spec: SubdivisionSpec, seed: int = 0,
                      budget: int = 20, orders_per_placement: int = 4,
                      exhaustive_limit: int = 16) -> Embedding:
    """Route an odd subdivision of ``spec.h`` through G[B].

    Branch vertices are placed greedily, pairwise at least four apart on the
    first attempts and three apart afterwards, each as close as possible to
    its placed H-neighbours. Each H-edge, hardest first, then gets a shortest
    walk of odd length at least ``min_len`` avoiding everything already used;
    a walk that revisits a vertex falls back to a bounded simple-path search.
    A stuck edge may evict one earlier path and re-route it afterwards.
    Each placement is tried with ``orders_per_placement`` edge orders before
    a fresh placement; there are ``budget`` placements in all. When these
    fail and |B| <= ``exhaustive_limit``, a complete search decides.
    """
    h = spec.h
    bset = set(b)
    need = h.n + h.m * (spec.min_len - 1)
    if len(bset) < need:
        raise EmbeddingError(f"|B|={len(bset)} cannot hold a subdivision with every path "
                             f"of length >= {spec.min_len} ({need} vertices)", None, 0)
    rng = random.Random(seed)
    hedges = sorted(h.sorted_edges, key=lambda e: (-(h.degree(e[0]) + h.degree(e[1])), e))
    stuck: Edge | None = None
    for attempt in range(budget):
        psi = None
        # wide spacing costs path length, so only the first attempts use it
        first = 4 if attempt < max(1, budget // 4) else 3
        for spacing in range(first, 0, -1):
            psi = _place(g, bset, h, rng, spacing)
            if psi is not None:
                break
        if psi is None:
            raise EmbeddingError("no placement of branch vertices in G[B]", None, attempt + 1)
        for k in range(orders_per_placement):
            order = list(hedges)
            if attempt or k:
                order.sort(key=lambda e: (-(h.degree(e[0]) + h.degree(e[1])), rng.random()))
            paths, stuck = _route_all(g, h, psi, bset, order, spec, rng)
            if stuck is None:
                emb = Embedding(tuple(psi), paths)
                assert verify_embedding(g, bset, spec, emb)
                return emb
    if len(bset) <= exhaustive_limit:
        try:
            emb = embed_exhaustive(g, bset, spec)
        except EmbeddingError:
            emb = None
        else:
            if emb is None:
                raise EmbeddingError("no odd subdivision exists in G[B] (complete search)",
                                     stuck, budget)
        if emb is not None:
            return emb
    raise EmbeddingError(f"embedding budget of {budget} attempts exhausted", stuck, budget)


# --------------------------------------------------------------------------
# exhaustive router (small graphs only)


def embed_exhaustive(g: Graph, b: Iterable[int], spec: SubdivisionSpec,
                     max_states: int = 2_000_000) -> Embedding | None:
    """Complete search over injective placements and simple odd paths.

    Intended as a test oracle on graphs with a few dozen vertices; raises
    ``EmbeddingError`` if ``max_states`` search nodes are exceeded.
    """
    h = spec.h
    bverts = sorted(set(b))
    bset = set(bverts)
    hedges = list(h.sorted_edges)
    counter = [0]

    def tick() -> None:
        counter[0] += 1
        if counter[0] > max_states:
            raise EmbeddingError("exhaustive search state budget exceeded")

    def paths_between(src: int, dst: int, blocked: set[int]):
        path = [src]
        seen = {src}

        def rec(v: int):
            tick()
            length = len(path) - 1
            for w in g.adjacency[v]:
                if w == dst:
                    if (length + 1) % 2 == 1 and length + 1 >= spec.min_len:
                        yield tuple(path) + (dst,)
                    continue
                if w in bset and w not in blocked and w not in seen and length + 1 < spec.max_len:
                    path.append(w)
                    seen.add(w)
                    yield from rec(w)
                    path.pop()
                    seen.discard(w)

        yield from rec(src)

    def route(k: int, psi: list[int], used: set[int], acc: dict) -> dict | None:
        if k == len(hedges):
            return dict(acc)
        a, c = hedges[k]
        for p in paths_between(psi[a], psi[c], used):
            inner = set(p[1:-1])
            acc[(a, c)] = p
            res = route(k + 1, psi, used | inner, acc)
            if res is not None:
                return res
            del acc[(a, c)]
        return None

    def place(i: int, psi: list[int]) -> Embedding | None:
        if i == h.n:
            res = route(0, psi, set(psi), {})
            return None if res is None else Embedding(tuple(psi), res)
        for v in bverts:
            tick()
            if v in psi[:i]:
                continue
            psi[i] = v
            res = place(i + 1, psi)
            if res is not None:
                return res
        psi[i] = -1
        return None

    return place(0, [-1] * h.n)
