"""Vertex partition with every neighbourhood split in a fixed proportion.

Finds A with ``(c - gamma) d <= |N(v) & A| <= (c + gamma) d`` for all v by
resampling: each vertex joins A independently with probability c, and while a
vertex v is outside its window the coins of N(v) are redrawn (lowest violated
index first). A full redraw happens every ``restart_every`` resamples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .graph import Graph

# float slack for the window comparisons, c*d is not always representable
_EPS = 1e-9


class PartitionError(ValueError):
    """Invalid partition parameters."""


class NonConvergence(RuntimeError):
    def __init__(self, msg: str, resamples: int, restarts: int, violated: int):
        super().__init__(msg)
        self.resamples = resamples
        self.restarts = restarts
        self.violated = violated


@dataclass(frozen=True)
class Partition:
    A: frozenset[int]
    B: frozenset[int]
    c: float
    gamma: float
    iterations: int
    restarts: int = 0

    def as_dict(self) -> dict:
        return {"A": sorted(self.A), "B": sorted(self.B), "c": self.c, "gamma": self.gamma,
                "iterations": self.iterations, "restarts": self.restarts}


def window(d: int, c: float, gamma: float) -> tuple[float, float]:
    return (c - gamma) * d, (c + gamma) * d


class ResamplingState:
    """Coins X (membership in A) and neighbour counts Y = A_G X over CSR arrays."""

    def __init__(self, indptr: np.ndarray, indices: np.ndarray, c: float,
                 rng: np.random.Generator):
        self.indptr, self.indices = indptr, indices
        self.n = len(indptr) - 1
        self.c = c
        self.rng = rng
        self.redraw()

    def redraw(self) -> None:
        self.x = (self.rng.random(self.n) < self.c).astype(np.int64)
        self.y = self.counts(self.x)

    def counts(self, x: np.ndarray) -> np.ndarray:
        vals = x[self.indices]
        csum = np.concatenate(([0], np.cumsum(vals)))
        return csum[self.indptr[1:]] - csum[self.indptr[:-1]]

    def neighbours(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def resample(self, v: int) -> None:
        nb = self.neighbours(v)
        new = (self.rng.random(len(nb)) < self.c).astype(np.int64)
        delta = new - self.x[nb]
        self.x[nb] = new
        for u, dl in zip(nb[delta != 0].tolist(), delta[delta != 0].tolist()):
            self.y[self.neighbours(u)] += dl


@njit(cache=True)
def _resample_loop(indptr, indices, c, lo, hi, seed, max_rounds, restart_every):
    np.random.seed(seed)
    n = len(indptr) - 1
    x = np.zeros(n, np.int64)
    y = np.zeros(n, np.int64)
    resamples = 0
    restarts = 0
    since = 0
    fresh = True
    while True:
        if fresh:
            for v in range(n):
                x[v] = 1 if np.random.random() < c else 0
            for v in range(n):
                s = 0
                for k in range(indptr[v], indptr[v + 1]):
                    s += x[indices[k]]
                y[v] = s
            fresh = False
        bad = -1
        nbad = 0
        for v in range(n):
            if y[v] < lo or y[v] > hi:
                if bad < 0:
                    bad = v
                nbad += 1
        if bad < 0:
            return x, resamples, restarts, 0
        if resamples >= max_rounds:
            return x, resamples, restarts, nbad
        if since >= restart_every:
            restarts += 1
            since = 0
            fresh = True
            continue
        for k in range(indptr[bad], indptr[bad + 1]):
            u = indices[k]
            new = 1 if np.random.random() < c else 0
            delta = new - x[u]
            if delta != 0:
                x[u] = new
                for kk in range(indptr[u], indptr[u + 1]):
                    y[indices[kk]] += delta
        resamples += 1
        since += 1


def find_partition_csr(indptr: np.ndarray, indices: np.ndarray, d: int, c: float,
                       gamma: float, seed: int = 0, max_rounds: int = 1_000_000,
                       restart_every: int | None = None) -> Partition:
    if c - gamma <= 0:
        raise PartitionError(f"c - gamma must be positive (c={c}, gamma={gamma})")
    if not 0 < c <= 1 or gamma <= 0:
        raise PartitionError(f"need 0 < c <= 1 and gamma > 0 (c={c}, gamma={gamma})")
    n = len(indptr) - 1
    lo, hi = window(d, c, gamma)
    lo, hi = lo - _EPS, hi + _EPS
    restart_every = restart_every or 50 * max(n, 1)
    x, resamples, restarts, nbad = _resample_loop(
        np.asarray(indptr, np.int64), np.asarray(indices, np.int64), float(c), lo, hi,
        int(seed) % 2 ** 32, int(max_rounds), int(restart_every))
    if nbad:
        raise NonConvergence(
            f"{nbad} vertices outside [{lo:.3f}, {hi:.3f}] after {resamples} resamples",
            int(resamples), int(restarts), int(nbad))
    a = frozenset(np.flatnonzero(x).tolist())
    return Partition(a, frozenset(range(n)) - a, c, gamma, int(resamples), int(restarts))


def find_partition(g: Graph, d: int, c: float, gamma: float, seed: int = 0,
                   max_rounds: int = 1_000_000, restart_every: int | None = None) -> Partition:
    if g.regular_degree() != d:
        raise PartitionError(f"graph is not {d}-regular")
    indptr, indices = g.csr()
    return find_partition_csr(indptr, indices, d, c, gamma, seed, max_rounds, restart_every)


def verify_partition_csr(indptr: np.ndarray, indices: np.ndarray, d: int, p: Partition) -> bool:
    n = len(indptr) - 1
    if p.A | p.B != frozenset(range(n)) or p.A & p.B:
        return False
    x = np.zeros(n, dtype=np.int64)
    x[list(p.A)] = 1
    csum = np.concatenate(([0], np.cumsum(x[indices])))
    y = csum[indptr[1:]] - csum[indptr[:-1]]
    lo, hi = window(d, p.c, p.gamma)
    return bool(np.all((y >= lo - _EPS) & (y <= hi + _EPS)))


def verify_partition(g: Graph, d: int, p: Partition) -> bool:
    if any(not 0 <= v < g.n for v in p.A):
        return False
    return verify_partition_csr(*g.csr(), d, p)


def circulant_csr(n: int, d: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """CSR arrays of a random d-regular circulant graph on Z_n.

    Connection set is {+-s} for d/2 distinct random shifts s in 1..(n-1)/2;
    used for the high-degree regime where building a Graph object is wasteful.
    """
    if d % 2 or n % 2 == 0 or d >= n:
        raise PartitionError("circulant construction needs even d < n and odd n")
    rng = np.random.default_rng(seed)
    shifts = rng.choice(np.arange(1, (n - 1) // 2 + 1), size=d // 2, replace=False)
    offs = np.sort(np.concatenate((shifts, n - shifts)))
    indices = ((np.arange(n)[:, None] + offs[None, :]) % n).ravel()
    indptr = np.arange(n + 1, dtype=np.int64) * d
    return indptr, indices.astype(np.int64)
