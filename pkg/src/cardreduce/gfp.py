"""Incremental echelon form over GF(p) with numba kernels on int64."""

from __future__ import annotations

import numpy as np
from numba import njit

def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


def inv_mod(a: int, p: int) -> int:
    return pow(int(a) % p, p - 2, p)


@njit(cache=True)
def _inv(a, p):
    result = 1
    e = p - 2
    base = a % p
    while e > 0:
        if e & 1:
            result = result * base % p
        base = base * base % p
        e >>= 1
    return result


@njit(cache=True)
def _rref_inplace(a, p):
    k, n = a.shape
    piv = np.empty(k, np.int64)
    r = 0
    for c in range(n):
        if r == k:
            break
        sel = -1
        for i in range(r, k):
            if a[i, c] != 0:
                sel = i
                break
        if sel < 0:
            continue
        if sel != r:
            for j in range(c, n):
                t = a[r, j]
                a[r, j] = a[sel, j]
                a[sel, j] = t
        inv = _inv(a[r, c], p)
        for j in range(c, n):
            a[r, j] = a[r, j] * inv % p
        for i in range(k):
            if i != r:
                f = a[i, c]
                if f != 0:
                    for j in range(c, n):
                        a[i, j] = (a[i, j] - f * a[r, j]) % p
        piv[r] = c
        r += 1
    return r, piv[:r]


def rref_modp(mat: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """RREF of ``mat`` over GF(p): (non-zero rows, pivot columns)."""
    a = np.mod(np.asarray(mat, dtype=np.int64), p)
    r, piv = _rref_inplace(a, p)
    return a[:r], piv


@njit(cache=True)
def _reduce_rows(work, rows, piv, rank, p):
    # rows are in insertion order and each vanishes on all earlier pivots, so
    # one sweep clears every pivot; entries are reduced lazily since the
    # accumulated products stay far below the int64 range
    k, n = work.shape
    for i in range(k):
        w = work[i]
        for r in range(rank):
            c = piv[r]
            f = w[c] % p
            if f != 0:
                row = rows[r]
                for j in range(c, n):
                    w[j] -= f * row[j]
        for j in range(n):
            w[j] %= p


class RowSpace:
    """Row space of a growing set of vectors, kept in block echelon form.

    Each ``add`` appends one block in RREF whose rows vanish on the pivots of
    every earlier block. Reducing against the rows in insertion order
    therefore clears all pivots without ever rewriting old rows. The pivot of
    a row is its first non-zero column.
    """

    def __init__(self, ncols: int, p: int, capacity: int = 64):
        if ncols * float(p - 1) ** 2 >= 2.0 ** 62:
            raise ValueError(f"p={p} with {ncols} columns would overflow int64 accumulation")
        self.ncols = ncols
        self.p = p
        self._rows = np.zeros((capacity, ncols), dtype=np.int64)
        self._piv = np.zeros(capacity, dtype=np.int64)
        self.rank = 0
        self.pivots: list[int] = []
        self.pivot_set: set[int] = set()

    @property
    def rows(self) -> np.ndarray:
        return self._rows[: self.rank]

    def reduce(self, batch: np.ndarray) -> np.ndarray:
        """Remainder of each row of ``batch`` modulo the current span."""
        work = np.mod(np.atleast_2d(np.asarray(batch, dtype=np.int64)), self.p)
        if work.size and self.rank:
            work = np.ascontiguousarray(work)
            _reduce_rows(work, self._rows, self._piv, self.rank, self.p)
        return work

    def contains(self, vec: np.ndarray) -> bool:
        return not self.reduce(vec[None, :]).any()

    def add(self, batch: np.ndarray) -> np.ndarray:
        """Insert ``batch`` into the span and return the new basis rows."""
        work = self.reduce(batch)
        work = work[work.any(axis=1)]
        if not work.shape[0]:
            return np.zeros((0, self.ncols), dtype=np.int64)
        r, piv = _rref_inplace(work, self.p)
        new = work[:r]
        need = self.rank + r
        if need > self._rows.shape[0]:
            cap = max(need, 2 * self._rows.shape[0])
            grown = np.zeros((cap, self.ncols), dtype=np.int64)
            grown[: self.rank] = self._rows[: self.rank]
            self._rows = grown
            gp = np.zeros(cap, dtype=np.int64)
            gp[: self.rank] = self._piv[: self.rank]
            self._piv = gp
        self._rows[self.rank: need] = new
        self._piv[self.rank: need] = piv
        self.rank = need
        self.pivots.extend(int(c) for c in piv)
        self.pivot_set.update(int(c) for c in piv)
        return new
