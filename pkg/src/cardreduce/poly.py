"""Sparse polynomials with exact rational coefficients over named variables.

A monomial is a sorted tuple of variables; repeats encode powers, so raw
(non-multilinear) products are representable. Variables only need to be
hashable and totally ordered.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Any, Callable, Hashable, Iterable, Mapping

Monomial = tuple
Coef = Fraction

ONE: Monomial = ()


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    return tuple(sorted(a + b))


def mono_ml(a: Monomial) -> Monomial:
    """Multilinear reduction of a monomial under x^2 = x."""
    return tuple(sorted(set(a)))


def mono_key(m: Monomial) -> tuple:
    # canonical order: higher degree first, then lexicographic
    return (-len(m), m)


class Poly:
    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, Any] | Iterable[tuple[Monomial, Any]] = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Monomial, Fraction] = {}
        for m, c in items:
            m = tuple(sorted(m))
            acc[m] = acc.get(m, Fraction(0)) + Fraction(c)
        self.terms: dict[Monomial, Fraction] = {m: c for m, c in acc.items() if c != 0}
        self._hash: int | None = None

    @classmethod
    def const(cls, c: Any) -> "Poly":
        return cls({ONE: c})

    @classmethod
    def var(cls, v: Hashable) -> "Poly":
        return cls({(v,): 1})

    # arithmetic -----------------------------------------------------------

    def __add__(self, other: Any) -> "Poly":
        other = _lift(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return Poly(out)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: Any) -> "Poly":
        return self + (-_lift(other))

    def __rsub__(self, other: Any) -> "Poly":
        return _lift(other) - self

    def __mul__(self, other: Any) -> "Poly":
        if not isinstance(other, Poly):
            c = Fraction(other)
            return Poly({m: c * k for m, k in self.terms.items()})
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = mono_mul(m1, m2)
                out[m] = out.get(m, Fraction(0)) + c1 * c2
        return Poly(out)

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Poly):
            try:
                other = _lift(other)
            except (TypeError, ValueError):
                return NotImplemented
        return self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __repr__(self) -> str:
        return f"Poly({format_poly(self, str)})"

    # structure --------------------------------------------------------------

    @property
    def degree(self) -> int:
        return max((len(m) for m in self.terms), default=-1)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not m for m in self.terms)

    def constant(self) -> Fraction:
        return self.terms.get(ONE, Fraction(0))

    def variables(self) -> set:
        return {v for m in self.terms for v in m}

    def is_multilinear(self) -> bool:
        return all(len(set(m)) == len(m) for m in self.terms)

    def multilinear(self) -> "Poly":
        return Poly((mono_ml(m), c) for m, c in self.terms.items())

    def sorted_terms(self) -> list[tuple[Monomial, Fraction]]:
        return sorted(self.terms.items(), key=lambda mc: mono_key(mc[0]))

    def monic(self) -> "Poly":
        """Scale so the leading coefficient (canonical order) is 1."""
        if not self.terms:
            return self
        lead = self.sorted_terms()[0][1]
        return self * (1 / lead)

    def substitute(self, images: Mapping[Hashable, "Poly"]) -> "Poly":
        """Replace each variable by its image; unmapped variables stay."""
        out = Poly()
        cache: dict[Hashable, Poly] = {}
        for m, c in self.terms.items():
            term = Poly.const(c)
            for v in m:
                if v not in cache:
                    cache[v] = images.get(v, Poly.var(v))
                term = term * cache[v]
            out = out + term
        return out

    def evaluate(self, values: Mapping[Hashable, Any]) -> Fraction:
        total = Fraction(0)
        for m, c in self.terms.items():
            t = c
            for v in m:
                t *= values[v]
            total += t
        return total


def _lift(x: Any) -> Poly:
    if isinstance(x, Poly):
        return x
    return Poly.const(x)


def format_coef(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def format_poly(p: Poly, name: Callable[[Any], str]) -> str:
    if not p.terms:
        return "0"
    parts = []
    for m, c in p.sorted_terms():
        if m:
            parts.append(f"{format_coef(c)}*{'.'.join(name(v) for v in m)}")
        else:
            parts.append(format_coef(c))
    return " + ".join(parts)


def parse_poly(text: str, var: Callable[[str], Any]) -> Poly:
    text = text.strip()
    if text == "0":
        return Poly()
    terms = []
    for chunk in text.split(" + "):
        chunk = chunk.strip()
        if "*" in chunk:
            c, mono = chunk.split("*", 1)
            terms.append((tuple(var(s) for s in mono.split(".")), Fraction(c)))
        else:
            terms.append(((), Fraction(chunk)))
    return Poly(terms)
