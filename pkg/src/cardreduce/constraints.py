"""Cardinality / perfect-matching constraint systems and affine restrictions.

Card(G, b) has one variable x_e per edge, the booleanity axioms
x_e (1 - x_e) = 0 and one vertex axiom sum_{e ~ v} x_e - b_v = 0 per vertex.
With ``twins`` on, every x_e also gets a partner xb_e tied by 1 - x_e - xb_e = 0.
Coefficients stay exact rationals throughout.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .graph import Edge, Graph, norm_edge
from .poly import Poly, format_poly, parse_poly

EDGE = "edge-var"
TWIN = "twin-var"

TAGS = ("booleanity", "vertex", "twin-link", "other")


class ConstraintError(ValueError):
    """Malformed system, restriction or variable map."""


class DanglingVariableError(ConstraintError):
    pass


class MapMismatchError(ConstraintError):
    pass


class VariableId(NamedTuple):
    kind: str
    edge: Edge

    @property
    def name(self) -> str:
        prefix = "x" if self.kind == EDGE else "xb"
        return f"{prefix}_{self.edge[0]}_{self.edge[1]}"

    def partner(self) -> "VariableId":
        return VariableId(TWIN if self.kind == EDGE else EDGE, self.edge)


def edge_var(u: int, v: int) -> VariableId:
    return VariableId(EDGE, norm_edge(u, v))


def twin_var(u: int, v: int) -> VariableId:
    return VariableId(TWIN, norm_edge(u, v))


_NAME = re.compile(r"(xb|x)_(\d+)_(\d+)")


def parse_var(name: str) -> VariableId:
    m = _NAME.fullmatch(name.strip())
    if not m:
        raise ConstraintError(f"bad variable name {name!r}")
    kind = TWIN if m.group(1) == "xb" else EDGE
    return VariableId(kind, norm_edge(int(m.group(2)), int(m.group(3))))


def var_name(v: VariableId) -> str:
    return v.name


@dataclass(frozen=True)
class PolyEquation:
    poly: Poly
    tag: str = "other"

    def is_trivial(self) -> bool:
        return self.poly.is_zero()

    def is_contradiction(self) -> bool:
        return self.poly.is_constant() and not self.poly.is_zero()


@dataclass(frozen=True)
class ConstraintSystem:
    vars: tuple[VariableId, ...]
    equations: tuple[PolyEquation, ...]
    source: Graph | None = field(default=None, compare=False)
    b: tuple[int, ...] | None = field(default=None, compare=False)
    twins: bool = False

    def polys(self) -> list[Poly]:
        return [e.poly for e in self.equations]

    def by_tag(self, tag: str) -> list[PolyEquation]:
        return [e for e in self.equations if e.tag == tag]

    def edge_vars(self) -> list[VariableId]:
        return [v for v in self.vars if v.kind == EDGE]

    def has_contradiction(self) -> bool:
        return any(e.is_contradiction() for e in self.equations)

    def canonical_set(self) -> frozenset[Poly]:
        return frozenset(e.poly for e in normalize(self).equations)


def booleanity(v: VariableId) -> Poly:
    x = Poly.var(v)
    return x * (1 - x)


def encode_card(g: Graph, b: Sequence[int], twins: bool = False) -> ConstraintSystem:
    if len(b) != g.n:
        raise ConstraintError(f"b has {len(b)} entries for {g.n} vertices")
    edges = g.sorted_edges
    xs = [VariableId(EDGE, e) for e in edges]
    vars_ = list(xs)
    eqs = [PolyEquation(booleanity(x), "booleanity") for x in xs]
    if twins:
        tw = [VariableId(TWIN, e) for e in edges]
        vars_ += tw
        eqs += [PolyEquation(booleanity(x), "booleanity") for x in tw]
    for v in range(g.n):
        inc = Poly({(edge_var(v, w),): 1 for w in g.adjacency[v]})
        eqs.append(PolyEquation(inc - b[v], "vertex"))
    if twins:
        for e in edges:
            eqs.append(PolyEquation(1 - Poly.var(VariableId(EDGE, e)) - Poly.var(VariableId(TWIN, e)),
                                    "twin-link"))
    return ConstraintSystem(tuple(sorted(vars_)), tuple(eqs), g, tuple(int(x) for x in b), twins)


def encode_pm(g: Graph, twins: bool = False) -> ConstraintSystem:
    return encode_card(g, [1] * g.n, twins)


# --------------------------------------------------------------------------
# normalisation and equivalence


def _canon(eq: PolyEquation) -> PolyEquation:
    p = eq.poly
    # booleanity stays raw (it is what licenses multilinear reduction elsewhere)
    if eq.tag != "booleanity":
        p = p.multilinear()
    return PolyEquation(p.monic(), eq.tag)


def normalize(cs: ConstraintSystem) -> ConstraintSystem:
    """Canonical multilinear monic equations; 0 = 0 dropped, duplicates collapsed.

    Constant non-zero equations are kept (as ``1 = 0``) and flagged by
    ``PolyEquation.is_contradiction``.
    """
    seen: dict[Poly, PolyEquation] = {}
    for eq in cs.equations:
        c = _canon(eq)
        if c.is_trivial() or c.poly in seen:
            continue
        seen[c.poly] = c
    eqs = tuple(sorted(seen.values(), key=lambda e: (TAGS.index(e.tag) if e.tag in TAGS else 9,
                                                      _poly_key(e.poly))))
    return ConstraintSystem(cs.vars, eqs, cs.source, cs.b, cs.twins)


def _poly_key(p: Poly) -> tuple:
    return tuple((tuple(m), c) for m, c in p.sorted_terms())


def check_equiv(cs1: ConstraintSystem, cs2: ConstraintSystem,
                var_map: Mapping[VariableId, VariableId]) -> bool:
    """Normalised cs1, renamed through var_map, equals normalised cs2 as a set."""
    v1, v2 = set(cs1.vars), set(cs2.vars)
    if set(var_map) != v1:
        raise MapMismatchError("variable map domain differs from the first system's variables")
    image = set(var_map.values())
    if len(image) != len(var_map) or image != v2:
        raise MapMismatchError("variable map is not a bijection onto the second system's variables")
    ren = {a: Poly.var(b) for a, b in var_map.items()}
    a = {_canon(PolyEquation(e.poly.substitute(ren), e.tag)).poly for e in cs1.equations}
    b = {_canon(e).poly for e in cs2.equations}
    a.discard(Poly())
    b.discard(Poly())
    return a == b


def identity_map(cs: ConstraintSystem) -> dict[VariableId, VariableId]:
    return {v: v for v in cs.vars}


# --------------------------------------------------------------------------
# restrictions


@dataclass(frozen=True)
class Lit:
    """Image of a variable: a constant, a target variable, or its negation."""

    kind: str  # "const0" | "const1" | "literal" | "negliteral"
    var: VariableId | None = None

    def poly(self) -> Poly:
        if self.kind == "const0":
            return Poly()
        if self.kind == "const1":
            return Poly.const(1)
        if self.kind == "literal":
            return Poly.var(self.var)
        if self.kind == "negliteral":
            return 1 - Poly.var(self.var)
        raise ConstraintError(f"unknown literal kind {self.kind!r}")

    def negate(self) -> "Lit":
        flip = {"const0": "const1", "const1": "const0",
                "literal": "negliteral", "negliteral": "literal"}
        return Lit(flip[self.kind], self.var)

    def encode(self) -> str:
        if self.kind == "const0":
            return "0"
        if self.kind == "const1":
            return "1"
        prefix = "~" if self.kind == "negliteral" else ""
        return prefix + self.var.name

    @classmethod
    def decode(cls, text: str) -> "Lit":
        text = text.strip()
        if text == "0":
            return ZERO
        if text == "1":
            return ONE
        if text.startswith("~"):
            return cls("negliteral", parse_var(text[1:]))
        return cls("literal", parse_var(text))


ZERO = Lit("const0")
ONE = Lit("const1")


def lit(v: VariableId) -> Lit:
    return Lit("literal", v)


def neglit(v: VariableId) -> Lit:
    return Lit("negliteral", v)


@dataclass(frozen=True)
class Restriction:
    assignment: Mapping[VariableId, Lit]

    def targets(self) -> set[VariableId]:
        return {l.var for l in self.assignment.values() if l.var is not None}

    def images(self, cs: ConstraintSystem) -> dict[VariableId, Poly]:
        out: dict[VariableId, Poly] = {}
        for v in cs.vars:
            if v.kind == EDGE:
                if v not in self.assignment:
                    raise DanglingVariableError(f"restriction does not assign {v.name}")
                out[v] = self.assignment[v].poly()
        for v in cs.vars:
            if v.kind == TWIN:
                # twins always follow their partner
                want = 1 - out[v.partner()] if v.partner() in out else None
                given = self.assignment.get(v)
                if given is not None and want is not None and given.poly() != want:
                    raise ConstraintError(f"{v.name} is not mapped to the complement of its partner")
                if want is None:
                    if given is None:
                        raise DanglingVariableError(f"restriction does not assign {v.name}")
                    want = given.poly()
                out[v] = want
        return out

    def compose_negation(self) -> "Restriction":
        """x -> NOT rho(x) for every assigned variable."""
        return Restriction({v: l.negate() for v, l in self.assignment.items()})

    def to_json(self) -> dict[str, str]:
        return {v.name: l.encode() for v, l in sorted(self.assignment.items())}

    @classmethod
    def from_json(cls, data: Mapping[str, str]) -> "Restriction":
        return cls({parse_var(k): Lit.decode(v) for k, v in data.items()})


def apply_restriction(cs: ConstraintSystem, rho: Restriction) -> ConstraintSystem:
    """Substitute rho into every equation and normalise; tags are kept."""
    images = rho.images(cs)
    eqs = [PolyEquation(e.poly.substitute(images), e.tag) for e in cs.equations]
    targets = sorted({v for p in images.values() for v in p.variables()})
    out = ConstraintSystem(tuple(targets), tuple(eqs), None, None, False)
    return normalize(out)


def complement_instance(cs: ConstraintSystem) -> tuple[Restriction, ConstraintSystem]:
    """Card(G, t) -> Card(G, d - t) via x_e -> 1 - x_e (G must be d-regular)."""
    g = cs.source
    if g is None or cs.b is None:
        raise ConstraintError("complement_instance needs a system built by encode_card")
    d = g.regular_degree()
    if d is None:
        raise ConstraintError("complement_instance needs a regular source graph")
    rho = Restriction({v: neglit(v) for v in cs.vars if v.kind == EDGE})
    new_b = tuple(d - t for t in cs.b)
    restricted = apply_restriction(cs, rho)
    out = ConstraintSystem(restricted.vars, restricted.equations, g, new_b, False)
    return rho, out


# --------------------------------------------------------------------------
# brute-force semantic oracle


class SizeGuardError(ConstraintError):
    pass


def sat_bruteforce(cs: ConstraintSystem, max_vars: int = 24,
                   chunk_bits: int = 16) -> dict[VariableId, int] | None:
    """First 0/1 assignment (in binary counting order) satisfying every equation.

    Twin variables are forced to the complement of their partner; any other
    variable ranges over {0, 1}.
    """
    free = [v for v in cs.vars if not (v.kind == TWIN and v.partner() in cs.vars)]
    k = len(free)
    if k > max_vars:
        raise SizeGuardError(f"{k} free variables exceed guard {max_vars}")
    if cs.has_contradiction():
        return None
    col = {v: i for i, v in enumerate(free)}
    compiled = []
    for e in cs.equations:
        terms = []
        for m, c in e.poly.terms.items():
            idx = []
            for v in m:
                if v in col:
                    idx.append((col[v], False))
                else:
                    idx.append((col[v.partner()], True))
            terms.append((idx, float(c)))
        compiled.append(terms)
    total = 1 << k
    step = 1 << min(k, chunk_bits)
    shifts = np.arange(k, dtype=np.int64)
    for start in range(0, total, step):
        codes = np.arange(start, min(total, start + step), dtype=np.int64)
        bits = ((codes[:, None] >> shifts[None, :]) & 1).astype(np.float64)
        ok = np.ones(len(codes), dtype=bool)
        for terms in compiled:
            val = np.zeros(len(codes))
            for idx, c in terms:
                t = np.full(len(codes), c)
                for i, neg in idx:
                    t = t * ((1 - bits[:, i]) if neg else bits[:, i])
                val += t
            ok &= np.abs(val) < 1e-9
            if not ok.any():
                break
        hits = np.flatnonzero(ok)
        if hits.size:
            code = int(codes[hits[0]])
            assign = {v: (code >> i) & 1 for i, v in enumerate(free)}
            for v in cs.vars:
                if v not in assign:
                    assign[v] = 1 - assign[v.partner()]
            # exact re-check of the float screen
            assert all(e.poly.evaluate(assign) == 0 for e in cs.equations)
            return assign
    return None


def lift_assignment(rho: Restriction, cs: ConstraintSystem,
                    target: Mapping[VariableId, int]) -> dict[VariableId, int]:
    """Assignment of cs's variables induced by a target assignment through rho."""
    images = rho.images(cs)
    return {v: int(p.evaluate(target)) for v, p in images.items()}


# --------------------------------------------------------------------------
# text format


def dump_system(cs: ConstraintSystem) -> str:
    lines = ["#vars " + " ".join(v.name for v in cs.vars)]
    if cs.source is not None:
        g = cs.source
        src = {"n": g.n, "edges": [list(e) for e in g.sorted_edges],
               "b": list(cs.b) if cs.b is not None else None, "twins": cs.twins}
        lines.append("#source " + json.dumps(src, separators=(",", ":")))
    for e in cs.equations:
        lines.append(f"{format_poly(e.poly, var_name)} = 0  ; {e.tag}")
    return "\n".join(lines) + "\n"


def load_system(text: str) -> ConstraintSystem:
    vars_: list[VariableId] = []
    source = b = None
    twins = False
    eqs = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#vars"):
            vars_ = [parse_var(s) for s in line[len("#vars"):].split()]
            continue
        if line.startswith("#source"):
            src = json.loads(line[len("#source"):])
            source = Graph.from_edges(src["n"], src["edges"])
            b = tuple(src["b"]) if src.get("b") is not None else None
            twins = bool(src.get("twins", False))
            continue
        if line.startswith("#"):
            continue
        body, _, tag = line.partition(";")
        lhs, eq, rhs = body.partition("=")
        if not eq or rhs.strip() != "0":
            raise ConstraintError(f"equation line must end with '= 0': {raw!r}")
        eqs.append(PolyEquation(parse_poly(lhs, parse_var), tag.strip() or "other"))
    return ConstraintSystem(tuple(vars_), tuple(eqs), source, b, twins)


def read_system(path: str | Path) -> ConstraintSystem:
    return load_system(Path(path).read_text(encoding="utf-8"))


def write_system(cs: ConstraintSystem, path: str | Path) -> None:
    Path(path).write_text(dump_system(cs), encoding="utf-8")


def system_from_polys(polys: Iterable[Poly], tag: str = "other") -> ConstraintSystem:
    """Ad-hoc system over whatever variables the polynomials mention."""
    ps = list(polys)
    vars_ = sorted({v for p in ps for v in p.variables()})
    return ConstraintSystem(tuple(vars_), tuple(PolyEquation(p, tag) for p in ps))


def all_assignments(vars_: Sequence[VariableId]) -> Iterable[dict[VariableId, int]]:
    for bits in itertools.product((0, 1), repeat=len(vars_)):
        yield dict(zip(vars_, bits))


def parse_b(spec: str, n: int) -> list[int]:
    """``"1"`` (uniform) or a comma list of n integers."""
    parts = [p for p in spec.split(",") if p.strip()]
    if len(parts) == 1:
        return [int(parts[0])] * n
    if len(parts) != n:
        raise ConstraintError(f"b spec has {len(parts)} entries for {n} vertices")
    return [int(p) for p in parts]
