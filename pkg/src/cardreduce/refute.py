"""Degree-bounded Polynomial Calculus decision, SoS certificate checking and a
numerical pseudo-expectation probe.

PC works with multilinear polynomials over GF(p): the booleanity axioms are
built into the representation (x^2 = x). A line of degree at most d - 1 may be
multiplied by a variable; linear combinations are free. The degree-d span is
the closure of the axioms under these rules, and a degree-d refutation exists
iff the constant 1 lies in it.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .constraints import TWIN, ConstraintSystem, parse_var
from .gfp import RowSpace, inv_mod, is_prime
from .poly import Poly, format_coef

DEFAULT_PRIME = 10007
SECOND_PRIME = 65537


class RefuteError(ValueError):
    pass


class BasisGuardError(RefuteError):
    pass


# --------------------------------------------------------------------------
# monomial bookkeeping


class MonomialBasis:
    """Multilinear monomials of degree <= d over ``vars``, as bitmasks.

    Column order: degree descending, then lexicographic in variable index, so
    the constant monomial is the last column and a row's pivot has the row's
    top degree.
    """

    def __init__(self, vars_: Sequence[Hashable], d: int):
        self.vars = list(vars_)
        self.d = d
        self.pos = {v: i for i, v in enumerate(self.vars)}
        k = len(self.vars)
        combos = []
        for deg in range(min(d, k), -1, -1):
            combos.extend(itertools.combinations(range(k), deg))
        self.masks = [sum(1 << i for i in c) for c in combos]
        self.degrees = np.array([len(c) for c in combos], dtype=np.int64)
        self.index = {m: j for j, m in enumerate(self.masks)}
        self.size = len(self.masks)
        self.const_col = self.index[0]

    def mask_of(self, mono: Iterable[Hashable]) -> int:
        m = 0
        for v in mono:
            m |= 1 << self.pos[v]
        return m

    def mult_maps(self, var_index: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(sources without x, their targets m|x, sources containing x)."""
        bit = 1 << var_index
        src_a, tgt_a, src_b = [], [], []
        for j, m in enumerate(self.masks):
            if m & bit:
                src_b.append(j)
            elif self.degrees[j] < self.d:
                src_a.append(j)
                tgt_a.append(self.index[m | bit])
        return (np.array(src_a, dtype=np.int64), np.array(tgt_a, dtype=np.int64),
                np.array(src_b, dtype=np.int64))


def basis_size(k: int, d: int) -> int:
    return sum(math.comb(k, i) for i in range(min(d, k) + 1))


def to_modp(c: Fraction, p: int) -> int:
    if c.denominator % p == 0:
        raise RefuteError(f"coefficient {c} has denominator divisible by p={p}")
    return (c.numerator % p) * inv_mod(c.denominator, p) % p


def pc_axioms(cs: ConstraintSystem) -> list[Poly]:
    """Multilinear forms of the non-booleanity axioms (booleanity is implicit)."""
    out = []
    for e in cs.equations:
        q = e.poly.multilinear()
        if not q.is_zero():
            out.append(q)
    return out


def system_variables(cs: ConstraintSystem) -> list[Hashable]:
    vs = set(cs.vars)
    for e in cs.equations:
        vs |= e.poly.variables()
    return sorted(vs)


# --------------------------------------------------------------------------
# Polynomial Calculus


@dataclass(frozen=True)
class PCResult:
    degree: int
    refuted: bool
    dimension: int
    field: int
    char2: bool = False
    trace: tuple | None = None

    def as_dict(self) -> dict:
        return {"degree": self.degree, "refuted": self.refuted, "dimension": self.dimension,
                "field": self.field, "char2": self.char2}


def _check_prime(p: int, allow_char2: bool) -> None:
    if not is_prime(p):
        raise RefuteError(f"modulus {p} is not prime")
    if p == 2 and not allow_char2:
        raise RefuteError("characteristic 2 requires allow_char2=True")


def pc_degree_decide(cs: ConstraintSystem, d: int, p: int = DEFAULT_PRIME,
                     allow_char2: bool = False, max_basis: int = 2_000_000,
                     batch: int = 512) -> PCResult:
    """Is there a degree-<=d PC refutation of ``cs`` over GF(p)?

    The span starts from every multiple m * q of an axiom with degree <= d.
    Its low part (degree <= d - 1) is then closed under multiplication by
    variables; a second space tracks low vectors whose variable multiples are
    already inside, so each direction is multiplied out once.
    """
    _check_prime(p, allow_char2)
    if d < 0:
        raise RefuteError("degree bound must be non-negative")
    vars_ = system_variables(cs)
    size = basis_size(len(vars_), d)
    if size > max_basis:
        raise BasisGuardError(f"{size} monomials of degree <= {d} exceed guard {max_basis}")
    basis = MonomialBasis(vars_, d)
    space = RowSpace(basis.size, p)
    # low columns form a suffix because columns run by descending degree
    low0 = int(np.count_nonzero(basis.degrees == d)) if d > 0 else 0
    done_low = RowSpace(basis.size - low0, p)

    def result(refuted: bool) -> PCResult:
        return PCResult(d, refuted, space.rank, p, p == 2)

    def refuted() -> bool:
        return basis.const_col in space.pivot_set

    queue: list[np.ndarray] = []

    def absorb(candidates: np.ndarray) -> None:
        new = space.add(candidates)
        if new.shape[0]:
            low = new[~new[:, :low0].any(axis=1)]
            if low.shape[0]:
                queue.append(low)

    axioms = []
    for q in pc_axioms(cs):
        if q.degree > d:
            continue
        axioms.append([(basis.mask_of(m), to_modp(c, p)) for m, c in q.terms.items()])

    rows: list[np.ndarray] = []
    closed: list[np.ndarray] = []

    def flush() -> None:
        if rows:
            absorb(np.array(rows))
            rows.clear()
        if closed:
            done_low.add(np.array(closed)[:, low0:])
            closed.clear()

    for q, qdeg in ((a, max(bin(m).count("1") for m, _ in a)) for a in axioms):
        for j, mask in enumerate(basis.masks):
            if basis.degrees[j] > d - qdeg:
                continue
            vec = np.zeros(basis.size)
            for m, c in q:
                k = basis.index[m | mask]
                vec[k] = (vec[k] + c) % p
            rows.append(vec)
            if basis.degrees[j] < d - qdeg:
                closed.append(vec)
            if len(rows) >= batch:
                flush()
                if refuted():
                    return result(True)
    flush()
    if refuted() or d == 0:
        return result(refuted())

    maps = [basis.mult_maps(i) for i in range(len(vars_))]
    while queue:
        chunk = queue.pop(0)
        fresh = done_low.reduce(chunk[:, low0:]).any(axis=1)
        chunk = chunk[fresh]
        for start in range(0, chunk.shape[0], max(1, batch // len(maps))):
            part = chunk[start:start + max(1, batch // len(maps))]
            if not done_low.reduce(part[:, low0:]).any():
                continue
            prods = []
            for src_a, tgt_a, src_b in maps:
                prod = np.zeros_like(part)
                prod[:, tgt_a] = part[:, src_a]
                prod[:, src_b] += part[:, src_b]
                prods.append(prod)
            done_low.add(part[:, low0:])
            absorb(np.vstack(prods))
            if refuted():
                return result(True)
    return result(refuted())


def pc_degree_search(cs: ConstraintSystem, p: int = DEFAULT_PRIME, d_max: int = 6,
                     d_min: int = 0, **kw: Any) -> int | None:
    """Smallest d in [d_min, d_max] with a degree-d refutation, else None."""
    for d in range(d_min, d_max + 1):
        if pc_degree_decide(cs, d, p, **kw).refuted:
            return d
    return None


# --------------------------------------------------------------------------
# SoS certificates


@dataclass(frozen=True)
class SoSCertificate:
    t_polys: tuple[Poly, ...]
    s_polys: tuple[Poly, ...] = ()


@dataclass(frozen=True)
class SoSCheck:
    valid: bool
    degree: int
    residual: Poly = field(default_factory=Poly)

    def as_dict(self) -> dict:
        return {"valid": self.valid, "degree": self.degree}


def certificate_degree(axioms: Sequence[Poly], cert: SoSCertificate) -> int:
    degs = [t.degree + p.degree for t, p in zip(cert.t_polys, axioms) if not t.is_zero()]
    degs += [2 * s.degree for s in cert.s_polys if not s.is_zero()]
    return max(degs, default=0)


def sos_verify(cs: ConstraintSystem, cert: SoSCertificate) -> SoSCheck:
    """Exact check of sum t_i p_i + sum s_j^2 == -1, with no reduction applied."""
    axioms = cs.polys()
    if len(cert.t_polys) != len(axioms):
        raise RefuteError(f"certificate has {len(cert.t_polys)} multipliers for {len(axioms)} axioms")
    total = Poly()
    for t, p in zip(cert.t_polys, axioms):
        if not t.is_zero():
            total = total + t * p
    for s in cert.s_polys:
        total = total + s * s
    residual = total + 1
    return SoSCheck(residual.is_zero(), certificate_degree(axioms, cert), residual)


def _solve_rational(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    """One solution of a x = b over Q (free variables set to 0), or None."""
    rows = [list(r) + [bb] for r, bb in zip(a, b)]
    ncols = len(a[0]) if a else 0
    piv_cols: list[int] = []
    r = 0
    for c in range(ncols):
        pr = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        piv_cols.append(c)
        r += 1
    if any(all(x == 0 for x in row[:-1]) and row[-1] != 0 for row in rows[r:]):
        return None
    x = [Fraction(0)] * ncols
    for i, c in enumerate(piv_cols):
        x[c] = rows[i][-1]
    return x


def find_certificate(cs: ConstraintSystem, degree: int,
                     squares: Sequence[Poly] = ()) -> SoSCertificate | None:
    """Solve sum t_i p_i = -1 - sum s_j^2 exactly for the multipliers t_i.

    The squares are fixed by the caller; each t_i ranges over multilinear
    monomials of degree <= ``degree`` - deg(p_i). Returns None when the
    linear system has no solution at that degree.
    """
    axioms = cs.polys()
    vars_ = system_variables(cs)
    for s in squares:
        vars_ = sorted(set(vars_) | s.variables())
    unknowns: list[tuple[int, tuple]] = []
    for i, p in enumerate(axioms):
        room = degree - p.degree
        for k in range(0, max(room, -1) + 1):
            for mono in itertools.combinations(vars_, k):
                unknowns.append((i, mono))
    target = Poly.const(-1)
    for s in squares:
        target = target - s * s
    columns = [Poly({mono: 1}) * axioms[i] for i, mono in unknowns]
    monos = sorted({m for c in columns for m in c.terms} | set(target.terms), key=lambda m: (len(m), m))
    row_of = {m: j for j, m in enumerate(monos)}
    a = [[Fraction(0)] * len(unknowns) for _ in monos]
    for col, poly in enumerate(columns):
        for m, c in poly.terms.items():
            a[row_of[m]][col] = c
    b = [target.terms.get(m, Fraction(0)) for m in monos]
    sol = _solve_rational(a, b)
    if sol is None:
        return None
    ts = [Poly() for _ in axioms]
    for (i, mono), x in zip(unknowns, sol):
        if x:
            ts[i] = ts[i] + Poly({mono: x})
    return SoSCertificate(tuple(ts), tuple(squares))


def _poly_to_json(p: Poly) -> list:
    return [[format_coef(c), [v.name if hasattr(v, "name") else str(v) for v in m]]
            for m, c in p.sorted_terms()]


def _poly_from_json(data: list) -> Poly:
    return Poly((tuple(parse_var(v) for v in mono), Fraction(c)) for c, mono in data)


def certificate_to_json(cert: SoSCertificate) -> dict:
    return {"t": [_poly_to_json(t) for t in cert.t_polys],
            "s": [_poly_to_json(s) for s in cert.s_polys]}


def certificate_from_json(data: Mapping) -> SoSCertificate:
    return SoSCertificate(tuple(_poly_from_json(t) for t in data["t"]),
                          tuple(_poly_from_json(s) for s in data.get("s", [])))


def read_certificate(path: str | Path) -> SoSCertificate:
    return certificate_from_json(json.loads(Path(path).read_text(encoding="utf-8")))


# --------------------------------------------------------------------------
# pseudo-expectation probe


@dataclass(frozen=True)
class PseudoExpectation:
    values: dict[tuple, float]
    d: int
    affine_residual: float
    psd_violation: float

    def as_dict(self) -> dict:
        return {"d": self.d, "affine_residual": self.affine_residual,
                "psd_violation": self.psd_violation,
                "values": [[[v.name for v in m], x] for m, x in sorted(self.values.items())]}


@dataclass(frozen=True)
class PESearchResult:
    status: str  # "feasible" | "unknown"
    pe: PseudoExpectation | None
    iterations: int


def eliminate_twins(cs: ConstraintSystem) -> list[Poly]:
    """Axioms over edge variables only: xb -> 1 - x, multilinearised."""
    images = {v: 1 - Poly.var(v.partner()) for v in system_variables(cs) if v.kind == TWIN}
    out = []
    for e in cs.equations:
        q = e.poly.substitute(images).multilinear() if images else e.poly.multilinear()
        if not q.is_zero():
            out.append(q)
    return out


class MomentProblem:
    """Linear data of the degree-d pseudo-expectation feasibility problem."""

    def __init__(self, axioms: Sequence[Poly], vars_: Sequence[Hashable], d: int):
        if d % 2:
            raise RefuteError("pseudo-expectation degree must be even")
        self.d = d
        self.basis = MonomialBasis(vars_, d)
        half = [j for j, deg in enumerate(self.basis.degrees) if deg <= d // 2]
        self.half = half
        hm = [self.basis.masks[j] for j in half]
        self.entry = np.array([[self.basis.index[a | b] for b in hm] for a in hm], dtype=np.int64)
        self.weights = np.bincount(self.entry.ravel(), minlength=self.basis.size).astype(float)
        rows, rhs = [], []
        e0 = np.zeros(self.basis.size)
        e0[self.basis.const_col] = 1.0
        rows.append(e0)
        rhs.append(1.0)
        for q in axioms:
            room = d - q.degree
            if room < 0:
                continue
            qm = [(self.basis.mask_of(m), float(c)) for m, c in q.terms.items()]
            for j, mask in enumerate(self.basis.masks):
                if self.basis.degrees[j] > room:
                    continue
                r = np.zeros(self.basis.size)
                for m, c in qm:
                    r[self.basis.index[m | mask]] += c
                rows.append(r)
                rhs.append(0.0)
        self.A = np.array(rows)
        self.b = np.array(rhs)

    def matrix(self, y: np.ndarray) -> np.ndarray:
        return y[self.entry]

    def project_affine(self, z: np.ndarray) -> np.ndarray:
        winv = 1.0 / self.weights
        aw = self.A * winv
        lam, *_ = np.linalg.lstsq(aw @ self.A.T, self.A @ z - self.b, rcond=None)
        out = z - winv * (self.A.T @ lam)
        # inconsistent equalities only get a least-squares point; keep E[1] = 1
        out[self.basis.const_col] = 1.0
        return out

    def average(self, mat: np.ndarray) -> np.ndarray:
        return np.bincount(self.entry.ravel(), weights=mat.ravel(),
                           minlength=self.basis.size) / self.weights


def _psd_project(mat: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((mat + mat.T) / 2)
    return (v * np.clip(w, 0, None)) @ v.T


def sos_pe_search(cs: ConstraintSystem, d: int, iters: int = 5000,
                  tol: float = 1e-7) -> PESearchResult:
    """Alternating projections between the axiom subspace and the PSD cone.

    Returns "feasible" only when both residuals drop below ``tol``; never
    claims infeasibility.
    """
    axioms = eliminate_twins(cs)
    vars_ = sorted({v for q in axioms for v in q.variables()}
                   | {v for v in system_variables(cs) if v.kind != TWIN})
    prob = MomentProblem(axioms, vars_, d)
    y = prob.project_affine(np.zeros(prob.basis.size))
    aff = psd = math.inf
    it = 0
    for it in range(1, iters + 1):
        y_psd = prob.average(_psd_project(prob.matrix(y)))
        y = prob.project_affine(y_psd)
        aff = float(np.max(np.abs(prob.A @ y - prob.b)))
        psd = float(max(0.0, -np.linalg.eigvalsh(prob.matrix(y))[0]))
        if aff < tol and psd < tol:
            break
    values = {tuple(vars_[i] for i in range(len(vars_)) if mask >> i & 1): float(y[j])
              for j, mask in enumerate(prob.basis.masks)}
    pe = PseudoExpectation(values, d, aff, psd)
    status = "feasible" if aff < tol and psd < tol else "unknown"
    return PESearchResult(status, pe, it)


def pe_affine_consistent(cs: ConstraintSystem, d: int) -> bool:
    """Exact (rational) consistency of the degree-d pseudo-expectation equalities."""
    axioms = eliminate_twins(cs)
    vars_ = sorted({v for q in axioms for v in q.variables()}
                   | {v for v in system_variables(cs) if v.kind != TWIN})
    basis = MonomialBasis(vars_, d)
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    one = [Fraction(0)] * basis.size
    one[basis.const_col] = Fraction(1)
    rows.append(one)
    rhs.append(Fraction(1))
    for q in axioms:
        room = d - q.degree
        if room < 0:
            continue
        for j, mask in enumerate(basis.masks):
            if basis.degrees[j] > room:
                continue
            r = [Fraction(0)] * basis.size
            for m, c in q.terms.items():
                r[basis.index[basis.mask_of(m) | mask]] += c
            rows.append(r)
            rhs.append(Fraction(0))
    return _solve_rational(rows, rhs) is not None
