"""End-to-end construction of a restriction taking Card(G, t) onto PM(H).

Stages: partition V(G) into A and B, embed an odd subdivision of H in G[B],
match the leftover vertices U perfectly, pick a (t-1)-regular spanning
subgraph of what remains, and assemble the restriction. Every stage is
audited, and the result is checked for formula equivalence with PM(H).
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping, Sequence

from .constraints import (ONE, ZERO, Restriction, apply_restriction, check_equiv, edge_var,
                          encode_card, encode_pm, lit, neglit, normalize, ConstraintSystem,
                          PolyEquation)
from .embed import EmbeddingError, SubdivisionSpec, embed_topological, subdivision_vertex_count
from .graph import (Edge, Graph, gen_random_regular, induced_subgraph, named_graph, norm_edge,
                    read_edgelist, spectral_gap)
from .matching import f_factor, perfect_matching
from .partition import NonConvergence, Partition, find_partition, verify_partition
from .poly import Poly
from .refute import DEFAULT_PRIME, pc_degree_search

PROFILES = {
    "desk": {"c": 0.70, "gamma": 0.20, "min_len": 3, "epsilon_check": False},
    "paper": {"c": 0.925, "gamma": 0.025, "min_len": 3, "epsilon_check": True},
}
C_FACTOR = 6
EPSILON = 1 / (100 * C_FACTOR ** 1.5)


class PreconditionError(ValueError):
    """The inputs violate a hypothesis of the construction."""


class StageFailure(RuntimeError):
    def __init__(self, stage: str, msg: str, audit: Mapping[str, Any] | None = None):
        super().__init__(f"{stage}: {msg}")
        self.stage = stage
        self.audit = dict(audit or {})


@dataclass(frozen=True)
class PipelineConfig:
    t: int = 1
    graph_file: str | None = None
    n: int = 151
    d: int = 20
    graph_seed: int = 0
    h_file: str | None = None
    h_name: str = "C7"
    profile: str = "desk"
    c: float | None = None
    gamma: float | None = None
    min_len: int | None = None
    epsilon_check: bool | None = None
    seed: int = 0
    max_rounds: int = 1_000_000
    embed_budget: int = 20
    partition_attempts: int = 3
    allow_fallback: bool = True

    def __post_init__(self) -> None:
        if self.profile not in PROFILES:
            raise PreconditionError(f"unknown profile {self.profile!r}")

    def resolved(self, key: str) -> Any:
        val = getattr(self, key)
        return PROFILES[self.profile][key] if val is None else val

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise PreconditionError(f"unknown config keys: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def from_toml(cls, path: str | Path) -> "PipelineConfig":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        return cls.from_dict(data.get("pipeline", data))

    def load_graph(self) -> Graph:
        if self.graph_file:
            return read_edgelist(self.graph_file)
        return gen_random_regular(self.n, self.d, self.graph_seed)

    def load_pattern(self) -> Graph:
        if self.h_file:
            return read_edgelist(self.h_file)
        return named_graph(self.h_name)


@dataclass
class PipelineReport:
    config: dict
    status: str = "running"  # "ok" | "precondition-failure" | "stage-failure"
    failed_stage: str | None = None
    message: str = ""
    n: int = 0
    d: int = 0
    t: int = 0
    t_effective: int = 0
    complemented: bool = False
    spectral: dict = field(default_factory=dict)
    partition: dict = field(default_factory=dict)
    embedding: dict = field(default_factory=dict)
    matching: list = field(default_factory=list)
    factor: list = field(default_factory=list)
    rho: dict = field(default_factory=dict)
    equiv_ok: bool = False
    audits: dict = field(default_factory=dict)
    deviations: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def to_dict(self, include_timings: bool = True) -> dict:
        out = asdict(self)
        if not include_timings:
            out.pop("timings")
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PipelineReport":
        return cls(**data)


# --------------------------------------------------------------------------
# stages


def _partition_stage(g: Graph, d: int, c: float, gamma: float, seed: int,
                     cfg: "PipelineConfig", report: "PipelineReport") -> tuple[Partition, bool, str]:
    try:
        part = find_partition(g, d, c, gamma, seed=seed, max_rounds=cfg.max_rounds)
        return part, verify_partition(g, d, part), "resampling"
    except NonConvergence as exc:
        if not cfg.allow_fallback:
            raise StageFailure("partition", str(exc), {"resamples": exc.resamples,
                                                      "restarts": exc.restarts,
                                                      "violated": exc.violated})
        part = _fallback_partition(g, d, c, gamma, seed)
        report.deviations.append(f"partition: resampling did not converge ({exc}); "
                                 "used greedy fallback")
        return part, verify_partition(g, d, part), "greedy-fallback"


def _fallback_partition(g: Graph, d: int, c: float, gamma: float, seed: int) -> Partition:
    # grow B in random order while every vertex keeps at least (c - gamma) d
    # neighbours in A; stops at the nominal size (1 - c) n
    rng = random.Random(seed)
    in_a = [True] * g.n
    count_a = [d] * g.n
    floor = math.ceil((c - gamma) * d - 1e-9)
    target = int((1 - c) * g.n)
    order = list(range(g.n))
    rng.shuffle(order)
    moved = 0
    for v in order:
        if moved >= target:
            break
        if all(count_a[w] - 1 >= floor for w in g.adjacency[v]):
            in_a[v] = False
            moved += 1
            for w in g.adjacency[v]:
                count_a[w] -= 1
    a = frozenset(v for v in range(g.n) if in_a[v])
    return Partition(a, frozenset(range(g.n)) - a, c, gamma, 0, 0)


def _path_literals(path: Sequence[int], target: Edge) -> dict[Edge, Any]:
    # odd length: y, ~y, y, ..., y so both end edges carry y
    y = edge_var(*target)
    return {norm_edge(path[i], path[i + 1]): (lit(y) if i % 2 == 0 else neglit(y))
            for i in range(len(path) - 1)}


def vertex_equation_audit(g: Graph, t: int, rho: Restriction, h: Graph,
                          psi: Sequence[int]) -> dict:
    """Each restricted vertex equation is 0=0, or PM(H)'s equation at a branch vertex."""
    cs = encode_card(g, [t] * g.n)
    images = rho.images(cs)
    branch = {v: i for i, v in enumerate(psi)}
    rename = {edge_var(*norm_edge(psi[a], psi[b])): Poly.var(edge_var(a, b))
              for a, b in h.sorted_edges}
    want = {e.poly for e in normalize(encode_pm(h)).by_tag("vertex")}
    bad = []
    # encode_card emits the vertex equations in vertex order
    for v, eq in enumerate(cs.by_tag("vertex")):
        img = normalize(ConstraintSystem((), (PolyEquation(eq.poly.substitute(images), "vertex"),),
                                         None, None, False))
        polys = [e.poly.substitute(rename) for e in img.equations]
        ok = (len(polys) == 1 and polys[0] in want) if v in branch else not polys
        if not ok:
            bad.append(v)
    return {"ok": not bad, "bad_vertices": bad}


def run_construction(cfg: PipelineConfig, g: Graph | None = None,
                     h: Graph | None = None) -> PipelineReport:
    """Build rho with Card(G, t)|rho equivalent to PM(H), auditing every stage.

    Precondition violations and stage failures are recorded in the report
    (``status``/``failed_stage``) rather than raised.
    """
    report = PipelineReport(config=asdict(cfg))
    clock = time.perf_counter()

    def lap(stage: str) -> None:
        nonlocal clock
        now = time.perf_counter()
        report.timings[stage] = round(now - clock, 6)
        clock = now

    try:
        g = g if g is not None else cfg.load_graph()
        h = h if h is not None else cfg.load_pattern()
        _run(cfg, g, h, report, lap)
        report.status = "ok"
    except PreconditionError as exc:
        report.status = "precondition-failure"
        report.message = str(exc)
    except StageFailure as exc:
        report.status = "stage-failure"
        report.failed_stage = exc.stage
        report.message = str(exc)
        report.audits[exc.stage] = exc.audit
    report.timings["total"] = round(sum(v for k, v in report.timings.items() if k != "total"), 6)
    return report


def _run(cfg: PipelineConfig, g: Graph, h: Graph, report: PipelineReport, lap) -> None:
    c, gamma = cfg.resolved("c"), cfg.resolved("gamma")
    min_len, eps_check = cfg.resolved("min_len"), cfg.resolved("epsilon_check")
    t = cfg.t
    d = g.regular_degree()
    report.n, report.t = g.n, t
    if d is None:
        raise PreconditionError("host graph is not regular")
    report.d = d
    if t % 2 == 0 or not 1 <= t <= d:
        raise PreconditionError(f"t must be odd with 1 <= t <= d, got t={t}, d={d}")
    if g.n % 2 == 0:
        raise PreconditionError(f"host graph must have an odd number of vertices, got {g.n}")
    if h.n % 2 == 0:
        raise PreconditionError(f"pattern must have an odd number of vertices, got {h.n}")
    if h.n and h.max_degree() > 5:
        raise PreconditionError(f"pattern maximum degree {h.max_degree()} exceeds 5")

    complemented = t > d / 2
    te = d - t if complemented else t
    if te % 2 == 0:
        raise PreconditionError(f"complemented degree d - t = {te} is even")
    report.t_effective, report.complemented = te, complemented

    spec = spectral_gap(g, mode="dense" if g.n <= 2000 else "iterative")
    report.spectral = {"d": spec.d, "lambda": spec.lam, "method": spec.method,
                       "lambda_below_d_over_50": spec.lam < d / 50,
                       "lambda_below_eps_d": spec.lam < EPSILON * d}
    if eps_check and not spec.lam < EPSILON * d:
        raise PreconditionError(f"lambda={spec.lam:.4f} is not below eps*d={EPSILON * d:.4f}")
    lap("spectral")

    # 1-2. partition, then embed into G[B]; a fresh partition gives a new G[B]
    sspec = SubdivisionSpec(h, min_len=min_len)
    for attempt in range(cfg.partition_attempts):
        pseed = cfg.seed + 7919 * attempt
        part, part_ok, source = _partition_stage(g, d, c, gamma, pseed, cfg, report)
        b_edges = sum(1 for u in part.B for w in g.adjacency[u] if w in part.B and u < w)
        report.partition = {"A_size": len(part.A), "B_size": len(part.B), "B": sorted(part.B),
                            "c": c, "gamma": gamma, "iterations": part.iterations,
                            "restarts": part.restarts, "source": source, "window_ok": part_ok,
                            "B_at_least_n_over_20": len(part.B) >= g.n / 20,
                            "edges_in_B": b_edges, "attempt": attempt, "seed": pseed}
        try:
            emb = embed_topological(g, part.B, sspec, seed=pseed, budget=cfg.embed_budget)
            break
        except EmbeddingError as exc:
            failure = {"stuck_edge": None if exc.edge is None else list(exc.edge),
                       "attempts": exc.attempts, "B_size": len(part.B),
                       "partition_attempts": attempt + 1}
            report.audits.setdefault("embedding_failures", []).append(failure)
            if attempt + 1 == cfg.partition_attempts:
                raise StageFailure("embedding", str(exc), failure)
    lap("partition+embedding")

    psi = emb.psi
    sigma = emb.sigma
    gpsi_vertices = emb.vertices()
    gpsi_edges = emb.edges()
    expected = subdivision_vertex_count(h, sigma)
    report.embedding = emb.as_dict()
    report.audits["parity"] = {
        "V_GPsi": len(gpsi_vertices), "expected": expected,
        "count_ok": len(gpsi_vertices) == expected,
        "all_sigma_odd": all(s % 2 for s in sigma.values()),
        "U_size": g.n - len(gpsi_vertices),
        "U_even": (g.n - len(gpsi_vertices)) % 2 == 0,
    }
    if not report.audits["parity"]["count_ok"] or not report.audits["parity"]["U_even"]:
        raise StageFailure("embedding", "parity ledger violated", report.audits["parity"])

    # 3. perfect matching on U
    u_set = sorted(set(range(g.n)) - gpsi_vertices)
    gu = induced_subgraph(g, u_set)
    mindeg_u = gu.min_degree() if gu.n else 0
    m = perfect_matching(gu)
    match_audit = {"U_size": gu.n, "min_degree_U": mindeg_u,
                   "min_degree_ok": mindeg_u >= 0.9 * d,
                   "lambda_ok": spec.lam < d / 50}
    if m is None:
        raise StageFailure("matching", "G[U] has no perfect matching", match_audit)
    lab = gu.labels
    m_edges = {norm_edge(lab[a], lab[b]) for a, b in m.edges}
    report.matching = sorted(list(e) for e in m_edges)
    report.audits["matching"] = match_audit
    lap("matching")

    # 4. (t-1)-factor of G' = G - E(G_Psi) - M
    gp = g.without_edges(gpsi_edges | m_edges)
    f = te - 1
    delta = gp.min_degree()
    factor_audit = {"f": f, "min_degree_Gp": delta, "d_minus_6_ok": delta >= d - 6,
                    "nine_tenths_ok": delta >= 0.9 * d}
    if delta < d - 6:
        raise StageFailure("factor", f"min degree of G' is {delta} < d - 6", factor_audit)
    if f > delta:
        raise StageFailure("factor", f"f={f} exceeds min degree {delta}", factor_audit)
    fac = f_factor(gp, f)
    if fac is None:
        raise StageFailure("factor", f"no {f}-factor of G'", factor_audit)
    report.factor = sorted(list(e) for e in fac.edges)
    report.audits["factor"] = factor_audit
    report.audits["disjoint"] = {
        "psi_vs_M": not (gpsi_edges & m_edges),
        "psi_vs_factor": not (gpsi_edges & fac.edges),
        "M_vs_factor": not (m_edges & fac.edges),
    }
    lap("factor")

    # 5. restriction
    assignment: dict = {}
    for a, b in h.sorted_edges:
        target = norm_edge(psi[a], psi[b])
        for e, l in _path_literals(emb.paths[(a, b)], target).items():
            assignment[edge_var(*e)] = l
    ones = m_edges | fac.edges
    for e in g.sorted_edges:
        v = edge_var(*e)
        if v not in assignment:
            assignment[v] = ONE if e in ones else ZERO
    rho = Restriction(assignment)
    if complemented:
        rho = rho.compose_negation()
    report.rho = rho.to_json()
    lap("restriction")

    # 6. equivalence with PM(H)
    card = encode_card(g, [t] * g.n)
    restricted = apply_restriction(card, rho)
    var_map = {edge_var(*norm_edge(psi[a], psi[b])): edge_var(a, b) for a, b in h.sorted_edges}
    report.equiv_ok = check_equiv(restricted, encode_pm(h), var_map)
    report.audits["vertex_equations"] = vertex_equation_audit(g, t, rho, h, psi)
    lap("equivalence")
    if not report.equiv_ok:
        raise StageFailure("equivalence", "restricted system is not equivalent to PM(H)")


# --------------------------------------------------------------------------
# degree experiments


def family_graph(family: str, size: int, seed: int = 0) -> tuple[Graph, list[int]]:
    """Instance graph and b-vector for a named family."""
    if family == "pm-cycle":
        g = named_graph(f"C{size}")
    elif family == "pm-complete":
        g = named_graph(f"K{size}")
    elif family == "pm-path":
        g = named_graph(f"P{size}")
    elif family == "pm-disjoint-edges":
        g = Graph.from_edges(2 * size, [(2 * i, 2 * i + 1) for i in range(size)])
    elif family == "card3-regular":
        g = gen_random_regular(size, 3 if size % 2 == 0 else 4, seed)
        return g, [1] * g.n
    else:
        raise PreconditionError(f"unknown family {family!r}")
    return g, [1] * g.n


FAMILIES = ("pm-cycle", "pm-complete", "pm-path", "pm-disjoint-edges", "card3-regular")


def _random_restriction(cs: ConstraintSystem, rng: random.Random, k: int = 2) -> Restriction:
    # fix k variables to constants, leave the rest as themselves
    vs = list(cs.edge_vars())
    fixed = set(rng.sample(vs, min(k, len(vs))))
    return Restriction({v: (rng.choice((ZERO, ONE)) if v in fixed else lit(v)) for v in vs})


def _experiment_row(family: str, size: int, seed: int, p: int, d_max: int) -> dict:
    g, b = family_graph(family, size, seed)
    cs = encode_card(g, b)
    start = time.perf_counter()
    deg = pc_degree_search(cs, p=p, d_max=d_max)
    wall = time.perf_counter() - start
    rho = _random_restriction(cs, random.Random(seed))
    rdeg = pc_degree_search(apply_restriction(cs, rho), p=p, d_max=d_max)
    # only rows where the unrestricted degree is known give a verdict
    monotone = None if deg is None else (rdeg is not None and rdeg <= deg)
    return {
        "family": family, "n": g.n, "d": g.regular_degree() if g.regular_degree() is not None else "",
        "t": b[0] if len(set(b)) == 1 else "", "seed": seed, "p": p,
        "min_degree": deg if deg is not None else f"not refuted <= {d_max}",
        "wall_time": round(wall, 6),
        "restricted_min_degree": rdeg if rdeg is not None else f"not refuted <= {d_max}",
        "monotone": monotone,
    }


def run_degree_experiment(family: str, sizes: Sequence[int], p: int = DEFAULT_PRIME,
                          d_max: int = 6, seeds: Sequence[int] = (0,),
                          workers: int = 1) -> list[dict]:
    """Minimal PC degree per (size, seed), plus a restricted-instance comparison."""
    if family not in FAMILIES:
        raise PreconditionError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    jobs = [(family, s, sd, p, d_max) for s in sizes for sd in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_experiment_row, *zip(*jobs)))
    else:
        rows = [_experiment_row(*j) for j in jobs]
    return sorted(rows, key=lambda r: (r["n"], r["seed"]))


# --------------------------------------------------------------------------
# export


def _flatten(prefix: str, obj: Any, out: dict) -> None:
    if isinstance(obj, Mapping):
        for k, v in obj.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    else:
        out[prefix] = json.dumps(obj) if isinstance(obj, (list, tuple)) else obj


def report_text(report: PipelineReport) -> str:
    lines = [f"status: {report.status}"]
    if report.failed_stage:
        lines.append(f"failed stage: {report.failed_stage}")
    if report.message:
        lines.append(f"message: {report.message}")
    lines += [f"n={report.n} d={report.d} t={report.t} (effective {report.t_effective}, "
              f"complemented={report.complemented})",
              f"equiv_ok: {report.equiv_ok}"]
    if report.spectral:
        lines.append(f"lambda: {report.spectral['lambda']:.6f} ({report.spectral['method']})")
    if report.partition:
        lines.append(f"|A|={report.partition['A_size']} |B|={report.partition['B_size']} "
                     f"via {report.partition['source']}")
    if "parity" in report.audits:
        par = report.audits["parity"]
        lines.append(f"|V(G_psi)|={par['V_GPsi']} |U|={par['U_size']} U even: {par['U_even']}")
    for dev in report.deviations:
        lines.append(f"deviation: {dev}")
    lines.append("timings (s):")
    for stage, sec in report.timings.items():
        lines.append(f"  {stage}: {sec:.4f}")
    return "\n".join(lines) + "\n"


def export_report(report: PipelineReport | Sequence[Mapping], path: str | Path,
                  fmt: str = "json", include_timings: bool = True) -> None:
    """Write a pipeline report or an experiment table as json, csv or text."""
    path = Path(path)
    if isinstance(report, PipelineReport):
        data: Any = report.to_dict(include_timings)
        rows = None
    else:
        data = [dict(r) for r in report]
        rows = data
    if fmt == "json":
        text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    elif fmt == "csv":
        if rows is None:
            flat: dict = {}
            _flatten("", data, flat)
            rows = [flat]
        buf = io.StringIO()
        header = list(rows[0]) if rows else []
        writer = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
    elif fmt == "text":
        if isinstance(report, PipelineReport):
            text = report_text(report)
        else:
            text = "\n".join("  ".join(f"{k}={v}" for k, v in r.items()) for r in rows) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def load_report(path: str | Path) -> PipelineReport:
    with open(path, encoding="utf-8") as fh:
        return PipelineReport.from_dict(json.load(fh))
