"""Command-line interface. Exit codes: 0 success, 2 bad input, 3 stage failure."""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path
from typing import Any, Sequence

from . import constraints as C
from .embed import EmbedParameterError, EmbeddingError, SubdivisionSpec, embed_topological
from .graph import (ConvergenceError, GenerationError, GraphError, gen_random_regular,
                    mixing_check, read_edgelist, spectral_gap, write_edgelist)
from .matching import (MatchingError, f_factor, perfect_matching, tutte_all_components_check,
                       tutte_generalized_check)
from .partition import NonConvergence, PartitionError, find_partition
from .pipeline import (PipelineConfig, PreconditionError, export_report, run_construction,
                       run_degree_experiment)
from .refute import (DEFAULT_PRIME, RefuteError, pc_degree_decide, read_certificate,
                     sos_pe_search, sos_verify)

EXIT_OK, EXIT_PRECONDITION, EXIT_STAGE = 0, 2, 3


class StageError(RuntimeError):
    pass


def _emit(obj: Any, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _edges(es) -> list[list[int]]:
    return [list(e) for e in sorted(es)]


# graph ----------------------------------------------------------------------


def cmd_graph_gen(a: argparse.Namespace) -> None:
    g = gen_random_regular(a.n, a.d, a.seed)
    if a.out:
        write_edgelist(g, a.out)
    else:
        sys.stdout.write(f"{g.n} {g.m}\n" + "".join(f"{u} {v}\n" for u, v in g.sorted_edges))


def cmd_graph_spectral(a: argparse.Namespace) -> None:
    g = read_edgelist(a.inp)
    rep = spectral_gap(g, mode="dense" if a.dense else "iterative", tol=a.tol)
    _emit(rep.as_dict(), a.out)


def cmd_graph_mixing(a: argparse.Namespace) -> None:
    g = read_edgelist(a.inp)
    d = g.regular_degree()
    if d is None:
        raise GraphError("mixing check needs a regular graph")
    lam = spectral_gap(g, mode="dense").lam
    rng = random.Random(a.seed)
    worst, violations = 0.0, 0
    for _ in range(a.samples):
        s = [v for v in range(g.n) if rng.random() < 0.5]
        t = [v for v in range(g.n) if rng.random() < 0.5]
        r = mixing_check(g, d, lam, s, t)
        violations += not r.holds
        if r.rhs > 0:
            worst = max(worst, r.lhs / r.rhs)
    _emit({"lambda": lam, "samples": a.samples, "violations": violations,
           "max_lhs_over_rhs": worst}, a.out)


# partition / embed -----------------------------------------------------------


def cmd_partition(a: argparse.Namespace) -> None:
    g = read_edgelist(a.inp)
    d = g.regular_degree()
    if d is None:
        raise PartitionError("partition needs a regular graph")
    try:
        p = find_partition(g, d, a.c, a.gamma, seed=a.seed, max_rounds=a.max_rounds)
    except NonConvergence as exc:
        _emit({"satisfied": False, "iterations": exc.resamples, "restarts": exc.restarts,
               "violated": exc.violated, "message": str(exc)}, a.out)
        raise StageError(str(exc)) from exc
    _emit({"A": sorted(p.A), "iterations": p.iterations, "restarts": p.restarts,
           "satisfied": True}, a.out)


def _read_b(path: str, n: int) -> list[int]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, list):
        return data
    if "B" in data:
        return data["B"]
    if "A" in data:
        a = set(data["A"])
        return [v for v in range(n) if v not in a]
    raise PreconditionError("B file must be a list or an object with key 'B' or 'A'")


def cmd_embed(a: argparse.Namespace) -> None:
    g = read_edgelist(a.inp)
    h = read_edgelist(a.pattern)
    b = _read_b(a.B, g.n) if a.B else list(range(g.n))
    spec = SubdivisionSpec(h, min_len=a.min_len)
    try:
        emb = embed_topological(g, b, spec, seed=a.seed, budget=a.budget)
    except EmbeddingError as exc:
        _emit({"ok": False, "message": str(exc),
               "stuck_edge": None if exc.edge is None else list(exc.edge)}, a.out)
        raise StageError(str(exc)) from exc
    _emit(emb.as_dict(), a.out)


# matching ---------------------------------------------------------------------


def cmd_match_pm(a: argparse.Namespace) -> None:
    g = read_edgelist(a.inp)
    m = perfect_matching(g)
    _emit({"perfect": m is not None, "edges": None if m is None else _edges(m.edges)}, a.out)


def cmd_match_factor(a: argparse.Namespace) -> None:
    g = read_edgelist(a.inp)
    fs = f_factor(g, a.f, gadget=a.gadget)
    _emit({"f": a.f, "found": fs is not None,
           "edges": None if fs is None else _edges(fs.edges)}, a.out)


def cmd_match_tutte(a: argparse.Namespace) -> None:
    g = read_edgelist(a.inp)
    if a.f is None:
        res = tutte_all_components_check(g)
    else:
        res = tutte_generalized_check(g, a.f, variant=a.variant)
    _emit(res.as_dict(), a.out)


# constraint systems ------------------------------------------------------------


def cmd_cs_encode(a: argparse.Namespace) -> None:
    g = read_edgelist(a.graph)
    cs = C.encode_card(g, C.parse_b(a.b, g.n), twins=a.twins)
    text = C.dump_system(cs)
    if a.out:
        Path(a.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_cs_restrict(a: argparse.Namespace) -> None:
    cs = C.read_system(a.inp)
    rho = C.Restriction.from_json(json.loads(Path(a.rho).read_text(encoding="utf-8")))
    text = C.dump_system(C.apply_restriction(cs, rho))
    if a.out:
        Path(a.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_cs_equiv(a: argparse.Namespace) -> None:
    cs1, cs2 = C.read_system(a.a), C.read_system(a.b)
    if a.map:
        raw = json.loads(Path(a.map).read_text(encoding="utf-8"))
        var_map = {C.parse_var(k): C.parse_var(v) for k, v in raw.items()}
    else:
        var_map = C.identity_map(cs1)
    _emit({"equivalent": C.check_equiv(cs1, cs2, var_map)}, a.out)


# refutation ---------------------------------------------------------------------


def cmd_refute_pc(a: argparse.Namespace) -> None:
    cs = C.read_system(a.inp)
    rows, found = [], None
    for d in range(a.dmin, a.dmax + 1):
        r = pc_degree_decide(cs, d, a.p, allow_char2=a.allow_char2)
        rows.append(r.as_dict())
        if r.refuted:
            found = d
            break
    _emit({"p": a.p, "min_degree": found, "refuted": found is not None, "runs": rows}, a.out)


def cmd_refute_sos_verify(a: argparse.Namespace) -> None:
    cs = C.read_system(a.inp)
    _emit(sos_verify(cs, read_certificate(a.cert)).as_dict(), a.out)


def cmd_refute_sos_pe(a: argparse.Namespace) -> None:
    cs = C.read_system(a.inp)
    res = sos_pe_search(cs, a.d, iters=a.iters, tol=a.tol)
    _emit({"status": res.status, "iterations": res.iterations,
           "pe": None if res.pe is None else res.pe.as_dict()}, a.out)


# pipeline -----------------------------------------------------------------------


def cmd_pipeline_run(a: argparse.Namespace) -> None:
    cfg = PipelineConfig.from_toml(a.config)
    rep = run_construction(cfg)
    if a.out:
        export_report(rep, a.out, a.format)
    else:
        _emit(rep.to_dict(), None)
    if rep.status == "precondition-failure":
        raise PreconditionError(rep.message)
    if rep.status != "ok":
        raise StageError(rep.message)


def cmd_pipeline_experiment(a: argparse.Namespace) -> None:
    sizes = [int(s) for s in a.sizes.split(",") if s.strip()]
    seeds = [int(s) for s in a.seeds.split(",") if s.strip()]
    rows = run_degree_experiment(a.family, sizes, p=a.p, d_max=a.dmax, seeds=seeds,
                                 workers=a.workers)
    if a.out:
        fmt = a.format or ("csv" if a.out.endswith(".csv") else "json")
        export_report(rows, a.out, fmt)
    else:
        _emit(rows, None)


# parser --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cardreduce", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def leaf(parent, name: str, fn, help_: str) -> argparse.ArgumentParser:
        q = parent.add_parser(name, help=help_)
        q.set_defaults(func=fn)
        q.add_argument("--out", default=None, help="write output here instead of stdout")
        return q

    gp = sub.add_parser("graph", help="graph generation and spectral checks")
    gs = gp.add_subparsers(dest="sub", required=True)
    q = leaf(gs, "gen", cmd_graph_gen, "random d-regular graph as an edge list")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--d", type=int, required=True)
    q.add_argument("--seed", type=int, default=0)
    q = leaf(gs, "spectral", cmd_graph_spectral, "second eigenvalue magnitude")
    q.add_argument("--in", dest="inp", required=True)
    q.add_argument("--dense", action="store_true", help="full eigendecomposition")
    q.add_argument("--tol", type=float, default=1e-10)
    q = leaf(gs, "mixing", cmd_graph_mixing, "sampled expander mixing lemma check")
    q.add_argument("--in", dest="inp", required=True)
    q.add_argument("--samples", type=int, default=1000)
    q.add_argument("--seed", type=int, default=0)

    q = leaf(sub, "partition", cmd_partition, "resampling partition of a regular graph")
    q.add_argument("--in", dest="inp", required=True)
    q.add_argument("--c", type=float, default=0.925)
    q.add_argument("--gamma", type=float, default=0.025)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--max-rounds", type=int, default=1_000_000)

    q = leaf(sub, "embed", cmd_embed, "odd-subdivision embedding of a pattern graph")
    q.add_argument("--in", dest="inp", required=True)
    q.add_argument("--pattern", required=True)
    q.add_argument("--B", default=None, help="JSON list of allowed vertices (default all)")
    q.add_argument("--min-len", type=int, default=3)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--budget", type=int, default=20)

    mp = sub.add_parser("match", help="matchings, factors and Tutte audits")
    ms = mp.add_subparsers(dest="sub", required=True)
    q = leaf(ms, "pm", cmd_match_pm, "perfect matching")
    q.add_argument("--in", dest="inp", required=True)
    q = leaf(ms, "factor", cmd_match_factor, "f-regular spanning subgraph")
    q.add_argument("--in", dest="inp", required=True)
    q.add_argument("--f", type=int, required=True)
    q.add_argument("--gadget", choices=("copies", "tutte"), default="copies")
    q = leaf(ms, "tutte", cmd_match_tutte, "exhaustive Tutte-type audit")
    q.add_argument("--in", dest="inp", required=True)
    q.add_argument("--f", type=int, default=None)
    q.add_argument("--variant", choices=("all-components", "classical"), default="all-components")

    cp = sub.add_parser("cs", help="constraint systems")
    cs = cp.add_subparsers(dest="sub", required=True)
    q = leaf(cs, "encode", cmd_cs_encode, "encode Card(G, b)")
    q.add_argument("--graph", required=True)
    q.add_argument("--b", default="1", help="uniform value or comma list")
    q.add_argument("--twins", action="store_true")
    q = leaf(cs, "restrict", cmd_cs_restrict, "apply a restriction")
    q.add_argument("--in", dest="inp", required=True)
    q.add_argument("--rho", required=True)
    q = leaf(cs, "equiv", cmd_cs_equiv, "formula equivalence under a variable map")
    q.add_argument("--a", required=True)
    q.add_argument("--b", required=True)
    q.add_argument("--map", default=None, help="JSON object name -> name (default identity)")

    rp = sub.add_parser("refute", help="PC degree and SoS checks")
    rs = rp.add_subparsers(dest="sub", required=True)
    q = leaf(rs, "pc", cmd_refute_pc, "minimal PC refutation degree")
    q.add_argument("--in", dest="inp", required=True)
    q.add_argument("--p", type=int, default=DEFAULT_PRIME)
    q.add_argument("--dmax", type=int, default=6)
    q.add_argument("--dmin", type=int, default=0)
    q.add_argument("--allow-char2", action="store_true")
    q = leaf(rs, "sos-verify", cmd_refute_sos_verify, "exact SoS certificate check")
    q.add_argument("--in", dest="inp", required=True)
    q.add_argument("--cert", required=True)
    q = leaf(rs, "sos-pe", cmd_refute_sos_pe, "numerical pseudo-expectation search")
    q.add_argument("--in", dest="inp", required=True)
    q.add_argument("--d", type=int, default=2)
    q.add_argument("--iters", type=int, default=5000)
    q.add_argument("--tol", type=float, default=1e-7)

    pp = sub.add_parser("pipeline", help="end-to-end construction and experiments")
    ps = pp.add_subparsers(dest="sub", required=True)
    q = leaf(ps, "run", cmd_pipeline_run, "run the construction from a TOML config")
    q.add_argument("--config", required=True)
    q.add_argument("--format", choices=("json", "csv", "text"), default="json")
    q = leaf(ps, "experiment", cmd_pipeline_experiment, "minimal-degree table for a family")
    q.add_argument("--family", required=True)
    q.add_argument("--sizes", required=True)
    q.add_argument("--p", type=int, default=DEFAULT_PRIME)
    q.add_argument("--dmax", type=int, default=6)
    q.add_argument("--seeds", default="0")
    q.add_argument("--workers", type=int, default=1)
    q.add_argument("--format", choices=("json", "csv", "text"), default=None)
    return p


PRECONDITION_ERRORS = (PreconditionError, GraphError, PartitionError, MatchingError,
                       C.ConstraintError, RefuteError, EmbedParameterError, FileNotFoundError,
                       json.JSONDecodeError, ValueError)
STAGE_ERRORS = (StageError, GenerationError, ConvergenceError)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except STAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except PRECONDITION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
