"""End-to-end acceptance checks; each prints one ACCEPTANCE line."""

from __future__ import annotations

import itertools
import math
import random
import time
from fractions import Fraction

import networkx as nx
import pytest

import oracles
from conftest import record
from cardreduce.constraints import (
    Lit, Restriction, apply_restriction, edge_var, encode_card, encode_pm, neglit, lit,
    sat_bruteforce, system_from_polys,
)
from cardreduce.graph import Graph, gen_random_regular, mixing_check, named_graph, spectral_gap
from cardreduce.matching import f_factor, perfect_matching, tutte_generalized_check, verify_factor
from cardreduce.partition import (
    NonConvergence, circulant_csr, find_partition, find_partition_csr, verify_partition,
    verify_partition_csr,
)
from cardreduce.pipeline import PipelineConfig, run_construction
from cardreduce.poly import Poly
from cardreduce.refute import SoSCertificate, find_certificate, pc_degree_search, sos_verify

pytestmark = pytest.mark.acceptance


def atlas_graphs(max_n: int):
    for gx in nx.graph_atlas_g():
        if gx.number_of_nodes() <= max_n:
            yield Graph.from_edges(gx.number_of_nodes(), gx.edges())


# --------------------------------------------------------------------------
# 1 and 10: end-to-end construction


def end_to_end_configs(count: int = 20, seed: int = 0) -> list[dict]:
    rng = random.Random(seed)
    out = []
    for i in range(count):
        out.append(dict(n=rng.randrange(51, 302, 2), d=rng.randrange(10, 41, 2),
                        t=rng.choice([1, 3, 5]),
                        h_name=rng.choice(["C7", "petersen-minus-vertex", "C9"]),
                        graph_seed=i, seed=i))
    return out


@pytest.fixture(scope="module")
def construction_runs():
    runs = []
    for kw in end_to_end_configs():
        t0 = time.perf_counter()
        rep = run_construction(PipelineConfig(**kw))
        runs.append((kw, rep, time.perf_counter() - t0))
    return runs


def test_end_to_end_reduction(construction_runs):
    ok = [r for _, r, _ in construction_runs if r.status == "ok"]
    equiv = all(r.equiv_ok for r in ok)
    slowest = max(dt for *_, dt in construction_runs)
    rate = len(ok) / len(construction_runs)
    for kw, r, dt in construction_runs:
        print(kw, r.status, r.failed_stage, r.partition.get("B_size"), f"{dt:.1f}s")
    passed = equiv and rate >= 0.8 and slowest < 60
    record(1, passed, f"{len(ok)}/{len(construction_runs)} succeeded, equiv on all successes={equiv}, "
                      f"slowest run {slowest:.1f}s")
    assert passed


def test_parity_ledger(construction_runs):
    ok = [r for _, r, _ in construction_runs if r.status == "ok"]
    bad = 0
    for r in ok:
        par = r.audits["parity"]
        sigma = [s["length"] for s in r.embedding["sigma"]]
        h_n = len(r.embedding["psi"])
        exact = par["V_GPsi"] == h_n + sum(s - 1 for s in sigma)
        if not (exact and par["U_size"] % 2 == 0 and par["U_size"] == r.n - par["V_GPsi"]):
            bad += 1
    passed = bool(ok) and bad == 0
    record(10, passed, f"{len(ok)} successful runs, {bad} parity violations")
    assert passed


# --------------------------------------------------------------------------
# 2: restriction never raises the minimal PC degree


def random_restriction(cs, rng: random.Random) -> Restriction:
    targets = [edge_var(100 + j, 200 + j) for j in range(rng.randint(1, 4))]
    assignment = {}
    for v in cs.vars:
        kind = rng.random()
        if kind < 0.25:
            assignment[v] = Lit("const0")
        elif kind < 0.5:
            assignment[v] = Lit("const1")
        elif kind < 0.75:
            assignment[v] = lit(rng.choice(targets))
        else:
            assignment[v] = neglit(rng.choice(targets))
    return Restriction(assignment)


def random_small_system(rng: random.Random):
    while True:
        n = rng.randint(2, 7)
        pairs = list(itertools.combinations(range(n), 2))
        edges = rng.sample(pairs, rng.randint(1, min(len(pairs), 12)))
        g = Graph.from_edges(n, edges)
        b = [rng.randint(0, max(1, g.degree(v))) for v in range(n)]
        if rng.random() < 0.4:
            return encode_pm(g)
        return encode_card(g, b)


def test_restriction_degree_monotone():
    rng = random.Random(2)
    violations = 0
    pairs = 0
    for _ in range(100):
        cs = random_small_system(rng)
        rho = random_restriction(cs, rng)
        restricted = apply_restriction(cs, rho)
        k = len(cs.vars)
        for p in (10007, 65537):
            before = pc_degree_search(cs, p=p, d_max=k)
            after = pc_degree_search(restricted, p=p, d_max=k)
            pairs += 1
            if before is not None and (after is None or after > before):
                violations += 1
    record(2, violations == 0, f"{pairs} (system, restriction, prime) triples, {violations} violations")
    assert violations == 0


# --------------------------------------------------------------------------
# 3: PC over the full graph catalogue on at most 7 vertices


def test_pc_matches_bruteforce_on_catalogue():
    unsat, sat = [], []
    for g in atlas_graphs(7):
        cs = encode_pm(g)
        (sat if sat_bruteforce(cs) is not None else unsat).append(cs)
    discrepancies = 0
    max_unsat_degree = 0
    for cs in unsat:
        d = pc_degree_search(cs, d_max=len(cs.vars))
        if d is None or d > len(cs.vars):
            discrepancies += 1
        else:
            max_unsat_degree = max(max_unsat_degree, d)
    for cs in sat:
        if pc_degree_search(cs, d_max=min(max_unsat_degree, len(cs.vars))) is not None:
            discrepancies += 1
    record(3, discrepancies == 0,
           f"{len(unsat)} unsatisfiable and {len(sat)} satisfiable systems, "
           f"max refutation degree {max_unsat_degree}, {discrepancies} discrepancies")
    assert discrepancies == 0


# --------------------------------------------------------------------------
# 4: blossom against exhaustive search


def graphs_on_eight_vertices():
    # every 8-vertex graph minus its last vertex is isomorphic to an atlas graph
    for gx in nx.graph_atlas_g():
        if gx.number_of_nodes() != 7:
            continue
        base = list(gx.edges())
        for mask in range(1 << 7):
            yield base + [(v, 7) for v in range(7) if mask >> v & 1]


def test_blossom_matches_exhaustive():
    checked = discrepancies = 0
    for g in atlas_graphs(7):
        checked += 1
        discrepancies += (perfect_matching(g) is not None) != oracles.has_perfect_matching(g.n, g.edges)
    for edges in graphs_on_eight_vertices():
        g = Graph.from_edges(8, edges)
        checked += 1
        discrepancies += (perfect_matching(g) is not None) != oracles.has_perfect_matching(8, g.edges)
    rng = random.Random(4)
    for _ in range(200):
        n = rng.randint(1, 10)
        p = rng.random()
        edges = [e for e in itertools.combinations(range(n), 2) if rng.random() < p]
        g = Graph.from_edges(n, edges)
        checked += 1
        discrepancies += (perfect_matching(g) is not None) != oracles.has_perfect_matching(n, g.edges)
    record(4, discrepancies == 0, f"{checked} graphs, {discrepancies} discrepancies")
    assert discrepancies == 0


# --------------------------------------------------------------------------
# 5: f-factors


def test_f_factor_validity():
    rng = random.Random(5)
    instances = invalid = guarded = guarded_missing = 0
    for i in range(50):
        d = rng.randint(2, 10)
        # every fifth graph is small enough for the exhaustive deficiency check
        lo = d + 1
        n = rng.randint(lo, 10) if i % 5 == 0 and lo <= 10 else rng.randint(lo, 40)
        if n * d % 2:
            n += 1
        g = gen_random_regular(n, d, seed=i)
        for f in range(2, min(d // 2, g.min_degree()) + 1, 2):
            instances += 1
            fs = f_factor(g, f)
            if fs is not None and not verify_factor(g, fs):
                invalid += 1
            if g.n <= 10:
                guarded += 1
                if tutte_generalized_check(g, f).ok and fs is None:
                    guarded_missing += 1
            elif fs is None:
                # large instances: an absent factor must really be absent (Petersen's theorem)
                invalid += 1
    passed = invalid == 0 and guarded_missing == 0 and guarded > 0
    record(5, passed, f"{instances} (graph, f) instances, {invalid} invalid outputs, "
                      f"{guarded} guarded, {guarded_missing} missed factors")
    assert passed


# --------------------------------------------------------------------------
# 6: expander mixing lemma


def mixing_fixtures():
    out = [named_graph("petersen")]
    out += [named_graph(f"C{n}") for n in range(3, 11)]
    out += [named_graph(f"K{n}") for n in range(2, 11)]
    return out


def test_mixing_lemma():
    violations = pairs = 0
    for g in mixing_fixtures():
        d = g.regular_degree()
        lam = spectral_gap(g).lam
        subsets = [[v for v in range(g.n) if mask >> v & 1] for mask in range(1 << g.n)]
        for s in subsets:
            for t in subsets:
                pairs += 1
                violations += not mixing_check(g, d, lam, s, t).holds
    rng = random.Random(6)
    for seed in range(2):
        g = gen_random_regular(500, 10, seed=seed)
        lam = spectral_gap(g).lam
        for _ in range(1000):
            s = rng.sample(range(500), rng.randint(1, 500))
            t = rng.sample(range(500), rng.randint(1, 500))
            pairs += 1
            violations += not mixing_check(g, 10, lam, s, t).holds
    record(6, violations == 0, f"{pairs} (S, T) pairs, {violations} violations")
    assert violations == 0


# --------------------------------------------------------------------------
# 7: spectral values


def test_spectral_values():
    errors = [abs(spectral_gap(named_graph("petersen")).lam - 2)]
    for n in range(4, 13):
        want = max(abs(2 * math.cos(2 * math.pi * k / n)) for k in range(1, n))
        errors.append(abs(spectral_gap(named_graph(f"C{n}")).lam - want))
    for n in range(3, 13):
        errors.append(abs(spectral_gap(named_graph(f"K{n}")).lam - 1))
    worst = max(errors)
    record(7, worst <= 1e-9, f"{len(errors)} graphs, worst error {worst:.2e}")
    assert worst <= 1e-9


# --------------------------------------------------------------------------
# 8: partition by resampling


def test_partition_desk_and_stress():
    desk_ok = 0
    for seed in range(10):
        g = gen_random_regular(500, 100, seed=seed)
        try:
            part = find_partition(g, 100, 0.70, 0.20, seed=seed, max_rounds=10 ** 6)
        except NonConvergence:
            continue
        desk_ok += verify_partition(g, 100, part)
    stress = []
    for seed in range(3):
        indptr, indices = circulant_csr(4001, 2000, seed)
        try:
            part = find_partition_csr(indptr, indices, 2000, 0.925, 0.025, seed=seed,
                                      max_rounds=10 ** 6)
            stress.append("pass" if verify_partition_csr(indptr, indices, 2000, part) else "fail")
        except NonConvergence:
            stress.append("fail")
    print("c=0.925, gamma=0.025 at n=4001, d=2000:", stress)
    record(8, desk_ok == 10, f"desk profile {desk_ok}/10 seeds verified; "
                             f"c=0.925 stress at d=2000: {' '.join(stress)}")
    assert desk_ok == 10


# --------------------------------------------------------------------------
# 9: exact SoS verification


def x(i):
    return Poly.var(edge_var(0, i))


def certificate_cases():
    cases = []
    # contradictory constants and linear systems solved exactly
    for k in (1, 2, 3):
        cs = system_from_polys([Poly.const(k)])
        cases.append((cs, find_certificate(cs, 0)))
    cs = system_from_polys([x(1), x(1) - 1])
    cases.append((cs, find_certificate(cs, 1)))
    cs = system_from_polys([x(1) + x(2) - 1, x(1) + x(2) - 2])
    cases.append((cs, find_certificate(cs, 1)))
    cs = system_from_polys([x(1) * (1 - x(1)), x(1) - Fraction(1, 2)])
    cases.append((cs, find_certificate(cs, 2)))
    # perfect matching systems of odd graphs
    for name in ("K1", "K3", "P3"):
        cs = encode_pm(named_graph(name))
        cases.append((cs, find_certificate(cs, 3)))
    # hand-built: -(x^2 + 1) + x^2 = -1
    cs = system_from_polys([x(1) * x(1) + 1])
    cases.append((cs, SoSCertificate((Poly.const(-1),), (x(1),))))
    return cases


def perturbations(cert: SoSCertificate):
    eps = Fraction(1, 10 ** 6)
    polys = list(cert.t_polys) + list(cert.s_polys)
    for i, p in enumerate(polys):
        monos = list(p.terms) or [()]
        for m in monos:
            bumped = p + Poly({m: eps})
            new = polys[:i] + [bumped] + polys[i + 1:]
            yield SoSCertificate(tuple(new[:len(cert.t_polys)]), tuple(new[len(cert.t_polys):]))


def test_sos_verifier_exact():
    cases = certificate_cases()
    valid = sum(c is not None and sos_verify(cs, c).valid for cs, c in cases)
    perturbed = rejected = 0
    for cs, cert in cases:
        if cert is None:
            continue
        for bad in perturbations(cert):
            perturbed += 1
            rejected += not sos_verify(cs, bad).valid
    passed = valid == len(cases) == 10 and rejected == perturbed
    record(9, passed, f"{valid}/{len(cases)} certificates verify, "
                      f"{rejected}/{perturbed} single-coefficient perturbations rejected")
    assert passed
