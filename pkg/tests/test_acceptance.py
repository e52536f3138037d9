"""Acceptance criteria A1-A7.

Each test records one PASS/FAIL line, printed in the pytest terminal
summary (and on stdout when this file is run as a script).
"""

from __future__ import annotations

import random
import time
from collections import Counter
from pathlib import Path

import pytest

from conftest import ACCEPTANCE
from mini import random_fields, random_world, replay_world, to_selector
from oracles import dfs_cycles, dfs_has_cycle, dfs_paths, matched

from policy_anomalies import run_analysis
from policy_anomalies.anomalies import AnomalyKind
from policy_anomalies.bench import quadratic_r2, run_sweep
from policy_anomalies.ingest import GenerationParams, generate_scenario, manifest_recall
from policy_anomalies.ingest.generator import manifest_anomalies
from policy_anomalies.ingest.mappers import MappingContext, map_openvpn, map_ssh, map_strongswan
from policy_anomalies.paths import ConnectionGraph, Hop, detect_cycles, enumerate_all_paths, enumerate_simple_paths, is_acyclic
from policy_anomalies.reference import MULTISET_CASES, case_names, case_scenario
from policy_anomalies.resolution import same_instance, suggest, verify_resolution
from policy_anomalies.traffic import Selector

CONFIGS = Path(__file__).parent / "data" / "configs"


def record(key: str, ok: bool, detail: str) -> None:
    ACCEPTANCE[key] = (ok, detail)
    print(f"{key}: {'PASS' if ok else 'FAIL'} - {detail}")


# ---------------------------------------------------------------------------
# A1


EXPECTED_LABELS = {
    "INADEQUACY": ("INSECURE", "PI_LEVEL_UNSUITABLE"),
    "MONITORABILITY": ("INSECURE", "NETWORK_PATH"),
    "SKEWED_CHANNEL": ("INSECURE", "NETWORK_CHANNEL"),
    "NON_ENFORCEABILITY": ("UNFEASIBLE", "PI_LEVEL_UNSUITABLE"),
    "SHADOWING": ("POTENTIAL_ERROR", "NODE_INTRA_TECH"),
    "CORRELATION": ("POTENTIAL_ERROR", "NODE_INTRA_TECH"),
    "INCLUSION": ("SUBOPTIMAL_IMPLEMENTATION", "NODE_INTER_TECH"),
    "CONTRADICTION": ("POTENTIAL_ERROR", "NODE_INTER_TECH"),
    "SUPERFLUOUS": ("SUBOPTIMAL_IMPLEMENTATION", "NETWORK_CHANNEL"),
    "AFFINITY": ("POTENTIAL_ERROR", "NODE_INTER_TECH"),
    "ALTERNATIVE_PATH": ("SUBOPTIMAL_WALK", "NETWORK_PATH"),
}


def test_a1_fixture_replication():
    t0 = time.perf_counter()
    got, expected = Counter(), Counter()
    for name in MULTISET_CASES:
        kind, scenario = case_scenario(name)
        expected[(kind, *EXPECTED_LABELS[kind])] += 1
        for a in run_analysis(scenario).anomalies:
            got[(a.kind.value, a.effect.value, a.info.value)] += 1
    elapsed = time.perf_counter() - t0
    ok = got == expected and elapsed < 5.0
    record("A1", ok, f"{sum(got.values())} anomalies over {len(MULTISET_CASES)} cases, exact={got == expected}, {elapsed:.2f}s")
    assert got == expected
    assert elapsed < 5.0


# ---------------------------------------------------------------------------
# A2


def test_a2_oracle_equivalence():
    worlds, checks, mismatches = 1000, 0, []
    for seed in range(worlds):
        c, bad = replay_world(random_world(seed))
        checks += c
        mismatches.extend(f"seed {seed}: {b}" for b in bad)
    record("A2", not mismatches, f"{worlds} scenarios, {checks} verdicts, {len(mismatches)} mismatches")
    assert not mismatches, mismatches[:10]


# ---------------------------------------------------------------------------
# A3


def _random_digraph(rng: random.Random):
    n = rng.randint(1, 8)
    nodes = [f"v{k}" for k in range(n)]
    p = rng.uniform(0.1, 0.4)
    hops, packets = [], {}
    for a in nodes:
        for b in nodes:
            if a == b:
                continue
            for _ in range(2 if rng.random() < 0.1 else 1):
                if rng.random() < p:
                    hid = f"h{len(hops):02d}"
                    sel = None
                    if rng.random() < 0.5:
                        fields = random_fields(rng)
                        sel = to_selector(fields)
                        packets[hid] = matched(fields)
                    hops.append(Hop(hid, a, b, sel))
    return nodes, hops, packets


def test_a3_path_machinery():
    rng = random.Random(2024)
    graphs, mismatches = 500, []
    for g in range(graphs):
        nodes, hops, packets = _random_digraph(rng)
        raw = [(h.id, h.src, h.dst) for h in hops]
        ends = {h.id: (h.src, h.dst) for h in hops}
        want = dfs_paths(raw, packets)
        got = enumerate_all_paths(hops, cap=10**7)
        if {p.pis for p in got.paths} != want or len(got.paths) != len(want) or got.truncated:
            mismatches.append(f"graph {g}: all-paths")
        for e1 in nodes:
            for e2 in nodes:
                sub = enumerate_simple_paths(hops, e1, e2, cap=10**7)
                ids = [p.pis for p in sub.paths]
                ref = {p for p in want if ends[p[0]][0] == e1 and ends[p[-1]][1] == e2}
                if set(ids) != ref or ids != sorted(ids):
                    mismatches.append(f"graph {g}: simple paths {e1}->{e2}")
        edges = {(h.src, h.dst) for h in hops}
        graph = ConnectionGraph.from_chains({h.id: (h.src, h.dst) for h in hops})
        graph.vertices.update(nodes)
        cycles, truncated = detect_cycles(graph)
        if set(cycles) != dfs_cycles(nodes, edges) or truncated:
            mismatches.append(f"graph {g}: cycles")
        if is_acyclic(graph) == dfs_has_cycle(nodes, edges):
            mismatches.append(f"graph {g}: acyclicity")
    record("A3", not mismatches, f"{graphs} digraphs (<= 8 nodes), {len(mismatches)} mismatches")
    assert not mismatches, mismatches[:10]


# ---------------------------------------------------------------------------
# A4


def test_a4_generator_recall():
    injected, missed, kinds = 0, [], set()
    seeds = range(12)
    for seed in seeds:
        scenario = generate_scenario(GenerationParams(n_pi=60, n_conflict=60, n_entities=120, seed=seed))
        result = run_analysis(scenario)
        found, missing = manifest_recall(scenario, result)
        injected += len(found) + len(missing)
        missed.extend((seed, m.kind.value, m.subjects) for m in missing)
        kinds.update(m.kind for m in manifest_anomalies(scenario))
    recall = 1.0 - len(missed) / max(1, injected)
    ok = not missed and kinds == set(AnomalyKind)
    record("A4", ok, f"{len(seeds)} scenarios, {injected} injected instances, {len(kinds)}/19 kinds, recall {recall:.1%}")
    assert kinds == set(AnomalyKind)
    assert not missed, missed[:10]


# ---------------------------------------------------------------------------
# A5


def test_a5_performance():
    params = GenerationParams(n_pi=250, n_conflict=250, n_entities=500, seed=0)
    t0 = time.perf_counter()
    scenario = generate_scenario(params)
    result = run_analysis(scenario)
    total = result.stats.pre_computation_time + result.stats.analysis_time
    wall = time.perf_counter() - t0

    points = (100, 250, 500)
    rows = run_sweep("pis", 500, points, seeds=(0, 1, 2))
    r2 = quadratic_r2([r.value for r in rows], [r.analysis_time for r in rows])
    pre = {p: min(r.pre_computation_time for r in rows if r.value == p) for p in points}
    ratio = max(pre.values()) / min(pre.values())

    ok = total < 120 and r2 >= 0.9 and ratio <= 2.0
    record(
        "A5", ok,
        f"500 PIs/500 nodes: {total:.2f}s analysis+pre ({wall:.2f}s incl. generation, {len(result)} anomalies); "
        f"sweep R^2={r2:.3f}; pre-computation max/min={ratio:.2f}",
    )
    assert total < 120
    assert r2 >= 0.9
    assert ratio <= 2.0


# ---------------------------------------------------------------------------
# A6

# the PIs printed next to the listings, as (s, d, t, C, S, G)
PRINTED = {
    "strongswan_net_net": ("192.168.0.1", "192.168.0.2", "IPsec", [5, 5, 5],
                           {"ip_src": "10.1.0.0/16", "p_src": "*", "ip_dst": "10.2.0.0/16", "p_dst": "*", "prt": "*"}, []),
    "strongswan_home": ("192.168.0.100", "192.168.0.1", "IPsec", [5, 5, 5],
                        {"ip_src": "*", "p_src": "*", "ip_dst": "10.2.0.0/16", "p_dst": "*", "prt": "*"}, []),
    "openvpn": ("192.168.1.100:*", "192.168.1.1:1194", "TLS", [5, 5, 5], "*", []),
    "ssh": ("192.168.2.100:*", "192.168.2.1:22022", "SSH", [5, 5, 5],
            {"ip_src": "10.0.0.3", "p_src": 8080, "ip_dst": "192.168.2.1", "p_dst": 3306, "prt": "TCP"}, []),
}


def _tuple(pi) -> tuple:
    d = pi.to_spec()
    sel = d["selector"]
    if sel != "*":
        sel = dict(sel)
    return (d["source"], d["destination"], d["technology"], d["coefficients"], sel, d["gateways"])


def _norm_sel(sel):
    return Selector.from_spec(sel).to_spec()


def mapped_listings() -> dict:
    text = lambda name: (CONFIGS / name).read_text()  # noqa: E731
    ctx = MappingContext()
    return {
        "strongswan_net_net": map_strongswan(text("strongswan_net_net.conf"), ctx),
        "strongswan_home": map_strongswan(text("strongswan_home.conf"), ctx),
        "openvpn": map_openvpn(text("openvpn_client.conf"), text("openvpn_server.conf"), ctx, client_address="192.168.1.100"),
        "ssh": map_ssh(text("ssh_client.conf"), ctx, client_address="192.168.2.100"),
    }


def test_a6_config_mapping():
    mapped = mapped_listings()
    diffs = {}
    for name, printed in PRINTED.items():
        pis = mapped[name]
        want = printed[:4] + (_norm_sel(printed[4]),) + printed[5:]
        got = _tuple(pis[0]) if len(pis) == 1 else None
        if got != want:
            if got is None:
                diffs[name] = f"{len(pis)} PIs"
            else:
                fields = ("s", "d", "t", "C", "S", "G")
                diffs[name] = ", ".join(f"{f}: got {g!r}, printed {w!r}" for f, g, w in zip(fields, got, want) if g != w)
    detail = f"{len(PRINTED) - len(diffs)}/{len(PRINTED)} listings field-exact"
    if diffs:
        detail += "; " + "; ".join(f"{k} ({v})" for k, v in sorted(diffs.items()))
    record("A6", not diffs, detail)
    assert not diffs, diffs


# ---------------------------------------------------------------------------
# A7


def _close(anomaly, scenario, baseline) -> bool:
    fixes = suggest(anomaly, scenario)
    return bool(fixes) and verify_resolution(fixes[0], scenario, baseline).resolved


def test_a7_resolution_closure():
    closed, failures = set(), []
    for name in case_names():
        kind, scenario = case_scenario(name)
        result = run_analysis(scenario)
        target = next(a for a in result.anomalies if a.kind.value == kind)
        if _close(target, scenario, result):
            closed.add(("fixture", kind))
        else:
            failures.append(f"fixture {name}")
    gen_kinds = set()
    for seed in range(12):
        scenario = generate_scenario(GenerationParams(n_pi=60, n_conflict=60, n_entities=120, seed=seed))
        result = run_analysis(scenario)
        for m in manifest_anomalies(scenario):
            if m.kind in gen_kinds:
                continue
            gen_kinds.add(m.kind)
            inst = next(a for a in result.anomalies if same_instance(a, m))
            if _close(inst, scenario, result):
                closed.add(("generated", m.kind.value))
            else:
                failures.append(f"generated seed {seed} {m.kind.value}")
    fixture_kinds = {k for src, k in closed if src == "fixture"}
    generated_kinds = {k for src, k in closed if src == "generated"}
    ok = not failures and len(fixture_kinds) == 19 and len(generated_kinds) == 19
    record("A7", ok, f"closed {len(fixture_kinds)}/19 kinds on fixtures, {len(generated_kinds)}/19 on generated instances")
    assert not failures, failures


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
