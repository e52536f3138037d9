"""Seeded synthetic scenarios with a ledger of injected anomalies.

Generation runs in three phases:

1. ``n_pi`` PIs that do not conflict, built from end-to-end, site-to-site
   and remote-access schemes;
2. ``n_conflict`` more PIs, each injection picking one of the nineteen
   anomaly kinds uniformly and recording the expected instance in the
   manifest;
3. filler nodes until the network has ``n_entities`` nodes.

The backbone is a tree of gateways with hosts hanging off it, so the only
directed cycles longer than two come from injected triangles.  Each
scheme instance and each injection gets its own traffic tag (a port used
as both source and destination port), which keeps unrelated PIs from
overlapping.  Multi-hop schemes do form chained tunnels, so MONITORABILITY
can show up without being injected.
"""

from __future__ import annotations

import ipaddress
import math
import random
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import networkx as nx

from ..anomalies import Anomaly, AnomalyKind, AnalysisResult
from ..resolution import same_instance
from ..policy import NULL, Coefficients, PolicyImplementation
from ..scenario import Scenario, build_scenario
from ..traffic import FieldKind, FieldSet, Selector

SCHEMES = ("end-to-end", "site-to-site", "remote-access")
PHASE1_TECHS = ("IPsec", "TLS", "SSH")
SUPPORTED = ("IPsec", "TLS", "SSH", "MACsec")
FIRST_TAG = 1024
MAX_TAGS = 65535 - FIRST_TAG
MIN_POOL = 4

# kind -> (PIs added, needs a phase-1 base PI)
INJECTION_COST = {
    AnomalyKind.INTERNAL_LOOP: (1, False),
    AnomalyKind.OUT_OF_PLACE: (1, False),
    AnomalyKind.NON_ENFORCEABILITY: (1, False),
    AnomalyKind.INADEQUACY: (1, False),
    AnomalyKind.SHADOWING: (1, True),
    AnomalyKind.REDUNDANCY: (1, True),
    AnomalyKind.EXCEPTION: (1, True),
    AnomalyKind.CORRELATION: (1, True),
    AnomalyKind.INCLUSION: (1, True),
    AnomalyKind.AFFINITY: (1, True),
    AnomalyKind.CONTRADICTION: (1, True),
    AnomalyKind.SUPERFLUOUS: (1, True),
    AnomalyKind.SKEWED_CHANNEL: (1, True),
    AnomalyKind.FILTERED_CHANNEL: (1, False),
    AnomalyKind.L2: (1, False),
    AnomalyKind.ASYMMETRIC_CHANNEL: (1, True),
    AnomalyKind.CYCLIC_PATH: (3, False),
    AnomalyKind.MONITORABILITY: (2, False),
    AnomalyKind.ALTERNATIVE_PATH: (2, True),
}


class GenerationError(ValueError):
    """Parameters the generator cannot honour."""


@dataclass(frozen=True)
class GenerationParams:
    n_pi: int = 0
    n_conflict: int = 0
    n_entities: int = 10
    seed: int = 0
    scheme_mix: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)

    def __post_init__(self):
        for name in ("n_pi", "n_conflict", "n_entities"):
            if getattr(self, name) < 0:
                raise GenerationError(f"{name} must be >= 0")
        mix = tuple(float(w) for w in self.scheme_mix)
        if len(mix) != 3 or any(w < 0 for w in mix) or not math.isclose(sum(mix), 1.0, abs_tol=1e-9):
            raise GenerationError("scheme_mix needs three non-negative weights summing to 1")
        object.__setattr__(self, "scheme_mix", mix)
        if self.n_pi + self.n_conflict > MAX_TAGS:
            raise GenerationError(f"at most {MAX_TAGS} PIs can be generated")


@dataclass
class _Node:
    id: str
    role: str  # gateway, host, ring, filler
    ip: str


@dataclass
class _Base:
    pi: PolicyImplementation
    host_source: bool


@dataclass
class _State:
    rng: random.Random
    nodes: list[_Node] = field(default_factory=list)
    graph: nx.Graph = field(default_factory=nx.Graph)
    pis: list[PolicyImplementation] = field(default_factory=list)
    bases: list[_Base] = field(default_factory=list)
    manifest: list[dict] = field(default_factory=list)
    threshold_rules: list[dict] = field(default_factory=list)
    firewall: dict[str, list[dict]] = field(default_factory=dict)
    monitor_pairs: set = field(default_factory=set)
    direct_pairs: set = field(default_factory=set)
    null_sources: set = field(default_factory=set)
    outer_sources: set = field(default_factory=set)
    next_tag: int = FIRST_TAG
    node_budget: int = 0
    phase1_count: int = 0

    # -- nodes ----------------------------------------------------------

    def add_node(self, role: str, prefix: str, attach: Optional[str] = None) -> str:
        idx = len(self.nodes)
        count = sum(1 for n in self.nodes if n.role == role) + 1
        node = _Node(f"{prefix}{count}", role, str(ipaddress.IPv4Address(0x0A000000 + idx + 1)))
        self.nodes.append(node)
        self.graph.add_node(node.id)
        if attach is not None:
            self.graph.add_edge(attach, node.id)
        return node.id

    def of_role(self, role: str) -> list[str]:
        return [n.id for n in self.nodes if n.role == role]

    def ip(self, node: str) -> str:
        return next(n.ip for n in self.nodes if n.id == node)

    def route(self, a: str, b: str) -> tuple[str, ...]:
        return tuple(nx.shortest_path(self.graph, a, b))

    # -- PIs ------------------------------------------------------------

    def tag(self) -> int:
        t = self.next_tag
        self.next_tag += 1
        return t

    def priority(self) -> int:
        return 10 * (len(self.pis) + 1)

    def pair_ok(self, a: str, b: str) -> bool:
        return a != b and (a, b) not in self.monitor_pairs

    def add(self, pi: PolicyImplementation) -> PolicyImplementation:
        self.pis.append(pi)
        a, b = pi.source.split(".")[0], pi.destination.split(".")[0]
        if pi.coefficients.confidentiality > 0:
            self.direct_pairs.add((a, b))
        return pi

    def new_pi(self, src, dst, tech, coeffs, selector, *, deployed_at=None, priority=None) -> PolicyImplementation:
        pid = f"p{len(self.pis) + 1}"
        return PolicyImplementation(
            id=pid,
            source=src,
            destination=dst,
            technology=tech,
            coefficients=Coefficients.of(coeffs),
            selector=selector,
            gateways=None,
            deployed_at=deployed_at or src.split(".")[0],
            priority=self.priority() if priority is None else priority,
        )

    def coeffs(self) -> tuple[int, int, int]:
        return tuple(self.rng.randint(2, 4) for _ in range(3))

    def host_pair(self, ok: Callable[[str, str], bool] = None) -> Optional[tuple[str, str]]:
        hosts = self.of_role("host")
        if len(hosts) < 2:
            return None
        for _ in range(64):
            a, b = self.rng.sample(hosts, 2)
            if self.pair_ok(a, b) and (ok is None or ok(a, b)):
                return a, b
        for a in hosts:
            for b in hosts:
                if self.pair_ok(a, b) and (ok is None or ok(a, b)):
                    return a, b
        return None


def tag_selector(tag: int, **fields) -> Selector:
    return Selector.build(p_src=tag, p_dst=tag, **fields)


# ---------------------------------------------------------------------------
# phase 1


def _phase1(st: _State, n_pi: int, mix: Sequence[float]) -> None:
    hosts, gws = st.of_role("host"), st.of_role("gateway")
    while len(st.pis) < n_pi:
        left = n_pi - len(st.pis)
        scheme = st.rng.choices(SCHEMES, weights=mix)[0]
        tag = st.tag()
        sel = tag_selector(tag)
        if scheme == "end-to-end":
            a, b = st.rng.sample(hosts, 2)
            pi = st.add(st.new_pi(a, b, st.rng.choice(PHASE1_TECHS), st.coeffs(), sel))
            st.bases.append(_Base(pi, True))
        elif scheme == "site-to-site":
            n_g = min(st.rng.randint(2, 4), left + 1, len(gws))
            chain = st.rng.sample(gws, n_g)
            coeffs = st.coeffs()
            for a, b in zip(chain, chain[1:]):
                pi = st.add(st.new_pi(a, b, "IPsec", coeffs, sel))
                st.bases.append(_Base(pi, False))
        else:
            n_g = min(st.rng.randint(1, 3), left, len(gws))
            client = st.rng.choice(hosts)
            chain = [client] + st.rng.sample(gws, n_g)
            tech = st.rng.choice(("IPsec", "TLS"))
            coeffs = st.coeffs()
            for k, (a, b) in enumerate(zip(chain, chain[1:])):
                pi = st.add(st.new_pi(a, b, tech, coeffs, sel))
                st.bases.append(_Base(pi, k == 0))


# ---------------------------------------------------------------------------
# phase 2 injections; each returns (manifest entry, fresh base used?) or None


def _entry(kind: AnomalyKind, subjects=(), nodes=(), paths=(), added=()) -> dict:
    return {
        "kind": kind.value,
        "subjects": sorted(subjects),
        "nodes": list(nodes),
        "paths": [list(p) for p in paths],
        "pis": list(added),
    }


def _perturb(c: Coefficients) -> tuple:
    """An incomparable triple: one component up, one down."""
    t = [int(x) for x in c.as_tuple()]
    return (t[0] + 1, t[1] - 1, t[2])


def _other_layer_tech(tech: str) -> str:
    return "TLS" if tech == "IPsec" else "IPsec"


def _inj_internal_loop(st, base):
    h = st.rng.choice(st.of_role("host"))
    pi = st.add(st.new_pi(f"{h}.l5", f"{h}.l3", "TLS", st.coeffs(), tag_selector(st.tag())))
    return _entry(AnomalyKind.INTERNAL_LOOP, [pi.id], added=[pi.id])


def _inj_out_of_place(st, base):
    pair = st.host_pair()
    if pair is None:
        return None
    a, b = pair
    elsewhere = [n for n in st.of_role("gateway") + st.of_role("host") if n != a]
    x = st.rng.choice(elsewhere)
    pi = st.add(st.new_pi(a, b, "IPsec", st.coeffs(), tag_selector(st.tag()), deployed_at=x))
    return _entry(AnomalyKind.OUT_OF_PLACE, [pi.id], added=[pi.id])


def _inj_non_enforceability(st, base):
    pair = st.host_pair()
    if pair is None:
        return None
    pi = st.add(st.new_pi(*pair, "WS-Security", st.coeffs(), tag_selector(st.tag())))
    return _entry(AnomalyKind.NON_ENFORCEABILITY, [pi.id], added=[pi.id])


def _inj_inadequacy(st, base):
    pair = st.host_pair()
    if pair is None:
        return None
    pi = st.add(st.new_pi(*pair, "IPsec", (1, 1, 1), tag_selector(st.tag())))
    st.threshold_rules.insert(0, {"when": {"pi": pi.id}, "min": [3, 3, 3]})
    return _entry(AnomalyKind.INADEQUACY, [pi.id], added=[pi.id])


def _clone(st, base, **changes):
    pid = f"p{len(st.pis) + 1}"
    return st.add(base.with_(id=pid, **changes))


def _inj_shadowing(st, base):
    pi = _clone(st, base, coefficients=Coefficients.of(_perturb(base.coefficients)), priority=base.priority - 1)
    return _entry(AnomalyKind.SHADOWING, [pi.id, base.id], added=[pi.id])


def _inj_redundancy(st, base):
    pi = _clone(st, base, priority=base.priority + 1)
    return _entry(AnomalyKind.REDUNDANCY, [base.id, pi.id], added=[pi.id])


def _inj_exception(st, base):
    a, b = base.source, base.destination
    sel = replace(base.selector, ip_dst=FieldSet.parse(FieldKind.IP_SET, st.ip(b)))
    pi = _clone(
        st, base, source=f"{a}.l3", destination=f"{b}.l3", selector=sel,
        coefficients=Coefficients.of(_perturb(base.coefficients)), priority=base.priority - 1,
    )
    return _entry(AnomalyKind.EXCEPTION, [pi.id, base.id], added=[pi.id])


def _inj_correlation(st, base):
    t = int(base.selector.p_dst.intervals[0][0])
    extra = st.tag()
    sel = Selector.build(p_src=[t, extra], p_dst=[t, extra], ip_dst=st.ip(base.destination))
    pi = _clone(st, base, selector=sel, priority=base.priority + 1)
    return _entry(AnomalyKind.CORRELATION, [pi.id, base.id], added=[pi.id])


def _inj_inclusion(st, base):
    pi = _clone(st, base, technology=_other_layer_tech(base.technology), priority=base.priority + 1)
    return _entry(AnomalyKind.INCLUSION, [pi.id, base.id], added=[pi.id])


def _inj_affinity(st, base):
    pi = _clone(
        st, base, technology=_other_layer_tech(base.technology),
        coefficients=Coefficients.of(_perturb(base.coefficients)), priority=base.priority + 1,
    )
    return _entry(AnomalyKind.AFFINITY, [pi.id, base.id], added=[pi.id])


def _inj_contradiction(st, base):
    pi = _clone(st, base, technology=NULL, coefficients=Coefficients(), priority=base.priority + 1)
    st.null_sources.add(base.source)
    return _entry(AnomalyKind.CONTRADICTION, [pi.id, base.id], added=[pi.id])


def _inj_superfluous(st, base):
    a = base.source
    chain = st.route(a, base.destination)
    end = chain[-2]
    if not st.pair_ok(a, end):
        return None
    sel = Selector.build(ip_src=st.ip(a))
    pi = st.add(st.new_pi(a, end, "IPsec", (1, 1, 1), sel))
    st.outer_sources.add(a)
    return _entry(AnomalyKind.SUPERFLUOUS, [pi.id], added=[pi.id])


def _inj_skewed(st, base):
    a = base.source
    chain = set(st.route(a, base.destination))
    cands = [n for n in st.of_role("gateway") + st.of_role("host") if n not in chain and st.pair_ok(a, n)]
    st.rng.shuffle(cands)
    for x in cands:
        if len(set(st.route(a, x)) & chain) >= 2:
            pi = st.add(st.new_pi(a, x, "IPsec", st.coeffs(), Selector.build(ip_src=st.ip(a))))
            return _entry(AnomalyKind.SKEWED_CHANNEL, [base.id, pi.id], added=[pi.id])
    return None


def _inj_filtered(st, base):
    pair = st.host_pair()
    if pair is None:
        return None
    a, b = pair
    sel = tag_selector(st.tag())
    pi = st.add(st.new_pi(a, b, "IPsec", st.coeffs(), sel))
    gw = st.route(a, b)[1]
    st.firewall.setdefault(gw, []).insert(0, {"action": "DENY", "selector": sel.to_spec()})
    return _entry(AnomalyKind.FILTERED_CHANNEL, [pi.id], added=[pi.id])


def _inj_l2(st, base):
    pair = st.host_pair()
    if pair is None:
        return None
    pi = st.add(st.new_pi(*pair, "MACsec", st.coeffs(), tag_selector(st.tag())))
    return _entry(AnomalyKind.L2, [pi.id], added=[pi.id])


def _inj_asymmetric(st, base):
    a, b = base.source, base.destination
    if not st.pair_ok(b, a):
        return None
    c = [int(x) for x in base.coefficients.as_tuple()]
    c[2] = c[2] + 1
    pi = st.add(st.new_pi(b, a, base.technology, tuple(c), base.selector.reversed(), priority=base.priority + 1))
    return _entry(AnomalyKind.ASYMMETRIC_CHANNEL, [base.id], added=[pi.id])


def _inj_cyclic(st, base):
    if len(st.nodes) + 3 > st.node_budget:
        return None
    anchor = st.rng.choice(st.of_role("gateway"))
    x = st.add_node("ring", "r", anchor)
    y = st.add_node("ring", "r", x)
    z = st.add_node("ring", "r", y)
    st.graph.add_edge(z, x)
    sel = tag_selector(st.tag())
    coeffs = st.coeffs()
    added = [st.add(st.new_pi(u, v, "IPsec", coeffs, sel)).id for u, v in ((x, y), (y, z), (z, x))]
    cycle = min((x, y, z), (y, z, x), (z, x, y))
    return _entry(AnomalyKind.CYCLIC_PATH, added, nodes=cycle, added=added)


def _inj_monitorability(st, base):
    pair = st.host_pair(lambda a, b: (a, b) not in st.direct_pairs)
    if pair is None:
        return None
    a, b = pair
    mids = [m for m in st.of_role("gateway") + st.of_role("host") if m not in pair and st.pair_ok(a, m) and st.pair_ok(m, b)]
    if not mids:
        return None
    m = st.rng.choice(mids)
    st.monitor_pairs.add((a, b))
    sel = tag_selector(st.tag())
    p1 = st.add(st.new_pi(a, m, "IPsec", st.coeffs(), sel))
    p2 = st.add(st.new_pi(m, b, "IPsec", st.coeffs(), sel))
    return _entry(AnomalyKind.MONITORABILITY, [p1.id, p2.id], nodes=(a, b), paths=[(p1.id, p2.id)], added=[p1.id, p2.id])


def _inj_alternative(st, base):
    a, b = base.source, base.destination
    chain = set(st.route(a, b))
    mids = [m for m in st.of_role("gateway") + st.of_role("host") if m not in chain and st.pair_ok(a, m) and st.pair_ok(m, b)]
    if not mids:
        return None
    m = st.rng.choice(mids)
    p1 = st.add(st.new_pi(a, m, base.technology, base.coefficients, base.selector))
    p2 = st.add(st.new_pi(m, b, base.technology, base.coefficients, base.selector))
    return _entry(
        AnomalyKind.ALTERNATIVE_PATH,
        [base.id, p1.id, p2.id],
        nodes=(a, b),
        paths=sorted([(base.id,), (p1.id, p2.id)]),
        added=[p1.id, p2.id],
    )


INJECTORS = {
    AnomalyKind.INTERNAL_LOOP: _inj_internal_loop,
    AnomalyKind.OUT_OF_PLACE: _inj_out_of_place,
    AnomalyKind.NON_ENFORCEABILITY: _inj_non_enforceability,
    AnomalyKind.INADEQUACY: _inj_inadequacy,
    AnomalyKind.SHADOWING: _inj_shadowing,
    AnomalyKind.REDUNDANCY: _inj_redundancy,
    AnomalyKind.EXCEPTION: _inj_exception,
    AnomalyKind.CORRELATION: _inj_correlation,
    AnomalyKind.INCLUSION: _inj_inclusion,
    AnomalyKind.AFFINITY: _inj_affinity,
    AnomalyKind.CONTRADICTION: _inj_contradiction,
    AnomalyKind.SUPERFLUOUS: _inj_superfluous,
    AnomalyKind.SKEWED_CHANNEL: _inj_skewed,
    AnomalyKind.FILTERED_CHANNEL: _inj_filtered,
    AnomalyKind.L2: _inj_l2,
    AnomalyKind.ASYMMETRIC_CHANNEL: _inj_asymmetric,
    AnomalyKind.CYCLIC_PATH: _inj_cyclic,
    AnomalyKind.MONITORABILITY: _inj_monitorability,
    AnomalyKind.ALTERNATIVE_PATH: _inj_alternative,
}


def _base_ok(st: _State, kind: AnomalyKind, b: _Base) -> bool:
    src = b.pi.source
    if kind is AnomalyKind.SUPERFLUOUS:
        return b.host_source and src not in st.null_sources
    if kind is AnomalyKind.CONTRADICTION:
        return src not in st.outer_sources
    if kind is AnomalyKind.SKEWED_CHANNEL:
        return b.host_source
    return True


def _fresh_base(st: _State) -> Optional[_Base]:
    pair = st.host_pair(lambda a, b: a not in st.null_sources and a not in st.outer_sources)
    if pair is None:
        return None
    pi = st.add(st.new_pi(*pair, st.rng.choice(("IPsec", "TLS")), st.coeffs(), tag_selector(st.tag())))
    return _Base(pi, True)


def _phase2(st: _State, n_conflict: int) -> None:
    kinds = list(AnomalyKind)
    while True:
        left = n_conflict - (len(st.pis) - st.phase1_count)
        if left <= 0:
            return
        kind = st.rng.choice(kinds)
        tried = set()
        while True:
            cost, needs_base = INJECTION_COST[kind]
            base = None
            if needs_base:
                cands = [b for b in st.bases if _base_ok(st, kind, b)]
                base = st.rng.choice(cands) if cands else None
                if base is None:
                    cost += 1
            entry = None
            if cost <= left:
                snapshot = len(st.pis)
                if needs_base and base is None:
                    base = _fresh_base(st)
                if not needs_base or base is not None:
                    entry = INJECTORS[kind](st, base.pi if base else None)
                if entry is None:
                    del st.pis[snapshot:]
                elif base is not None:
                    if base in st.bases:
                        st.bases.remove(base)
                    if len(st.pis) - snapshot > len(entry["pis"]):
                        entry["pis"] = [p.id for p in st.pis[snapshot:]]
            if entry is not None:
                st.manifest.append(entry)
                break
            tried.add(kind)
            options = [k for k in kinds if k not in tried]
            if not options:
                raise GenerationError("no anomaly kind can be injected with the remaining budget")
            kind = st.rng.choice(options)


# ---------------------------------------------------------------------------
# assembly


def _document(st: _State) -> dict:
    nodes = []
    for n in st.nodes:
        ents = [{"label": "l3", "layer": 3, "parent": None, "ip": n.ip}]
        if n.role in ("host", "filler"):
            ents.append({"label": "l5", "layer": 5, "parent": "l3"})
        nodes.append({"id": n.id, "entities": ents})
    edges = [{"a": a, "b": b} for a, b in sorted(tuple(sorted(e)) for e in st.graph.edges)]
    pairs = sorted({(p.source.split(".")[0], p.destination.split(".")[0]) for p in st.pis})
    routing = [{"src": a, "dst": b, "path": list(st.route(a, b))} for a, b in pairs if a != b]
    caps = {}
    for n in st.nodes:
        caps[n.id] = {"technologies": list(SUPPORTED), "firewall": st.firewall.get(n.id, [])}
    groups: dict[tuple[str, str], list[PolicyImplementation]] = {}
    for pi in st.pis:
        groups.setdefault((pi.deployed_at, pi.technology), []).append(pi)
    pi_sets = [
        {
            "node": node,
            "technology": tech,
            "pis": [p.to_spec(include_set_fields=False) for p in sorted(ps, key=lambda p: p.priority)],
        }
        for (node, tech), ps in sorted(groups.items())
    ]
    return {
        "schema_version": 1,
        "nodes": nodes,
        "topology": {"edges": edges},
        "routing": routing,
        "capabilities": caps,
        "pi_sets": pi_sets,
        "thresholds": {"min_coefficients": st.threshold_rules, "inspection_zones": []},
        "manifest": st.manifest,
    }


def generate_document(params: GenerationParams) -> dict:
    st = _State(random.Random(params.seed))
    st.node_budget = params.n_entities
    total = params.n_pi + params.n_conflict
    if total and params.n_entities < MIN_POOL:
        raise GenerationError(f"n_entities={params.n_entities} is too small to host PIs (need >= {MIN_POOL})")
    if total:
        ring = 3 * math.ceil(2 * params.n_conflict / len(AnomalyKind))
        ring = min(ring, (params.n_entities - MIN_POOL) // 3 * 3)
        pool = params.n_entities - ring
        n_gw = max(2, pool // 5)
        for i in range(n_gw):
            gws = st.of_role("gateway")
            st.add_node("gateway", "g", st.rng.choice(gws) if gws else None)
        gws = st.of_role("gateway")
        for i in range(pool - n_gw):
            st.add_node("host", "h", st.rng.choice(gws))
    _phase1(st, params.n_pi, params.scheme_mix)
    st.phase1_count = len(st.pis)
    _phase2(st, params.n_conflict)
    # phase 3: bare-minimum connectivity for the remaining nodes
    while len(st.nodes) < params.n_entities:
        anchors = st.of_role("gateway") or [n.id for n in st.nodes]
        st.add_node("filler", "f", st.rng.choice(anchors) if anchors else None)
    return _document(st)


def generate_scenario(params: GenerationParams) -> Scenario:
    """Build a scenario; its ``manifest`` lists every injected instance."""
    return build_scenario(generate_document(params))


# ---------------------------------------------------------------------------
# manifest checks


def manifest_anomalies(scenario: Scenario) -> list[Anomaly]:
    out = []
    for e in scenario.manifest:
        if "kind" not in e:
            continue
        out.append(
            Anomaly(
                AnomalyKind(e["kind"]),
                tuple(e.get("subjects", ())),
                tuple(tuple(p) for p in e.get("paths", ())),
                tuple(e.get("nodes", ())),
            )
        )
    return out


def manifest_recall(scenario: Scenario, result: AnalysisResult) -> tuple[list[Anomaly], list[Anomaly]]:
    """Split injected instances into (found, missing)."""
    found, missing = [], []
    for exp in manifest_anomalies(scenario):
        hit = any(same_instance(exp, got) for got in result.of_kind(exp.kind))
        (found if hit else missing).append(exp)
    return found, missing


__all__ = [
    "GenerationError",
    "GenerationParams",
    "INJECTION_COST",
    "generate_document",
    "generate_scenario",
    "manifest_anomalies",
    "manifest_recall",
]
