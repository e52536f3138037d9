"""Detectors for the nineteen anomaly kinds and the analysis driver."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

from .network import NetworkError, UnsupportedTechnologyError, max_coefficients
from .paths import (
    DEFAULT_PATH_CAP,
    ConnectionGraph,
    Hop,
    Path,
    detect_cycles,
    enumerate_all_paths,
)
from .policy import (
    PolicyImplementation,
    coefficient_relation,
    technology_relation,
)
from .scenario import Scenario, minimum_coefficients
from .traffic import SOURCE_FIELDS, Relation, selector_relation


class EffectCategory(str, Enum):
    INSECURE = "INSECURE"
    UNFEASIBLE = "UNFEASIBLE"
    POTENTIAL_ERROR = "POTENTIAL_ERROR"
    SUBOPTIMAL_IMPLEMENTATION = "SUBOPTIMAL_IMPLEMENTATION"
    SUBOPTIMAL_WALK = "SUBOPTIMAL_WALK"


class InfoCategory(str, Enum):
    PI_LEVEL_IRRELEVANT = "PI_LEVEL_IRRELEVANT"
    PI_LEVEL_UNSUITABLE = "PI_LEVEL_UNSUITABLE"
    NODE_INTRA_TECH = "NODE_INTRA_TECH"
    NODE_INTER_TECH = "NODE_INTER_TECH"
    NETWORK_CHANNEL = "NETWORK_CHANNEL"
    NETWORK_PATH = "NETWORK_PATH"


class AnomalyKind(str, Enum):
    INTERNAL_LOOP = "INTERNAL_LOOP"
    OUT_OF_PLACE = "OUT_OF_PLACE"
    NON_ENFORCEABILITY = "NON_ENFORCEABILITY"
    INADEQUACY = "INADEQUACY"
    SHADOWING = "SHADOWING"
    REDUNDANCY = "REDUNDANCY"
    EXCEPTION = "EXCEPTION"
    CORRELATION = "CORRELATION"
    INCLUSION = "INCLUSION"
    AFFINITY = "AFFINITY"
    CONTRADICTION = "CONTRADICTION"
    SUPERFLUOUS = "SUPERFLUOUS"
    SKEWED_CHANNEL = "SKEWED_CHANNEL"
    FILTERED_CHANNEL = "FILTERED_CHANNEL"
    L2 = "L2"
    ASYMMETRIC_CHANNEL = "ASYMMETRIC_CHANNEL"
    CYCLIC_PATH = "CYCLIC_PATH"
    MONITORABILITY = "MONITORABILITY"
    ALTERNATIVE_PATH = "ALTERNATIVE_PATH"

    @property
    def effect(self) -> EffectCategory:
        return _EFFECT[self]

    @property
    def info(self) -> InfoCategory:
        return _INFO[self]

    @property
    def order(self) -> int:
        return _ORDER[self]


_ORDER = {k: i for i, k in enumerate(AnomalyKind)}

_E, _I, K = EffectCategory, InfoCategory, AnomalyKind
_EFFECT = {
    K.INADEQUACY: _E.INSECURE,
    K.MONITORABILITY: _E.INSECURE,
    K.SKEWED_CHANNEL: _E.INSECURE,
    K.ASYMMETRIC_CHANNEL: _E.INSECURE,
    K.NON_ENFORCEABILITY: _E.UNFEASIBLE,
    K.OUT_OF_PLACE: _E.UNFEASIBLE,
    K.FILTERED_CHANNEL: _E.UNFEASIBLE,
    K.L2: _E.UNFEASIBLE,
    K.SHADOWING: _E.POTENTIAL_ERROR,
    K.EXCEPTION: _E.POTENTIAL_ERROR,
    K.CORRELATION: _E.POTENTIAL_ERROR,
    K.AFFINITY: _E.POTENTIAL_ERROR,
    K.CONTRADICTION: _E.POTENTIAL_ERROR,
    K.REDUNDANCY: _E.SUBOPTIMAL_IMPLEMENTATION,
    K.INCLUSION: _E.SUBOPTIMAL_IMPLEMENTATION,
    K.SUPERFLUOUS: _E.SUBOPTIMAL_IMPLEMENTATION,
    K.INTERNAL_LOOP: _E.SUBOPTIMAL_IMPLEMENTATION,
    K.ALTERNATIVE_PATH: _E.SUBOPTIMAL_WALK,
    K.CYCLIC_PATH: _E.SUBOPTIMAL_WALK,
}
_INFO = {
    K.INTERNAL_LOOP: _I.PI_LEVEL_IRRELEVANT,
    K.OUT_OF_PLACE: _I.PI_LEVEL_IRRELEVANT,
    K.NON_ENFORCEABILITY: _I.PI_LEVEL_UNSUITABLE,
    K.INADEQUACY: _I.PI_LEVEL_UNSUITABLE,
    K.SHADOWING: _I.NODE_INTRA_TECH,
    K.REDUNDANCY: _I.NODE_INTRA_TECH,
    K.EXCEPTION: _I.NODE_INTRA_TECH,
    K.CORRELATION: _I.NODE_INTRA_TECH,
    K.INCLUSION: _I.NODE_INTER_TECH,
    K.AFFINITY: _I.NODE_INTER_TECH,
    K.CONTRADICTION: _I.NODE_INTER_TECH,
    K.CYCLIC_PATH: _I.NETWORK_PATH,
    K.MONITORABILITY: _I.NETWORK_PATH,
    K.ALTERNATIVE_PATH: _I.NETWORK_PATH,
    K.SUPERFLUOUS: _I.NETWORK_CHANNEL,
    K.FILTERED_CHANNEL: _I.NETWORK_CHANNEL,
    K.L2: _I.NETWORK_CHANNEL,
    K.SKEWED_CHANNEL: _I.NETWORK_CHANNEL,
    K.ASYMMETRIC_CHANNEL: _I.NETWORK_CHANNEL,
}
del _E, _I, K


@dataclass(frozen=True)
class Anomaly:
    kind: AnomalyKind
    subjects: tuple[str, ...] = ()
    paths: tuple[tuple[str, ...], ...] = ()
    nodes: tuple[str, ...] = ()
    evidence: dict = field(default_factory=dict, compare=False, hash=False)
    message: str = field(default="", compare=False)

    @property
    def effect(self) -> EffectCategory:
        return self.kind.effect

    @property
    def info(self) -> InfoCategory:
        return self.kind.info

    @property
    def sort_key(self):
        return (self.kind.order, self.subjects, self.paths, self.nodes)

    @property
    def involved(self) -> tuple[str, ...]:
        ids = set(self.subjects)
        for p in self.paths:
            ids.update(p)
        return tuple(sorted(ids))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "effect": self.effect.value,
            "info": self.info.value,
            "subjects": list(self.subjects),
            "paths": [list(p) for p in self.paths],
            "nodes": list(self.nodes),
            "evidence": self.evidence,
            "message": self.message,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Anomaly":
        return cls(
            kind=AnomalyKind(d["kind"]),
            subjects=tuple(d.get("subjects", ())),
            paths=tuple(tuple(p) for p in d.get("paths", ())),
            nodes=tuple(d.get("nodes", ())),
            evidence=dict(d.get("evidence", {})),
            message=d.get("message", ""),
        )


@dataclass
class AnalysisStats:
    entity_count: int = 0
    pi_count: int = 0
    connection_count: int = 0
    enumerated_paths: int = 0
    pre_computation_time: float = 0.0
    analysis_time: float = 0.0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class AnalysisResult:
    anomalies: list[Anomaly]
    stats: AnalysisStats
    notes: list[str] = field(default_factory=list)
    truncated: bool = False

    def of_kind(self, kind: AnomalyKind) -> list[Anomaly]:
        return [a for a in self.anomalies if a.kind is kind]

    def __iter__(self):
        return iter(self.anomalies)

    def __len__(self) -> int:
        return len(self.anomalies)


# ---------------------------------------------------------------------------
# shared helpers


def _r(rel: Relation) -> str:
    return rel.value


def _geq(rel: Relation) -> bool:
    return rel in (Relation.EQUIVALENT, Relation.DOMINATES)


def _lt(rel: Relation) -> bool:
    return rel is Relation.DOMINATED_BY


def _nd(rel: Relation) -> bool:
    return rel is not Relation.DISJOINT


class AnalysisContext:
    """Per-scenario caches shared by the detectors."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.forest = scenario.forest
        self.chain = {pi.id: scenario.chain(pi) for pi in scenario.pis}
        self.chain_set = {k: frozenset(v) for k, v in self.chain.items()}
        self.notes: list[str] = []
        self._walks: dict[str, tuple[str, ...]] = {}
        self._scope_cache: dict[tuple[str, str], bool] = {}
        self._pair_cache: dict[tuple[str, str], tuple] = {}

    def node(self, ref: str) -> str:
        return self.forest.node_of(ref)

    def walk(self, pi: PolicyImplementation) -> tuple[str, ...]:
        if pi.id not in self._walks:
            self._walks[pi.id] = self.scenario.walk(pi)
        return self._walks[pi.id]

    def ent(self, a: str, b: str) -> Relation:
        return self.forest.relation(a, b)

    def tech(self, a: str, b: str) -> Relation:
        return technology_relation(a, b, self.scenario.registry)

    def in_source_scope(self, ref: str, pi: PolicyImplementation) -> bool:
        key = (ref, pi.id)
        if key not in self._scope_cache:
            ip, ports = self.forest.address_scope(ref)
            if ip is None:
                raise NetworkError(f"entity {ref} has no resolvable address")
            sel = pi.selector.restricted(SOURCE_FIELDS)
            self._scope_cache[key] = ip.issubset(sel.ip_src) and ports.issubset(sel.p_src)
        return self._scope_cache[key]


def _ctx(obj) -> AnalysisContext:
    return obj if isinstance(obj, AnalysisContext) else AnalysisContext(obj)


# ---------------------------------------------------------------------------
# PI level


def detect_internal_loop(ctx, i1: PolicyImplementation) -> Optional[Anomaly]:
    ctx = _ctx(ctx)
    rel = ctx.ent(i1.source, i1.destination)
    if rel is Relation.DISJOINT:
        return None
    return Anomaly(
        AnomalyKind.INTERNAL_LOOP,
        (i1.id,),
        nodes=(ctx.node(i1.source),),
        evidence={"s1~d1": _r(rel)},
        message=f"{i1.id}: source and destination are both on {ctx.node(i1.source)}",
    )


def detect_out_of_place(ctx, i1: PolicyImplementation) -> Optional[Anomaly]:
    ctx = _ctx(ctx)
    deployed = i1.deployed_at
    src_node = ctx.node(i1.source)
    if deployed is None or ctx.ent(deployed, i1.source) is not Relation.DISJOINT:
        return None
    return Anomaly(
        AnomalyKind.OUT_OF_PLACE,
        (i1.id,),
        nodes=(deployed,),
        evidence={"N(i1)": deployed, "node(s1)": src_node, "N(i1)~s1": "DISJOINT"},
        message=f"{i1.id}: deployed on {deployed} but its source lives on {src_node}",
    )


def detect_non_enforceability(ctx, i1: PolicyImplementation) -> Optional[Anomaly]:
    ctx = _ctx(ctx)
    s_node, d_node = ctx.node(i1.source), ctx.node(i1.destination)
    src_p, dst_p = ctx.scenario.profile(s_node), ctx.scenario.profile(d_node)
    ev = {
        "t1 in T(s1)": src_p.supports(i1.technology),
        "t1 in T(d1)": dst_p.supports(i1.technology),
    }
    too_high = False
    try:
        cmax = max_coefficients(src_p, dst_p, i1.technology)
    except UnsupportedTechnologyError:
        cmax = None
    if cmax is not None:
        rel = coefficient_relation(i1.coefficients, cmax)
        ev["C_max"] = cmax.to_spec()
        ev["C1~C_max"] = _r(rel)
        too_high = rel is Relation.DOMINATES
    if ev["t1 in T(s1)"] and ev["t1 in T(d1)"] and not too_high:
        return None
    reasons = []
    if not ev["t1 in T(s1)"]:
        reasons.append(f"{s_node} lacks {i1.technology}")
    if not ev["t1 in T(d1)"]:
        reasons.append(f"{d_node} lacks {i1.technology}")
    if too_high:
        reasons.append(f"coefficients {i1.coefficients} exceed {cmax}")
    return Anomaly(
        AnomalyKind.NON_ENFORCEABILITY,
        (i1.id,),
        nodes=(s_node, d_node),
        evidence=ev,
        message=f"{i1.id}: cannot be enforced ({'; '.join(reasons)})",
    )


def detect_inadequacy(ctx, i1: PolicyImplementation) -> Optional[Anomaly]:
    ctx = _ctx(ctx)
    cmin = minimum_coefficients(ctx.scenario, i1)
    rel = coefficient_relation(i1.coefficients, cmin)
    if rel is Relation.DISJOINT:
        ctx.notes.append(
            f"{i1.id}: coefficients {i1.coefficients} are incomparable with the minimum {cmin}"
        )
    if not _lt(rel):
        return None
    return Anomaly(
        AnomalyKind.INADEQUACY,
        (i1.id,),
        evidence={"C1": i1.coefficients.to_spec(), "C_min": cmin.to_spec(), "C1~C_min": _r(rel)},
        message=f"{i1.id}: coefficients {i1.coefficients} are below the minimum {cmin}",
    )


# ---------------------------------------------------------------------------
# node level


def _fields(ctx: AnalysisContext, i1, i2) -> dict[str, Relation]:
    key = (i1.id, i2.id)
    cached = ctx._pair_cache.get(key)
    if cached is not None and cached[0] is i1 and cached[1] is i2:
        return cached[2]
    rels = {
        "s": ctx.ent(i1.source, i2.source),
        "d": ctx.ent(i1.destination, i2.destination),
        "t": ctx.tech(i1.technology, i2.technology),
        "C": coefficient_relation(i1.coefficients, i2.coefficients),
        "S": selector_relation(i1.selector, i2.selector),
    }
    ctx._pair_cache[key] = (i1, i2, rels)
    return rels


def _ev(rels: dict[str, Relation], i1, i2) -> dict:
    ev = {f"{k}1~{k}2": _r(v) for k, v in rels.items()}
    ev["pi(i1)"] = i1.priority
    ev["pi(i2)"] = i2.priority
    ev["G1=G2"] = i1.gateways == i2.gateways
    return ev


def _node_guard(i1, i2) -> bool:
    return i1.id != i2.id and i1.gateways == i2.gateways


def _is_shadowing(r, i1, i2) -> bool:
    return (
        i1.priority < i2.priority
        and r["t"] is Relation.EQUIVALENT
        and _geq(r["s"])
        and _geq(r["d"])
        and _geq(r["S"])
        and r["C"] is Relation.DISJOINT
    )


def _is_redundancy(r, i1, i2) -> bool:
    return (
        i1.priority < i2.priority
        and r["t"] is Relation.EQUIVALENT
        and _geq(r["s"])
        and _geq(r["d"])
        and _geq(r["S"])
        and _geq(r["C"])
    )


def _is_exception(r, i1, i2) -> bool:
    return (
        i1.priority < i2.priority
        and r["t"] is Relation.EQUIVALENT
        and _lt(r["s"])
        and _lt(r["d"])
        and _lt(r["S"])
        and r["C"] is Relation.DISJOINT
    )


def _is_inclusion(r) -> bool:
    rels = (r["s"], r["d"], r["t"], r["C"], r["S"])
    return all(_geq(x) for x in rels) and any(x is Relation.DOMINATES for x in rels)


def _pair(kind, i1, i2, node, ev, message) -> Anomaly:
    return Anomaly(kind, (i1.id, i2.id), nodes=(node,), evidence=ev, message=message)


def detect_shadowing(ctx, i1, i2) -> Optional[Anomaly]:
    ctx = _ctx(ctx)
    if not _node_guard(i1, i2):
        return None
    r = _fields(ctx, i1, i2)
    if not _is_shadowing(r, i1, i2):
        return None
    return _pair(
        AnomalyKind.SHADOWING, i1, i2, i1.deployed_at, _ev(r, i1, i2),
        f"{i1.id} matches all traffic of {i2.id} first, with incomparable coefficients",
    )


def detect_redundancy(ctx, i1, i2) -> Optional[Anomaly]:
    ctx = _ctx(ctx)
    if not _node_guard(i1, i2):
        return None
    r = _fields(ctx, i1, i2)
    if not _is_redundancy(r, i1, i2):
        return None
    return _pair(
        AnomalyKind.REDUNDANCY, i1, i2, i1.deployed_at, _ev(r, i1, i2),
        f"{i2.id} adds nothing: {i1.id} already covers it at higher priority",
    )


def detect_exception(ctx, i1, i2) -> Optional[Anomaly]:
    ctx = _ctx(ctx)
    if not _node_guard(i1, i2):
        return None
    r = _fields(ctx, i1, i2)
    if not _is_exception(r, i1, i2):
        return None
    return _pair(
        AnomalyKind.EXCEPTION, i1, i2, i1.deployed_at, _ev(r, i1, i2),
        f"{i1.id} carves an exception out of the broader {i2.id}",
    )


def detect_correlation(ctx, i1, i2) -> Optional[Anomaly]:
    ctx = _ctx(ctx)
    if not _node_guard(i1, i2):
        return None
    r = _fields(ctx, i1, i2)
    if not (
        _nd(r["s"]) and _nd(r["d"]) and r["t"] is Relation.EQUIVALENT and _nd(r["S"])
    ):
        return None
    rr = _fields(ctx, i2, i1)
    for a, b, rel in ((i1, i2, r), (i2, i1, rr)):
        if _is_shadowing(rel, a, b) or _is_exception(rel, a, b) or _is_redundancy(rel, a, b):
            return None
    first, second = sorted((i1, i2), key=lambda p: p.id)
    rels = r if first is i1 else rr
    return _pair(
        AnomalyKind.CORRELATION, first, second, i1.deployed_at, _ev(rels, first, second),
        f"{first.id} and {second.id} both match part of each other's traffic",
    )


def detect_inclusion(ctx, i1, i2) -> Optional[Anomaly]:
    ctx = _ctx(ctx)
    if not _node_guard(i1, i2):
        return None
    r = _fields(ctx, i1, i2)
    if not _is_inclusion(r):
        return None
    return _pair(
        AnomalyKind.INCLUSION, i1, i2, i1.deployed_at, _ev(r, i1, i2),
        f"{i1.id} includes {i2.id}",
    )


def detect_affinity(ctx, i1, i2) -> Optional[Anomaly]:
    ctx = _ctx(ctx)
    if not _node_guard(i1, i2):
        return None
    r = _fields(ctx, i1, i2)
    if not (_nd(r["s"]) and _nd(r["d"]) and _nd(r["t"]) and _nd(r["S"])):
        return None
    if _is_inclusion(r) or _is_inclusion(_fields(ctx, i2, i1)):
        return None
    first, second = sorted((i1, i2), key=lambda p: p.id)
    rels = r if first is i1 else _fields(ctx, first, second)
    return _pair(
        AnomalyKind.AFFINITY, first, second, i1.deployed_at, _ev(rels, first, second),
        f"{first.id} and {second.id} overlap without either including the other",
    )


def detect_contradiction(ctx, i1, i2) -> Optional[Anomaly]:
    ctx = _ctx(ctx)
    if not _node_guard(i1, i2):
        return None
    r = _fields(ctx, i1, i2)
    if not (_nd(r["s"]) and _nd(r["d"]) and r["t"] is Relation.DISJOINT and _nd(r["S"])):
        return None
    first, second = sorted((i1, i2), key=lambda p: p.id)
    rels = r if first is i1 else _fields(ctx, first, second)
    return _pair(
        AnomalyKind.CONTRADICTION, first, second, i1.deployed_at, _ev(rels, first, second),
        f"{first.id} and {second.id} disagree on whether to protect the same traffic",
    )


def detect_inspection_contradiction(ctx, i1) -> Optional[Anomaly]:
    """A protecting PI that hides traffic which must stay inspectable."""
    ctx = _ctx(ctx)
    if i1.coefficients.confidentiality <= 0:
        return None
    zones = [
        idx for idx, z in enumerate(ctx.scenario.thresholds.inspection_zones) if z.overlaps(i1.selector)
    ]
    if not zones:
        return None
    return Anomaly(
        AnomalyKind.CONTRADICTION,
        (i1.id,),
        nodes=(i1.deployed_at,),
        evidence={"source": "thresholds.inspection_zones", "zones": zones, "c1^c": str(i1.coefficients.confidentiality)},
        message=f"{i1.id} encrypts traffic that must remain inspectable",
    )


# ---------------------------------------------------------------------------
# network level: channels


def superfluous_inner(ctx, i1, candidates: Iterable[PolicyImplementation]) -> list[PolicyImplementation]:
    """Channels encapsulated by ``i1``: source in scope and a strictly wider chain."""
    ctx = _ctx(ctx)
    g1 = ctx.chain_set[i1.id]
    out = []
    for k in candidates:
        if k.id == i1.id:
            continue
        gk = ctx.chain_set[k.id]
        if not (gk > g1):
            continue
        try:
            if ctx.in_source_scope(k.source, i1):
                out.append(k)
        except NetworkError:
            ctx.notes.append(f"{k.id}: source {k.source} has no address; skipped as inner channel of {i1.id}")
    return out


def detect_superfluous(ctx, i1, all_pis: Iterable[PolicyImplementation]) -> Optional[Anomaly]:
    ctx = _ctx(ctx)
    inner = superfluous_inner(ctx, i1, all_pis)
    if not inner:
        return None
    if any(_lt(coefficient_relation(k.coefficients, i1.coefficients)) for k in inner):
        return None
    ids = sorted(k.id for k in inner)
    return Anomaly(
        AnomalyKind.SUPERFLUOUS,
        (i1.id,),
        nodes=ctx.chain[i1.id],
        evidence={"inner": ids, "C1": i1.coefficients.to_spec(), "weaker_inner": []},
        message=f"tunnel {i1.id} protects no more than its inner channels {', '.join(ids)}",
    )


def _skewed_holds(ctx: AnalysisContext, i1, i2) -> Optional[dict]:
    if i1.id == i2.id:
        return None
    if i1.coefficients.confidentiality <= 0 or i2.coefficients.confidentiality <= 0:
        return None
    g1, g2 = ctx.chain_set[i1.id], ctx.chain_set[i2.id]
    shared = g1 & g2
    if len(shared) < 2 or not (g2 - g1):
        return None
    try:
        if not ctx.in_source_scope(i1.source, i2):
            return None
    except NetworkError:
        return None
    return {"shared": sorted(shared), "G2*\\G1*": sorted(g2 - g1)}


def detect_skewed(ctx, i1, i2) -> Optional[Anomaly]:
    ctx = _ctx(ctx)
    for a, b in ((i1, i2), (i2, i1)):
        ev = _skewed_holds(ctx, a, b)
        if ev is not None:
            ev = {"i1": a.id, "i2": b.id, **ev}
            nodes = tuple(sorted(ctx.chain_set[a.id] | ctx.chain_set[b.id]))
            first, second = sorted((a.id, b.id))
            return Anomaly(
                AnomalyKind.SKEWED_CHANNEL,
                (first, second),
                nodes=nodes,
                evidence=ev,
                message=f"tunnels {a.id} and {b.id} overlap on {', '.join(ev['shared'])}",
            )
    return None


def detect_filtered(ctx, i1) -> Optional[Anomaly]:
    ctx = _ctx(ctx)
    hits = [g for g in (i1.gateways or ()) if ctx.scenario.profile(g).is_filtered(i1.selector)]
    if not hits:
        return None
    return Anomaly(
        AnomalyKind.FILTERED_CHANNEL,
        (i1.id,),
        nodes=tuple(hits),
        evidence={"filtering_nodes": hits},
        message=f"{i1.id}: all its traffic is dropped at {', '.join(hits)}",
    )


def detect_l2(ctx, i1) -> Optional[Anomaly]:
    ctx = _ctx(ctx)
    if ctx.scenario.registry.layer(i1.technology) != 2:
        return None
    missing = [n for n in ctx.chain[i1.id] if i1.technology not in ctx.scenario.profile(n).layer2_technologies]
    if not missing:
        return None
    missing = list(dict.fromkeys(missing))
    return Anomaly(
        AnomalyKind.L2,
        (i1.id,),
        nodes=tuple(missing),
        evidence={"nodes_without_t1": missing},
        message=f"{i1.id}: {i1.technology} is unavailable at {', '.join(missing)}",
    )


def detect_asymmetric(ctx, i1, all_pis: Iterable[PolicyImplementation]) -> Optional[Anomaly]:
    """Flag ``i1`` when the reverse communication exists but no mirror PI does."""
    ctx = _ctx(ctx)
    reverse = []
    for i2 in all_pis:
        if i2.id == i1.id:
            continue
        if ctx.ent(i1.source, i2.destination) is Relation.DISJOINT:
            continue
        if ctx.ent(i1.destination, i2.source) is Relation.DISJOINT:
            continue
        if not i1.selector.overlaps(i2.selector.reversed()):
            continue
        mirror = (
            i1.technology == i2.technology
            and i1.coefficients == i2.coefficients
            and tuple(i1.gateways or ()) == tuple(reversed(i2.gateways or ()))
        )
        if mirror:
            return None
        reverse.append(i2.id)
    if not reverse:
        return None
    reverse.sort()
    return Anomaly(
        AnomalyKind.ASYMMETRIC_CHANNEL,
        (i1.id,),
        nodes=(ctx.node(i1.source), ctx.node(i1.destination)),
        evidence={"reverse_pis": reverse, "mirror": None},
        message=f"{i1.id}: the reverse direction ({', '.join(reverse)}) is protected differently",
    )


# ---------------------------------------------------------------------------
# network level: paths


def build_connection_graph(ctx) -> ConnectionGraph:
    ctx = _ctx(ctx)
    return ConnectionGraph.from_chains(ctx.chain)


def detect_cyclic_paths(ctx, graph: Optional[ConnectionGraph] = None, cap: Optional[int] = None) -> tuple[list[Anomaly], bool]:
    ctx = _ctx(ctx)
    graph = graph or build_connection_graph(ctx)
    # a two-node cycle is just the two directions of one communication
    cycles, truncated = detect_cycles(graph, cap, min_length=3)
    out = []
    for cyc in cycles:
        pis = set()
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            pis |= graph.edges[(a, b)]
        out.append(
            Anomaly(
                AnomalyKind.CYCLIC_PATH,
                tuple(sorted(pis)),
                nodes=cyc,
                evidence={"cycle": list(cyc)},
                message=f"cycle {' -> '.join(cyc + cyc[:1])}",
            )
        )
    return out, truncated


def _cc(scenario: Scenario, pi_id: str):
    return scenario.pi(pi_id).coefficients.confidentiality


def detect_monitorability(ctx, e1: str, e2: str, paths: Sequence[Path]) -> Optional[Anomaly]:
    ctx = _ctx(ctx)
    sc = ctx.scenario
    communicating = [p for p in paths if any(_cc(sc, i) > 0 for i in p.pis)]
    if not communicating:
        return None
    if any(len(p) == 1 and _cc(sc, p.pis[0]) > 0 for p in paths):
        return None
    multi = tuple(p.pis for p in communicating)
    return Anomaly(
        AnomalyKind.MONITORABILITY,
        tuple(sorted({i for p in multi for i in p})),
        paths=multi,
        nodes=(e1, e2),
        evidence={"end_to_end_encrypted": False, "paths": [list(p) for p in multi]},
        message=f"no end-to-end confidential channel from {e1} to {e2}",
    )


def path_walk(ctx, path: Path) -> tuple[str, ...]:
    ctx = _ctx(ctx)
    walk: list[str] = []
    for pid in path.pis:
        w = ctx.walk(ctx.scenario.pi(pid))
        walk.extend(w if not walk else w[1:])
    return tuple(walk)


def detect_alternative_paths(ctx, e1: str, e2: str, paths: Sequence[Path]) -> list[Anomaly]:
    """One anomaly per pair of paths that carry common traffic over different walks."""
    ctx = _ctx(ctx)
    out = []
    ordered = sorted(paths, key=lambda p: p.pis)
    for p1, p2 in itertools.combinations(ordered, 2):
        if p1.pis == p2.pis:
            continue
        w1, w2 = path_walk(ctx, p1), path_walk(ctx, p2)
        if w1 == w2:
            continue
        if p1.traffic is not None and p2.traffic is not None and not p1.traffic.overlaps(p2.traffic):
            continue
        out.append(
            Anomaly(
                AnomalyKind.ALTERNATIVE_PATH,
                tuple(sorted(set(p1.pis) | set(p2.pis))),
                paths=(p1.pis, p2.pis),
                nodes=(e1, e2),
                evidence={"walks": [list(w1), list(w2)]},
                message=f"{e1} reaches {e2} over {'/'.join(p1.pis)} and over {'/'.join(p2.pis)}",
            )
        )
    return out


# ---------------------------------------------------------------------------
# driver


def _by_node(ctx: AnalysisContext, pis: Sequence[PolicyImplementation]) -> dict[str, list]:
    idx: dict[str, list] = {}
    for pi in pis:
        for n in ctx.chain_set[pi.id]:
            idx.setdefault(n, []).append(pi)
    return idx


def run_analysis(scenario: Scenario, path_cap: int = DEFAULT_PATH_CAP) -> AnalysisResult:
    """Pre-compute (forest, chains, paths) then run every detector."""
    # pre-computation covers the network only: entity scopes and node adjacency
    t0 = time.perf_counter()
    scenario.forest.reindex()
    for node in scenario.topology.nodes:
        scenario.topology.neighbours(node)
    t1 = time.perf_counter()
    ctx = AnalysisContext(scenario)

    pis = sorted(scenario.pis, key=lambda p: p.id)
    found: list[Anomaly] = []
    add = lambda a: a is not None and found.append(a)  # noqa: E731

    # PI level
    for pi in pis:
        add(detect_internal_loop(ctx, pi))
        add(detect_out_of_place(ctx, pi))
        add(detect_non_enforceability(ctx, pi))
        add(detect_inadequacy(ctx, pi))

    # node level, same PI set
    for ps in scenario.pi_sets():
        members = ps.pis
        for a, b in itertools.permutations(members, 2):
            add(detect_shadowing(ctx, a, b))
            add(detect_redundancy(ctx, a, b))
            add(detect_exception(ctx, a, b))
        for a, b in itertools.combinations(members, 2):
            add(detect_correlation(ctx, a, b))

    # node level, different technologies on one node
    per_node: dict[str, list] = {}
    for pi in pis:
        per_node.setdefault(pi.deployed_at, []).append(pi)
    for node in sorted(per_node):
        members = per_node[node]
        for a, b in itertools.combinations(members, 2):
            if a.technology == b.technology:
                continue
            add(detect_inclusion(ctx, a, b))
            add(detect_inclusion(ctx, b, a))
            add(detect_affinity(ctx, a, b))
            add(detect_contradiction(ctx, a, b))
    if scenario.thresholds.inspection_zones:
        for pi in pis:
            add(detect_inspection_contradiction(ctx, pi))

    # channel level
    node_index = _by_node(ctx, pis)
    by_source_node: dict[str, list] = {}
    for pi in pis:
        by_source_node.setdefault(ctx.node(pi.source), []).append(pi)
    for pi in pis:
        s_node = ctx.node(pi.source)
        candidates = [k for k in node_index.get(s_node, ()) if ctx.chain_set[k.id] > ctx.chain_set[pi.id]]
        add(detect_superfluous(ctx, pi, candidates))
        add(detect_filtered(ctx, pi))
        add(detect_l2(ctx, pi))
        add(detect_asymmetric(ctx, pi, by_source_node.get(ctx.node(pi.destination), ())))
    seen_pairs = set()
    for pi in pis:
        if pi.coefficients.confidentiality <= 0:
            continue
        partners = {}
        for n in ctx.chain_set[pi.id]:
            for other in node_index.get(n, ()):
                if other.id > pi.id and other.coefficients.confidentiality > 0:
                    partners[other.id] = other
        for oid in sorted(partners):
            key = (pi.id, oid)
            if key in seen_pairs:
                continue
            seen_pairs.add(key)
            add(detect_skewed(ctx, pi, partners[oid]))

    # path level
    graph = build_connection_graph(ctx)
    cyc, cyc_trunc = detect_cyclic_paths(ctx, graph, path_cap)
    found.extend(cyc)
    hops = [Hop(pi.id, ctx.node(pi.source), ctx.node(pi.destination), pi.selector) for pi in pis]
    pathset = enumerate_all_paths(hops, path_cap)
    for (e1, e2), group in sorted(pathset.between().items()):
        add(detect_monitorability(ctx, e1, e2, group))
        found.extend(detect_alternative_paths(ctx, e1, e2, group))
    t2 = time.perf_counter()

    stats = AnalysisStats(
        entity_count=len(scenario.forest),
        pi_count=len(scenario.pis),
        connection_count=sum(max(1, len(c) - 1) for c in ctx.chain.values()),
        enumerated_paths=len(pathset.paths),
        pre_computation_time=t1 - t0,
        analysis_time=t2 - t1,
    )
    notes = list(dict.fromkeys(ctx.notes))
    if pathset.truncated:
        notes.append(f"path enumeration stopped at the cap of {path_cap} multi-PI paths")
    if cyc_trunc:
        notes.append(f"cycle enumeration stopped at the cap of {path_cap} cycles")
    found.sort(key=lambda a: a.sort_key)
    return AnalysisResult(found, stats, notes, pathset.truncated or cyc_trunc)


DETECTOR_KINDS = tuple(AnomalyKind)

__all__ = [
    "AnalysisContext",
    "AnalysisResult",
    "AnalysisStats",
    "Anomaly",
    "AnomalyKind",
    "EffectCategory",
    "InfoCategory",
    "build_connection_graph",
    "detect_affinity",
    "detect_alternative_paths",
    "detect_asymmetric",
    "detect_contradiction",
    "detect_correlation",
    "detect_cyclic_paths",
    "detect_exception",
    "detect_filtered",
    "detect_inadequacy",
    "detect_inclusion",
    "detect_inspection_contradiction",
    "detect_internal_loop",
    "detect_l2",
    "detect_monitorability",
    "detect_non_enforceability",
    "detect_out_of_place",
    "detect_redundancy",
    "detect_shadowing",
    "detect_skewed",
    "detect_superfluous",
    "path_walk",
    "run_analysis",
]
