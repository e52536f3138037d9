"""Per-kind resolution suggestions and their verification on scenario copies."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

from .anomalies import AnalysisResult, Anomaly, AnomalyKind, path_walk, run_analysis, AnalysisContext
from .network import UnroutableError, UnsupportedTechnologyError, max_coefficients
from .paths import Path, cycle_edges
from .policy import (
    NULL,
    Coefficients,
    PolicyImplementation,
    coefficient_relation,
    least_upper_bound_pi,
)
from .scenario import Scenario, minimum_coefficients
from .traffic import Relation


class ResolutionError(ValueError):
    """A resolution that cannot be built or applied."""


class Action(str, Enum):
    DELETE_PI = "DELETE_PI"
    REPLACE_WITH_LUB = "REPLACE_WITH_LUB"
    SPLIT_TUNNELS = "SPLIT_TUNNELS"
    RAISE_COEFFICIENTS = "RAISE_COEFFICIENTS"
    REDEPLOY_PI = "REDEPLOY_PI"
    EDIT_FILTER_RULE = "EDIT_FILTER_RULE"
    CHANGE_TECHNOLOGY = "CHANGE_TECHNOLOGY"
    REMOVE_CYCLE_EDGES = "REMOVE_CYCLE_EDGES"
    SELECT_PREFERRED_PATH = "SELECT_PREFERRED_PATH"
    MANUAL_REVIEW = "MANUAL_REVIEW"


@dataclass(frozen=True)
class Resolution:
    """A proposed edit: PIs to drop, PIs to add and firewall rules to drop."""

    action: Action
    subjects: tuple[str, ...]
    anomaly: Anomaly
    removes: tuple[str, ...] = ()
    replacement_pis: tuple[PolicyImplementation, ...] = ()
    firewall_removals: tuple[tuple[str, int], ...] = ()
    rationale: str = ""

    def to_dict(self) -> dict:
        out = {
            "action": self.action.value,
            "subjects": list(self.subjects),
            "removes": list(self.removes),
            "replacement_pis": [p.to_spec() for p in self.replacement_pis],
            "rationale": self.rationale,
        }
        if self.firewall_removals:
            out["firewall_removals"] = [[n, i] for n, i in self.firewall_removals]
        return out


# ---------------------------------------------------------------------------
# helpers


def _free_priority(scenario: Scenario, node: str, tech: str, desired: int, gone: Sequence[str] = ()) -> int:
    used = {
        p.priority
        for p in scenario.pis
        if p.deployed_at == node and p.technology == tech and p.id not in gone
    }
    prio = desired
    while prio in used:
        prio += 1
    return prio


def _next_priority(scenario: Scenario, node: str, tech: str, gone: Sequence[str] = ()) -> int:
    used = [
        p.priority
        for p in scenario.pis
        if p.deployed_at == node and p.technology == tech and p.id not in gone
    ]
    return max(used) + 1 if used else 0


def _fresh_id(scenario: Scenario, base: str, taken: set[str] = frozenset()) -> str:
    cand, n = base, 1
    while scenario.has_pi(cand) or cand in taken:
        n += 1
        cand = f"{base}#{n}"
    return cand


def _delete(anomaly, pi_id, why) -> Resolution:
    return Resolution(Action.DELETE_PI, (pi_id,), anomaly, removes=(pi_id,), rationale=why)


def _lub(anomaly, scenario, i1, i2, priority, action=Action.REPLACE_WITH_LUB) -> Optional[Resolution]:
    try:
        node = scenario.node_of(i1.source)
        i3 = least_upper_bound_pi(
            i1,
            i2,
            scenario.forest,
            registry=scenario.registry,
            preferred=scenario.preferred_technologies(node),
            new_id=_fresh_id(scenario, f"lub_{i1.id}_{i2.id}"),
            priority=0,
        )
    except Exception:
        return None
    gone = (i1.id, i2.id)
    i3 = i3.with_(priority=_free_priority(scenario, i3.deployed_at, i3.technology, priority, gone))
    return Resolution(
        action,
        gone,
        anomaly,
        removes=gone,
        replacement_pis=(i3,),
        rationale=f"replace {i1.id} and {i2.id} with an upper bound at priority {i3.priority}",
    )


def _compatible_ancestor(scenario: Scenario, ref: str, layer: Optional[int]) -> str:
    forest = scenario.forest
    if forest.technology_compatible(ref, layer):
        return ref
    for anc in forest.ancestors(ref):
        if forest.technology_compatible(anc, layer):
            return anc
    return forest.node_of(ref)


def _technology_candidates(scenario: Scenario, pi: PolicyImplementation, min_layer: int = 0) -> list[str]:
    s_node, d_node = scenario.node_of(pi.source), scenario.node_of(pi.destination)
    src, dst = scenario.profile(s_node), scenario.profile(d_node)
    orig = scenario.registry.layer(pi.technology) or 0
    out = []
    for name in scenario.registry:
        layer = scenario.registry.layer(name)
        if name == NULL or name == pi.technology or layer is None or layer <= min_layer:
            continue
        try:
            cmax = max_coefficients(src, dst, name)
        except UnsupportedTechnologyError:
            continue
        if cmax is not None and coefficient_relation(pi.coefficients, cmax) is Relation.DOMINATES:
            continue
        out.append(name)
    preferred = list(src.preferred_technologies)

    def rank(name):
        pref = preferred.index(name) if name in preferred else len(preferred)
        return (pref, abs(scenario.registry.layer(name) - orig), name)

    return sorted(out, key=rank)


def _change_technology(anomaly, scenario, pi, min_layer=0) -> Optional[Resolution]:
    cands = _technology_candidates(scenario, pi, min_layer)
    if not cands:
        return None
    tech = cands[0]
    layer = scenario.registry.layer(tech)
    new = pi.with_(
        id=_fresh_id(scenario, f"{pi.id}_{tech}"),
        technology=tech,
        source=_compatible_ancestor(scenario, pi.source, layer),
        destination=_compatible_ancestor(scenario, pi.destination, layer),
        priority=_next_priority(scenario, pi.deployed_at, tech, (pi.id,)),
    )
    return Resolution(
        Action.CHANGE_TECHNOLOGY,
        (pi.id,),
        anomaly,
        removes=(pi.id,),
        replacement_pis=(new,),
        rationale=f"switch {pi.id} from {pi.technology} to {tech}",
    )


# ---------------------------------------------------------------------------
# per-kind suggestions


def _split_tunnels(anomaly, scenario, i1, i2) -> Resolution:
    c1, c2 = scenario.chain(i1), scenario.chain(i2)
    cuts = set(c1) & set(c2)
    spans: dict[tuple[str, str], dict] = {}
    order: list[tuple[str, str]] = []
    for pi, chain in ((i1, c1), (i2, c2)):
        marks = [k for k, n in enumerate(chain) if n in cuts or k in (0, len(chain) - 1)]
        for a, b in zip(marks, marks[1:]):
            key = (chain[a], chain[b])
            src = pi.source if a == 0 else chain[a]
            dst = pi.destination if b == len(chain) - 1 else chain[b]
            if key not in spans:
                spans[key] = {
                    "source": src,
                    "destination": dst,
                    "gateways": tuple(chain[a + 1 : b]),
                    "coefficients": pi.coefficients,
                    "selector": pi.selector,
                }
                order.append(key)
            else:
                seg = spans[key]
                seg["coefficients"] = seg["coefficients"].join(pi.coefficients)
                seg["selector"] = seg["selector"].field_union(pi.selector)
    gone = (i1.id, i2.id)
    taken: set[str] = set()
    new = []
    for idx, key in enumerate(order):
        seg = spans[key]
        node = key[0]
        pid = _fresh_id(scenario, f"{i1.id}_{i2.id}_seg{idx + 1}", taken)
        taken.add(pid)
        prio = _next_priority(scenario, node, i1.technology, gone) + sum(
            1 for p in new if p.deployed_at == node
        )
        new.append(
            PolicyImplementation(
                id=pid,
                source=seg["source"],
                destination=seg["destination"],
                technology=i1.technology,
                coefficients=seg["coefficients"],
                selector=seg["selector"],
                gateways=seg["gateways"],
                deployed_at=node,
                priority=prio,
            )
        )
    bounds = [order[0][0]] + [k[1] for k in order]
    return Resolution(
        Action.SPLIT_TUNNELS,
        gone,
        anomaly,
        removes=gone,
        replacement_pis=tuple(new),
        rationale=f"split into {len(new)} non-overlapping tunnels at {', '.join(dict.fromkeys(bounds))}",
    )


def _mirror(scenario, pi) -> PolicyImplementation:
    node = scenario.node_of(pi.destination)
    return PolicyImplementation(
        id=_fresh_id(scenario, f"{pi.id}_mirror"),
        source=pi.destination,
        destination=pi.source,
        technology=pi.technology,
        coefficients=pi.coefficients,
        selector=pi.selector.reversed(),
        gateways=tuple(reversed(pi.gateways or ())),
        deployed_at=node,
        priority=_next_priority(scenario, node, pi.technology),
    )


def _end_to_end(scenario, anomaly) -> Optional[PolicyImplementation]:
    e1, e2 = anomaly.nodes
    first_path = anomaly.paths[0]
    first = scenario.pi(first_path[0])
    last = scenario.pi(first_path[-1])
    coeffs = Coefficients()
    selector = first.selector
    for path in anomaly.paths:
        for pid in path:
            coeffs = coeffs.join(scenario.pi(pid).coefficients)
    for pid in first_path[1:]:
        selector = selector.intersection(scenario.pi(pid).selector)
    try:
        gateways = scenario.topology.crossed_gateways(e1, e2)
    except UnroutableError:
        walk = path_walk(AnalysisContext(scenario), Path(e1, e2, first_path))
        gateways = tuple(walk[1:-1])
    return PolicyImplementation(
        id=_fresh_id(scenario, f"e2e_{e1}_{e2}"),
        source=first.source,
        destination=last.destination if scenario.forest.technology_compatible(
            last.destination, scenario.registry.layer(first.technology)) else e2,
        technology=first.technology,
        coefficients=coeffs,
        selector=selector,
        gateways=tuple(g for g in gateways if g not in (e1, e2)),
        deployed_at=e1,
        priority=0,
    )


def _path_score(scenario, path) -> tuple:
    total = sum(sum(scenario.pi(p).coefficients.as_tuple()) for p in path)
    return (len(path), -total, path)


def suggest(anomaly: Anomaly, scenario: Scenario, *, prefer: str = "shortest") -> list[Resolution]:
    """Ordered suggestions; the first one closes the anomaly instance."""
    for pid in anomaly.involved:
        if not scenario.has_pi(pid):
            raise ResolutionError(f"anomaly refers to PI {pid!r}, absent from the scenario")
    k = anomaly.kind
    subj = anomaly.subjects
    pis = [scenario.pi(p) for p in subj]
    out: list[Optional[Resolution]] = []

    if k is AnomalyKind.INTERNAL_LOOP:
        out.append(_delete(anomaly, subj[0], "source and destination share a node"))

    elif k is AnomalyKind.OUT_OF_PLACE:
        pi = pis[0]
        node = scenario.node_of(pi.source)
        out.append(_delete(anomaly, pi.id, "the PI sits on a node unrelated to its source"))
        moved = pi.with_(deployed_at=node, priority=_next_priority(scenario, node, pi.technology, (pi.id,)))
        out.append(
            Resolution(
                Action.REDEPLOY_PI, (pi.id,), anomaly, removes=(pi.id,), replacement_pis=(moved,),
                rationale=f"deploy {pi.id} on {node}",
            )
        )

    elif k is AnomalyKind.NON_ENFORCEABILITY:
        pi = pis[0]
        out.append(_change_technology(anomaly, scenario, pi))
        src = scenario.profile(scenario.node_of(pi.source))
        dst = scenario.profile(scenario.node_of(pi.destination))
        try:
            cmax = max_coefficients(src, dst, pi.technology)
        except UnsupportedTechnologyError:
            cmax = None
        if cmax is not None:
            lowered = pi.with_(coefficients=pi.coefficients.meet(cmax))
            out.append(
                Resolution(
                    Action.MANUAL_REVIEW, (pi.id,), anomaly, removes=(pi.id,), replacement_pis=(lowered,),
                    rationale=f"lower the coefficients to {lowered.coefficients} (weaker protection)",
                )
            )
        out.append(
            Resolution(
                Action.MANUAL_REVIEW, (pi.id,), anomaly,
                rationale="upgrade the end-points to support the technology and coefficients",
            )
        )

    elif k is AnomalyKind.INADEQUACY:
        pi = pis[0]
        target = pi.coefficients.join(minimum_coefficients(scenario, pi))
        out.append(
            Resolution(
                Action.RAISE_COEFFICIENTS, (pi.id,), anomaly, removes=(pi.id,),
                replacement_pis=(pi.with_(coefficients=target),),
                rationale=f"raise coefficients to {target}",
            )
        )

    elif k in (AnomalyKind.SHADOWING, AnomalyKind.EXCEPTION):
        i1, i2 = pis
        out.append(_delete(anomaly, i2.id, f"{i2.id} never applies as intended"))
        out.append(_lub(anomaly, scenario, i1, i2, i1.priority))

    elif k is AnomalyKind.REDUNDANCY:
        out.append(_delete(anomaly, subj[1], f"{subj[1]} is already covered by {subj[0]}"))

    elif k in (AnomalyKind.CORRELATION, AnomalyKind.AFFINITY):
        i1, i2 = pis
        out.append(_lub(anomaly, scenario, i1, i2, min(i1.priority, i2.priority)))
        out.append(Resolution(Action.MANUAL_REVIEW, subj, anomaly, rationale="decide which PI should win"))

    elif k is AnomalyKind.INCLUSION:
        out.append(_delete(anomaly, subj[1], f"{subj[0]} already includes it; keep only for defence in depth"))

    elif k is AnomalyKind.SUPERFLUOUS:
        out.append(_delete(anomaly, subj[0], "inner channels are at least as strong; keep only for defence in depth"))

    elif k is AnomalyKind.CONTRADICTION:
        if len(pis) == 2:
            null = [p for p in pis if p.technology == NULL]
            drop = null[0].id if null else subj[1]
            out.append(
                Resolution(
                    Action.MANUAL_REVIEW, subj, anomaly, removes=(drop,),
                    rationale=f"protect or not: dropping {drop} keeps the protected channel; confirm intent",
                )
            )
        else:
            out.append(
                Resolution(
                    Action.MANUAL_REVIEW, subj, anomaly, removes=subj,
                    rationale=f"{subj[0]} hides traffic that must stay inspectable; confirm intent",
                )
            )

    elif k is AnomalyKind.SKEWED_CHANNEL:
        out.append(_split_tunnels(anomaly, scenario, *pis))

    elif k is AnomalyKind.FILTERED_CHANNEL:
        pi = pis[0]
        out.append(_delete(anomaly, pi.id, "its traffic never gets through"))
        removals = []
        for node in anomaly.nodes:
            for idx, rule in enumerate(scenario.profile(node).firewall_rules):
                if rule.action.value == "DENY" and rule.selector.overlaps(pi.selector):
                    removals.append((node, idx))
        out.append(
            Resolution(
                Action.EDIT_FILTER_RULE, (pi.id,), anomaly, firewall_removals=tuple(removals),
                rationale="drop the DENY rules that discard this traffic",
            )
        )

    elif k is AnomalyKind.L2:
        pi = pis[0]
        out.append(_change_technology(anomaly, scenario, pi, min_layer=2))
        out.append(Resolution(Action.MANUAL_REVIEW, (pi.id,), anomaly, rationale="pick a technology above layer 2"))

    elif k is AnomalyKind.ASYMMETRIC_CHANNEL:
        pi = pis[0]
        out.append(
            Resolution(
                Action.MANUAL_REVIEW, (pi.id,), anomaly, replacement_pis=(_mirror(scenario, pi),),
                rationale="add a reverse PI with the same protection if symmetry is wanted",
            )
        )

    elif k is AnomalyKind.CYCLIC_PATH:
        cyc = anomaly.nodes
        ctx_edges = {}
        for pid in subj:
            chain = scenario.chain(scenario.pi(pid))
            for a, b in zip(chain, chain[1:]):
                ctx_edges.setdefault((a, b), set()).add(pid)
        edges = cycle_edges(cyc)
        best = min(edges, key=lambda e: (len(ctx_edges.get(e, ())), edges.index(e)))
        victims = tuple(sorted(ctx_edges.get(best, ())))
        out.append(
            Resolution(
                Action.REMOVE_CYCLE_EDGES, victims, anomaly, removes=victims,
                rationale=f"break the cycle at {best[0]} -> {best[1]}",
            )
        )

    elif k is AnomalyKind.MONITORABILITY:
        e2e = _end_to_end(scenario, anomaly)
        hops = tuple(sorted({p for path in anomaly.paths for p in path}))
        out.append(
            Resolution(
                Action.MANUAL_REVIEW, hops, anomaly, removes=hops, replacement_pis=(e2e,),
                rationale=f"use one end-to-end channel {e2e.source} -> {e2e.destination}",
            )
        )

    elif k is AnomalyKind.ALTERNATIVE_PATH:
        p1, p2 = anomaly.paths
        if prefer == "coefficients":
            key = lambda p: (_path_score(scenario, p)[1], len(p), p)  # noqa: E731
        else:
            key = lambda p: _path_score(scenario, p)  # noqa: E731
        keep, drop = sorted((p1, p2), key=key)
        victims = tuple(sorted(set(drop) - set(keep)))
        out.append(
            Resolution(
                Action.SELECT_PREFERRED_PATH, victims, anomaly, removes=victims,
                rationale=f"keep {'/'.join(keep)}, drop {'/'.join(drop)}",
            )
        )

    return [r for r in out if r is not None]


# ---------------------------------------------------------------------------
# application and verification


def apply_resolution(resolution: Resolution, scenario: Scenario) -> Scenario:
    for pid in resolution.removes:
        if not scenario.has_pi(pid):
            raise ResolutionError(f"cannot remove missing PI {pid!r}")
    gone = set(resolution.removes)
    pis = [p for p in scenario.pis if p.id not in gone] + list(resolution.replacement_pis)
    out = scenario.with_pis(pis)
    if resolution.firewall_removals:
        profiles = dict(out.profiles)
        by_node: dict[str, set[int]] = {}
        for node, idx in resolution.firewall_removals:
            by_node.setdefault(node, set()).add(idx)
        for node, idxs in by_node.items():
            prof = scenario.profile(node)
            rules = tuple(r for i, r in enumerate(prof.firewall_rules) if i not in idxs)
            profiles[node] = replace(prof, firewall_rules=rules)
        out.profiles = profiles
    return out


def same_instance(a: Anomaly, b: Anomaly) -> bool:
    if a.kind is not b.kind:
        return False
    if a.kind is AnomalyKind.CYCLIC_PATH:
        return set(a.nodes) == set(b.nodes)
    if a.kind is AnomalyKind.MONITORABILITY:
        return a.nodes == b.nodes
    if a.kind is AnomalyKind.ALTERNATIVE_PATH:
        return a.nodes == b.nodes and set(a.paths) == set(b.paths)
    return set(a.subjects) == set(b.subjects)


@dataclass
class VerificationReport:
    resolved: bool
    remaining: list[Anomaly] = field(default_factory=list)
    new: list[Anomaly] = field(default_factory=list)
    result: Optional[AnalysisResult] = None


def verify_resolution(resolution: Resolution, scenario: Scenario, baseline: Optional[AnalysisResult] = None) -> VerificationReport:
    """Apply on a copy, re-analyse, and report what disappeared or appeared."""
    before = baseline or run_analysis(scenario)
    after = run_analysis(apply_resolution(resolution, scenario))
    remaining = [a for a in after.anomalies if same_instance(a, resolution.anomaly)]
    new = [a for a in after.anomalies if not any(same_instance(a, b) for b in before.anomalies)]
    return VerificationReport(not remaining, remaining, new, after)


__all__ = [
    "Action",
    "Resolution",
    "ResolutionError",
    "VerificationReport",
    "apply_resolution",
    "same_instance",
    "suggest",
    "verify_resolution",
]
