"""The analyzable world: entities, topology, capabilities, PIs and thresholds."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Sequence

from .network import (
    Action,
    CapabilityProfile,
    Edge,
    EntityForest,
    FirewallRule,
    NetworkEntity,
    NetworkError,
    TopologyGraph,
    UnroutableError,
)
from .policy import (
    NULL,
    Coefficients,
    PISet,
    PolicyError,
    PolicyImplementation,
    TechnologyRegistry,
    group_pi_sets,
)
from .traffic import FieldKind, FieldSet, Selector

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    """Scenario validation failure; ``where`` names the offending field."""

    def __init__(self, message: str, where: str = "", line: Optional[int] = None):
        self.where = where
        self.line = line
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if where:
            prefix += f"{where}: "
        super().__init__(prefix + message)


# ---------------------------------------------------------------------------
# thresholds

PREDICATES = (
    "crosses_zone",
    "crosses_node",
    "source_node",
    "destination_node",
    "technology",
    "pi",
)


@dataclass(frozen=True)
class ThresholdRule:
    """``min`` applies to PIs matching every predicate in ``when``."""

    when: tuple[tuple[str, tuple[str, ...]], ...]
    min: Coefficients

    @classmethod
    def from_spec(cls, spec: dict) -> "ThresholdRule":
        when = spec.get("when", {})
        unknown = set(when) - set(PREDICATES)
        if unknown:
            raise ScenarioError(f"unknown threshold predicate(s) {sorted(unknown)}")
        items = []
        for key in sorted(when):
            val = when[key]
            items.append((key, tuple([val] if isinstance(val, str) else val)))
        return cls(tuple(items), Coefficients.of(spec["min"]))

    def to_spec(self) -> dict:
        when = {k: (v[0] if len(v) == 1 else list(v)) for k, v in self.when}
        return {"when": when, "min": self.min.to_spec()}


@dataclass(frozen=True)
class PolicyThresholds:
    min_coefficients: tuple[ThresholdRule, ...] = ()
    inspection_zones: tuple[Selector, ...] = ()

    def to_spec(self) -> dict:
        return {
            "min_coefficients": [r.to_spec() for r in self.min_coefficients],
            "inspection_zones": [s.to_spec() for s in self.inspection_zones],
        }


# ---------------------------------------------------------------------------
# scenario


@dataclass
class Scenario:
    forest: EntityForest
    topology: TopologyGraph
    profiles: dict[str, CapabilityProfile]
    pis: tuple[PolicyImplementation, ...] = ()
    thresholds: PolicyThresholds = field(default_factory=PolicyThresholds)
    registry: TechnologyRegistry = field(default_factory=TechnologyRegistry)
    manifest: list = field(default_factory=list)
    coefficient_map: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        self.pis = tuple(self.pis)
        self._by_id = {}
        for pi in self.pis:
            if pi.id in self._by_id:
                raise ScenarioError(f"duplicate PI id {pi.id!r}")
            self._by_id[pi.id] = pi

    # queries -----------------------------------------------------------

    def pi(self, pi_id: str) -> PolicyImplementation:
        try:
            return self._by_id[pi_id]
        except KeyError:
            raise ScenarioError(f"unknown PI {pi_id!r}") from None

    def has_pi(self, pi_id: str) -> bool:
        return pi_id in self._by_id

    def pi_sets(self) -> list[PISet]:
        return group_pi_sets(self.pis)

    def profile(self, node: str) -> CapabilityProfile:
        if node not in self.profiles:
            if node in self.topology.nodes:
                return CapabilityProfile(node)
            raise NetworkError(f"unknown node {node!r}")
        return self.profiles[node]

    def node_of(self, ref: str) -> str:
        return self.forest.node_of(ref)

    def chain(self, pi: PolicyImplementation) -> tuple[str, ...]:
        """G*: source node, crossed gateways, destination node."""
        return (self.node_of(pi.source),) + tuple(pi.gateways or ()) + (self.node_of(pi.destination),)

    def walk(self, pi: PolicyImplementation) -> tuple[str, ...]:
        return self.topology.expand(self.chain(pi))

    def preferred_technologies(self, node: str) -> tuple[str, ...]:
        prof = self.profiles.get(node)
        return prof.preferred_technologies if prof else ()

    # copies ------------------------------------------------------------

    def with_pis(self, pis: Iterable[PolicyImplementation]) -> "Scenario":
        return Scenario(
            forest=self.forest,
            topology=self.topology,
            profiles=dict(self.profiles),
            pis=tuple(pis),
            thresholds=self.thresholds,
            registry=self.registry,
            manifest=copy.deepcopy(self.manifest),
            coefficient_map=dict(self.coefficient_map),
            warnings=list(self.warnings),
        )

    def copy(self) -> "Scenario":
        return self.with_pis(self.pis)

    # serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        nodes = []
        for node in self.forest.nodes():
            ents = []
            for ref in self.forest.descendants(node):
                e = self.forest.get(ref)
                item: dict[str, Any] = {"label": e.label, "layer": e.layer}
                parent = self.forest.get(e.parent)
                item["parent"] = parent.label
                if e.ip is not None:
                    item["ip"] = e.ip.to_spec()
                if e.port is not None:
                    item["port"] = e.port
                if e.alias:
                    item["alias"] = e.alias
                ents.append(item)
            root = self.forest.get(node)
            entry: dict[str, Any] = {"id": node, "entities": ents}
            if root.ip is not None:
                entry["ip"] = root.ip.to_spec()
            if root.alias:
                entry["alias"] = root.alias
            nodes.append(entry)
        edges = []
        for e in self.topology.edges:
            item = {"a": e.a, "b": e.b}
            if e.zone:
                item["zone"] = e.zone
            edges.append(item)
        routing = [
            {"src": s, "dst": d, "path": list(w)} for (s, d), w in sorted(self.topology.routes.items())
        ]
        caps = {}
        for node in sorted(self.profiles):
            p = self.profiles[node]
            caps[node] = {
                "technologies": sorted(p.supported_technologies - {NULL}),
                "layer2": sorted(p.layer2_technologies),
                "max_coefficients": {t: c.to_spec() for t, c in sorted(p.max_coefficients.items())},
                "preferred": list(p.preferred_technologies),
                "firewall": [
                    {"action": r.action.value, "selector": r.selector.to_spec()} for r in p.firewall_rules
                ],
            }
        pi_sets = []
        for ps in self.pi_sets():
            pi_sets.append(
                {
                    "node": ps.node_id,
                    "technology": ps.technology,
                    "pis": [pi.to_spec(include_set_fields=False) for pi in ps.pis],
                }
            )
        out = {
            "schema_version": SCHEMA_VERSION,
            "technologies": self.registry.custom(),
            "nodes": nodes,
            "topology": {"edges": edges},
            "routing": routing,
            "capabilities": caps,
            "pi_sets": pi_sets,
            "thresholds": self.thresholds.to_spec(),
        }
        if self.manifest:
            out["manifest"] = self.manifest
        if self.coefficient_map:
            out["coefficient_map"] = self.coefficient_map
        return out

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=False)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scenario):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None  # mutable container


# ---------------------------------------------------------------------------
# parsing


def _require(obj, key, where, kind=None):
    if not isinstance(obj, dict) or key not in obj:
        raise ScenarioError(f"missing field {key!r}", where)
    val = obj[key]
    if kind is not None and not isinstance(val, kind):
        raise ScenarioError(f"field {key!r} has the wrong type", where)
    return val


def _wrap(where: str):
    """Re-raise library errors as ScenarioError tagged with a field path."""

    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is None or isinstance(exc, ScenarioError):
                return False
            if isinstance(exc, (ValueError, KeyError, TypeError)):
                raise ScenarioError(str(exc).strip("'\""), where) from exc
            return False

    return _Ctx()


def _parse_entities(nodes_spec) -> list[NetworkEntity]:
    entities = []
    seen_nodes = set()
    for n_idx, node in enumerate(nodes_spec):
        where = f"nodes[{n_idx}]"
        node_id = str(_require(node, "id", where))
        if node_id in seen_nodes:
            raise ScenarioError(f"duplicate node {node_id!r}", where)
        if "." in node_id:
            raise ScenarioError(f"node id {node_id!r} must not contain '.'", where)
        seen_nodes.add(node_id)
        with _wrap(where):
            root_ip = FieldSet.parse(FieldKind.IP_SET, node["ip"]) if node.get("ip") is not None else None
        entities.append(NetworkEntity(node_id, ip=root_ip, alias=node.get("alias")))
        for e_idx, ent in enumerate(node.get("entities", [])):
            ewhere = f"{where}.entities[{e_idx}]"
            label = str(_require(ent, "label", ewhere))
            with _wrap(ewhere):
                parent = ent.get("parent")
                ip = ent.get("ip")
                entities.append(
                    NetworkEntity(
                        node_id=node_id,
                        label=label,
                        layer=int(_require(ent, "layer", ewhere)),
                        parent=node_id if parent is None else f"{node_id}.{parent}",
                        ip=None if ip is None else FieldSet.parse(FieldKind.IP_SET, ip),
                        port=None if ent.get("port") is None else int(ent["port"]),
                        alias=ent.get("alias"),
                    )
                )
    return entities


def _parse_profiles(caps_spec, nodes, registry) -> dict[str, CapabilityProfile]:
    profiles = {}
    for node, spec in sorted(caps_spec.items()):
        where = f"capabilities.{node}"
        if node not in nodes:
            raise ScenarioError(f"unknown node {node!r}", where)
        with _wrap(where):
            rules = []
            for r_idx, rule in enumerate(spec.get("firewall", [])):
                with _wrap(f"{where}.firewall[{r_idx}]"):
                    rules.append(FirewallRule(Selector.from_spec(rule.get("selector", "*")), Action(rule["action"])))
            prof = CapabilityProfile(
                node_id=node,
                supported_technologies=frozenset(spec.get("technologies", [])),
                layer2_technologies=frozenset(spec.get("layer2", [])),
                max_coefficients={
                    t: Coefficients.of(c) for t, c in spec.get("max_coefficients", {}).items()
                },
                firewall_rules=tuple(rules),
                preferred_technologies=tuple(spec.get("preferred", [])),
            )
            prof.check_layers(registry)
        profiles[node] = prof
    return profiles


def _parse_thresholds(spec) -> PolicyThresholds:
    rules = []
    for idx, rule in enumerate(spec.get("min_coefficients", [])):
        with _wrap(f"thresholds.min_coefficients[{idx}]"):
            rules.append(ThresholdRule.from_spec(rule))
    zones = []
    for idx, sel in enumerate(spec.get("inspection_zones", [])):
        with _wrap(f"thresholds.inspection_zones[{idx}]"):
            zones.append(Selector.from_spec(sel))
    return PolicyThresholds(tuple(rules), tuple(zones))


def build_scenario(data: dict) -> Scenario:
    """Validate a decoded scenario document."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ScenarioError("scenario document must be a JSON object")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported schema_version {version!r}", "schema_version")
    with _wrap("technologies"):
        registry = TechnologyRegistry(data.get("technologies") or {})
    with _wrap("nodes"):
        forest = EntityForest(_parse_entities(data.get("nodes", [])))
    nodes = forest.nodes()
    topo_spec = data.get("topology", {}) or {}
    edges = []
    for idx, e in enumerate(topo_spec.get("edges", [])):
        edges.append(Edge(str(_require(e, "a", f"topology.edges[{idx}]")), str(e.get("b")), e.get("zone")))
    with _wrap("topology"):
        topology = TopologyGraph(nodes, edges)
    for idx, r in enumerate(data.get("routing", [])):
        with _wrap(f"routing[{idx}]"):
            topology.add_route(str(r["src"]), str(r["dst"]), [str(n) for n in r["path"]])
    profiles = _parse_profiles(data.get("capabilities", {}) or {}, set(nodes), registry)
    thresholds = _parse_thresholds(data.get("thresholds", {}) or {})

    pis: list[PolicyImplementation] = []
    warnings: list[str] = []
    seen_sets = set()
    for s_idx, ps in enumerate(data.get("pi_sets", [])):
        where = f"pi_sets[{s_idx}]"
        node = str(_require(ps, "node", where))
        tech = str(_require(ps, "technology", where))
        if node not in nodes:
            raise ScenarioError(f"unknown deployment node {node!r}", where)
        if tech not in registry:
            raise ScenarioError(f"unregistered technology {tech!r}", where)
        if (node, tech) in seen_sets:
            raise ScenarioError(f"duplicate PI set ({node}, {tech})", where)
        seen_sets.add((node, tech))
        members = []
        for p_idx, spec in enumerate(ps.get("pis", [])):
            pwhere = f"{where}.pis[{p_idx}]"
            with _wrap(pwhere):
                pi = PolicyImplementation.from_spec(
                    spec, technology=tech, deployed_at=node, priority=spec.get("priority", p_idx)
                )
                pi = pi.with_(technology=tech, deployed_at=node)
                pi = _resolve_pi(pi, forest, topology, registry, warnings, pwhere)
            members.append(pi)
        with _wrap(where):
            PISet(node, tech, tuple(members))
        pis.extend(members)

    schemas = {pi.selector.field_names() for pi in pis}
    if len(schemas) > 1:
        raise ScenarioError("all PI selectors must share one field schema", "pi_sets")
    try:
        return Scenario(
            forest=forest,
            topology=topology,
            profiles=profiles,
            pis=tuple(pis),
            thresholds=thresholds,
            registry=registry,
            manifest=list(data.get("manifest", [])),
            coefficient_map=dict(data.get("coefficient_map", {})),
            warnings=warnings,
        )
    except ScenarioError as exc:
        raise ScenarioError(str(exc), "pi_sets") from None


def _resolve_pi(pi, forest, topology, registry, warnings, where) -> PolicyImplementation:
    src = forest.canonical(pi.source)
    dst = forest.canonical(pi.destination)
    layer = registry.layer(pi.technology)
    for ref in (src, dst):
        if not forest.technology_compatible(ref, layer):
            raise ScenarioError(
                f"{pi.technology} (layer {layer}) cannot attach at {ref} (layer {forest.get(ref).layer})",
                where,
            )
    s_node, d_node = forest.node_of(src), forest.node_of(dst)
    try:
        routed = topology.crossed_gateways(s_node, d_node)
    except UnroutableError:
        routed = None
    if pi.gateways is None:
        if routed is None:
            raise ScenarioError(f"no route from {s_node} to {d_node} and no gateways given", where)
        gateways = routed
    else:
        gateways = pi.gateways
        for g in gateways:
            if g not in topology.nodes:
                raise ScenarioError(f"unknown gateway {g!r}", where)
            if g in (s_node, d_node):
                raise ScenarioError(f"gateway list must exclude the end-point node {g!r}", where)
        if routed is not None and tuple(routed) != tuple(gateways):
            warnings.append(f"{where}: PI {pi.id} gateways {list(gateways)} differ from routing {list(routed)}")
        try:
            topology.expand((s_node,) + tuple(gateways) + (d_node,))
        except UnroutableError as exc:
            raise ScenarioError(str(exc), where) from None
    return pi.with_(source=src, destination=dst, gateways=tuple(gateways))


def parse_scenario(text: str) -> Scenario:
    """Parse a JSON scenario document; empty text is an empty scenario."""
    if not text.strip():
        return build_scenario({})
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"syntax error: {exc.msg}", line=exc.lineno) from None
    return build_scenario(data)


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def serialize_scenario(scenario: Scenario) -> str:
    return scenario.to_json()


# ---------------------------------------------------------------------------
# threshold evaluation


def minimum_coefficients(scenario: Scenario, pi: PolicyImplementation) -> Coefficients:
    """C_min(pi): first matching threshold rule, default all-zero."""
    for rule in scenario.thresholds.min_coefficients:
        if _rule_matches(scenario, rule, pi):
            return rule.min
    return Coefficients()


def _rule_matches(scenario: Scenario, rule: ThresholdRule, pi: PolicyImplementation) -> bool:
    walk = None
    for key, values in rule.when:
        if key in ("crosses_zone", "crosses_node") and walk is None:
            walk = scenario.walk(pi)
        if key == "crosses_zone":
            if not set(values) & scenario.topology.zones_on(walk):
                return False
        elif key == "crosses_node":
            if not set(values) & set(walk):
                return False
        elif key == "source_node":
            if scenario.node_of(pi.source) not in values:
                return False
        elif key == "destination_node":
            if scenario.node_of(pi.destination) not in values:
                return False
        elif key == "technology":
            if pi.technology not in values:
                return False
        elif key == "pi":
            if pi.id not in values:
                return False
    return True


def empty_scenario() -> Scenario:
    return build_scenario({})


__all__ = [
    "PolicyThresholds",
    "SCHEMA_VERSION",
    "Scenario",
    "ScenarioError",
    "ThresholdRule",
    "build_scenario",
    "empty_scenario",
    "load_scenario",
    "minimum_coefficients",
    "parse_scenario",
    "serialize_scenario",
]
