"""Entity forests, node capabilities, firewalls and the routed topology."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

from .policy import NULL, Coefficients, PolicyError, TechnologyRegistry, DEFAULT_REGISTRY
from .traffic import FieldKind, FieldSet, Relation, Selector, SOURCE_FIELDS


class NetworkError(ValueError):
    """Invalid or unresolvable network data."""


class UnroutableError(NetworkError):
    """No routing entry between two nodes."""


class UnsupportedTechnologyError(NetworkError):
    """A node does not support the requested technology."""


# ---------------------------------------------------------------------------
# entities


@dataclass(frozen=True)
class NetworkEntity:
    """A connection end-point inside a node; the root (no label) is the node."""

    node_id: str
    label: Optional[str] = None
    layer: Optional[int] = None
    parent: Optional[str] = None  # reference of the parent entity
    ip: Optional[FieldSet] = None
    port: Optional[int] = None
    alias: Optional[str] = None

    @property
    def ref(self) -> str:
        return self.node_id if self.label is None else f"{self.node_id}.{self.label}"

    @property
    def is_root(self) -> bool:
        return self.label is None

    def __str__(self) -> str:
        return self.ref


class EntityForest:
    """One entity tree per node with reference lookup and ancestry queries."""

    def __init__(self, entities: Iterable[NetworkEntity]):
        self._by_ref: dict[str, NetworkEntity] = {}
        self._alias: dict[str, str] = {}
        self._children: dict[str, list[str]] = {}
        for ent in entities:
            if ent.ref in self._by_ref:
                raise NetworkError(f"duplicate entity {ent.ref}")
            self._by_ref[ent.ref] = ent
            self._children.setdefault(ent.ref, [])
        for ent in self._by_ref.values():
            self._validate(ent)
            if ent.parent is not None:
                self._children[ent.parent].append(ent.ref)
            if ent.alias:
                if ent.alias in self._alias or ent.alias in self._by_ref:
                    raise NetworkError(f"alias {ent.alias!r} is not unique")
                self._alias[ent.alias] = ent.ref
        for kids in self._children.values():
            kids.sort()
        self._ancestors: dict[str, tuple[str, ...]] = {}
        for ref in self._by_ref:
            chain, cur = [], self._by_ref[ref].parent
            while cur is not None:
                chain.append(cur)
                cur = self._by_ref[cur].parent
            self._ancestors[ref] = tuple(chain)
        self._scope_cache: dict[str, tuple[Optional[FieldSet], FieldSet]] = {}

    def _validate(self, ent: NetworkEntity) -> None:
        if ent.is_root:
            if ent.parent is not None or ent.layer is not None:
                raise NetworkError(f"root entity {ent.ref} cannot have a parent or a layer")
            return
        if ent.layer not in (2, 3, 5, 7):
            raise NetworkError(f"entity {ent.ref}: layer must be one of 2, 3, 5, 7")
        if ent.parent is None:
            raise NetworkError(f"entity {ent.ref} has no parent")
        parent = self._by_ref.get(ent.parent)
        if parent is None:
            raise NetworkError(f"entity {ent.ref}: unknown parent {ent.parent}")
        if parent.node_id != ent.node_id:
            raise NetworkError(f"entity {ent.ref}: parent {ent.parent} lives on another node")
        if parent.layer is not None and parent.layer >= ent.layer:
            raise NetworkError(f"entity {ent.ref}: parent layer must be strictly lower")

    # lookup ------------------------------------------------------------

    def __contains__(self, ref: str) -> bool:
        return ref in self._by_ref or ref in self._alias

    def __iter__(self):
        return iter(self._by_ref.values())

    def __len__(self) -> int:
        return len(self._by_ref)

    def canonical(self, ref: str) -> str:
        if ref in self._by_ref:
            return ref
        if ref in self._alias:
            return self._alias[ref]
        raise NetworkError(f"unknown entity reference {ref!r}")

    def get(self, ref: str) -> NetworkEntity:
        return self._by_ref[self.canonical(ref)]

    def node_of(self, ref: str) -> str:
        return self.get(ref).node_id

    def nodes(self) -> list[str]:
        return sorted(e.node_id for e in self._by_ref.values() if e.is_root)

    def children(self, ref: str) -> list[str]:
        return list(self._children[self.canonical(ref)])

    def ancestors(self, ref: str) -> tuple[str, ...]:
        """Proper ancestors, nearest first."""
        return self._ancestors[self.canonical(ref)]

    def descendants(self, ref: str) -> list[str]:
        out, stack = [], list(self._children[self.canonical(ref)])
        while stack:
            cur = stack.pop()
            out.append(cur)
            stack.extend(self._children[cur])
        return sorted(out)

    # relations ---------------------------------------------------------

    def relation(self, r1: str, r2: str) -> Relation:
        a, b = self.canonical(r1), self.canonical(r2)
        if a == b:
            return Relation.EQUIVALENT
        if self._by_ref[a].node_id != self._by_ref[b].node_id:
            return Relation.DISJOINT
        if a in self._ancestors[b]:
            return Relation.DOMINATES
        if b in self._ancestors[a]:
            return Relation.DOMINATED_BY
        return Relation.KIN

    def common_ancestor(self, r1: str, r2: str) -> Optional[str]:
        """Lowest entity dominating-or-equal to both, ``None`` across trees."""
        a, b = self.canonical(r1), self.canonical(r2)
        if self._by_ref[a].node_id != self._by_ref[b].node_id:
            return None
        line_a = (a,) + self._ancestors[a]
        line_b = set((b,) + self._ancestors[b])
        for ref in line_a:
            if ref in line_b:
                return ref
        raise AssertionError("entities in one tree always share the root")

    # addressing --------------------------------------------------------

    def address_scope(self, ref: str) -> tuple[Optional[FieldSet], FieldSet]:
        """(IP set, port set) covered by an entity.

        An entity uses its own IP or the nearest ancestor's; entities above
        layer 3 (roots, layer-2) cover the IPs of their whole subtree.  Ports
        come from the entity or its nearest ported ancestor, else any port.
        """
        key = self.canonical(ref)
        if key in self._scope_cache:
            return self._scope_cache[key]
        ent = self._by_ref[key]
        line = [ent] + [self._by_ref[r] for r in self._ancestors[key]]
        ip = next((e.ip for e in line if e.ip is not None), None)
        if ip is None:
            ip = FieldSet.empty(FieldKind.IP_SET)
            for d in self.descendants(key):
                if self._by_ref[d].ip is not None:
                    ip = ip.union(self._by_ref[d].ip)
            if ip.is_empty:
                ip = None
        port = next((e.port for e in line if e.port is not None), None)
        ports = FieldSet.full(FieldKind.PORT_SET) if port is None else FieldSet.of(FieldKind.PORT_SET, port)
        self._scope_cache[key] = (ip, ports)
        return ip, ports

    def reindex(self) -> None:
        """Drop and rebuild the per-entity address scopes."""
        self._scope_cache.clear()
        for ref in self._by_ref:
            self.address_scope(ref)

    def technology_compatible(self, ref: str, layer: Optional[int]) -> bool:
        """A layer-L technology attaches at the root or at entities of layer <= L."""
        ent = self.get(ref)
        return layer is None or ent.is_root or ent.layer <= layer


def entity_relation(forest: EntityForest, e1: str, e2: str) -> Relation:
    return forest.relation(e1, e2)


def source_in_selector_scope(forest: EntityForest, ref: str, selector: Selector) -> bool:
    """Whether the entity's address tuple lies in the selector's source fields."""
    ip, ports = forest.address_scope(ref)
    if ip is None:
        raise NetworkError(f"entity {ref} has no resolvable address")
    restricted = selector.restricted(SOURCE_FIELDS)
    return ip.issubset(restricted.ip_src) and ports.issubset(restricted.p_src)


# ---------------------------------------------------------------------------
# capabilities and firewalls


class Action(str, Enum):
    ALLOW = "ALLOW"
    DENY = "DENY"


@dataclass(frozen=True)
class FirewallRule:
    selector: Selector
    action: Action = Action.DENY

    def __post_init__(self):
        object.__setattr__(self, "action", Action(self.action))


def _box_difference(a: Selector, b: Selector) -> list[Selector]:
    """Split ``a \\ b`` into disjoint product boxes."""
    inter = a.intersection(b)
    if inter.is_empty:
        return [a]
    fa, fb, fi = list(a.fields()), list(b.fields()), list(inter.fields())
    names = a.field_names()
    out = []
    for k in range(len(fa)):
        rest = fa[k].difference(fb[k])
        if rest.is_empty:
            continue
        parts = fi[:k] + [rest] + fa[k + 1:]
        out.append(_from_fields(names, parts, a))
    return out


def _from_fields(names, parts, template: Selector) -> Selector:
    extras = tuple((n, fs) for (n, _), fs in zip(template.extras, parts[5:]))
    return Selector(*parts[:5], extras=extras)


def firewall_drops_all(rules: Sequence[FirewallRule], selector: Selector) -> bool:
    """First-match evaluation with default ALLOW: does every packet hit a DENY?"""
    remaining = [] if selector.is_empty else [selector]
    if not remaining:
        return False
    for rule in rules:
        if rule.action is Action.ALLOW:
            if any(box.overlaps(rule.selector) for box in remaining):
                return False
        else:
            remaining = [part for box in remaining for part in _box_difference(box, rule.selector)]
            if not remaining:
                return True
    return False


@dataclass(frozen=True)
class CapabilityProfile:
    node_id: str
    supported_technologies: frozenset = frozenset()
    layer2_technologies: frozenset = frozenset()
    max_coefficients: Mapping[str, Coefficients] = field(default_factory=dict)
    firewall_rules: tuple[FirewallRule, ...] = ()
    preferred_technologies: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "supported_technologies", frozenset(self.supported_technologies) | {NULL})
        object.__setattr__(self, "layer2_technologies", frozenset(self.layer2_technologies))
        object.__setattr__(self, "firewall_rules", tuple(self.firewall_rules))
        object.__setattr__(self, "preferred_technologies", tuple(self.preferred_technologies))
        missing = set(self.max_coefficients) - self.supported_technologies
        if missing:
            raise NetworkError(
                f"node {self.node_id}: max coefficients for unsupported technologies {sorted(missing)}"
            )
        extra_l2 = self.layer2_technologies - self.supported_technologies
        if extra_l2:
            raise NetworkError(
                f"node {self.node_id}: layer-2 technologies {sorted(extra_l2)} are not supported"
            )

    def check_layers(self, registry: TechnologyRegistry) -> None:
        for name in self.supported_technologies:
            registry.get(name)
        for name in self.layer2_technologies:
            if registry.layer(name) != 2:
                raise NetworkError(f"node {self.node_id}: {name} is not a layer-2 technology")

    def supports(self, technology: str) -> bool:
        return technology in self.supported_technologies

    def is_filtered(self, selector: Selector) -> bool:
        return firewall_drops_all(self.firewall_rules, selector)


def max_coefficients(src: CapabilityProfile, dst: CapabilityProfile, technology: str) -> Optional[Coefficients]:
    """Component-wise minimum of both ends' bounds; ``None`` means unbounded."""
    for prof in (src, dst):
        if not prof.supports(technology):
            raise UnsupportedTechnologyError(f"{technology} is not supported by {prof.node_id}")
    bounds = [p.max_coefficients[technology] for p in (src, dst) if technology in p.max_coefficients]
    if not bounds:
        return None
    out = bounds[0]
    for b in bounds[1:]:
        out = out.meet(b)
    return out


# ---------------------------------------------------------------------------
# topology


@dataclass(frozen=True)
class Edge:
    a: str
    b: str
    zone: Optional[str] = None

    @property
    def key(self) -> frozenset:
        return frozenset((self.a, self.b))


class TopologyGraph:
    """Undirected links plus a static routing table of node walks."""

    def __init__(self, nodes: Iterable[str], edges: Iterable[Edge] = (), routing: Mapping = ()):
        self.nodes = tuple(sorted(set(nodes)))
        node_set = set(self.nodes)
        self._edges: dict[frozenset, Edge] = {}
        self._adj: dict[str, set[str]] = {n: set() for n in self.nodes}
        for e in edges:
            for n in (e.a, e.b):
                if n not in node_set:
                    raise NetworkError(f"edge {e.a}-{e.b}: unknown node {n}")
            if e.a == e.b:
                raise NetworkError(f"self-loop edge on {e.a}")
            self._edges[e.key] = e
            self._adj[e.a].add(e.b)
            self._adj[e.b].add(e.a)
        self._routes: dict[tuple[str, str], tuple[str, ...]] = {}
        items = routing.items() if isinstance(routing, Mapping) else routing
        for (src, dst), walk in items:
            self.add_route(src, dst, walk)

    def add_route(self, src: str, dst: str, walk: Sequence[str]) -> None:
        walk = tuple(walk)
        if not walk or walk[0] != src or walk[-1] != dst:
            raise NetworkError(f"route {src}->{dst} must start at {src} and end at {dst}")
        for n in walk:
            if n not in self._adj:
                raise NetworkError(f"route {src}->{dst}: unknown node {n}")
        for x, y in zip(walk, walk[1:]):
            if frozenset((x, y)) not in self._edges:
                raise NetworkError(f"route {src}->{dst}: no link between {x} and {y}")
        self._routes[(src, dst)] = walk

    @property
    def edges(self) -> list[Edge]:
        return sorted(self._edges.values(), key=lambda e: tuple(sorted((e.a, e.b))))

    @property
    def routes(self) -> dict[tuple[str, str], tuple[str, ...]]:
        return dict(self._routes)

    def neighbours(self, node: str) -> set[str]:
        return set(self._adj[node])

    def edge(self, a: str, b: str) -> Optional[Edge]:
        return self._edges.get(frozenset((a, b)))

    def route(self, src: str, dst: str) -> tuple[str, ...]:
        if src == dst:
            return (src,)
        if (src, dst) in self._routes:
            return self._routes[(src, dst)]
        if frozenset((src, dst)) in self._edges:
            return (src, dst)
        raise UnroutableError(f"no route from {src} to {dst}")

    def crossed_gateways(self, src: str, dst: str) -> tuple[str, ...]:
        return self.route(src, dst)[1:-1]

    def expand(self, chain: Sequence[str]) -> tuple[str, ...]:
        """Concatenate routes between consecutive chain nodes into one walk."""
        chain = list(chain)
        walk = [chain[0]]
        for x, y in zip(chain, chain[1:]):
            if x == y:
                continue
            walk.extend(self.route(x, y)[1:])
        return tuple(walk)

    def zones_on(self, walk: Sequence[str]) -> set[str]:
        zones = set()
        for x, y in zip(walk, walk[1:]):
            e = self._edges.get(frozenset((x, y)))
            if e is not None and e.zone:
                zones.add(e.zone)
        return zones


def crossed_gateways(src_node: str, dst_node: str, topology: TopologyGraph) -> tuple[str, ...]:
    return topology.crossed_gateways(src_node, dst_node)


def deployment_node(pi) -> str:
    if pi.deployed_at is None:
        raise PolicyError(f"PI {pi.id} has no deployment node")
    return pi.deployed_at


__all__ = [
    "Action",
    "CapabilityProfile",
    "DEFAULT_REGISTRY",
    "Edge",
    "EntityForest",
    "FirewallRule",
    "NetworkEntity",
    "NetworkError",
    "TopologyGraph",
    "UnroutableError",
    "UnsupportedTechnologyError",
    "crossed_gateways",
    "deployment_node",
    "entity_relation",
    "firewall_drops_all",
    "max_coefficients",
    "source_in_selector_scope",
]
