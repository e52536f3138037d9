"""Technologies, security coefficients and policy implementations."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import TYPE_CHECKING, Iterable, Optional, Sequence

from .traffic import Relation, Selector

if TYPE_CHECKING:
    from .network import EntityForest


class PolicyError(ValueError):
    """Invalid policy data."""


# ---------------------------------------------------------------------------
# technologies

NULL = "NULL"

DEFAULT_TECHNOLOGIES = {
    "WPA2": 2,
    "MACsec": 2,
    "IPsec": 3,
    "TLS": 5,
    "SSH": 5,
    "WS-Security": 7,
    NULL: None,
}


@dataclass(frozen=True)
class Technology:
    name: str
    layer: Optional[int]

    @property
    def is_null(self) -> bool:
        return self.layer is None


class TechnologyRegistry:
    """Name -> OSI layer table. ``NULL`` is the only layer-less entry."""

    def __init__(self, extra: Optional[dict] = None):
        self._layers: dict[str, Optional[int]] = dict(DEFAULT_TECHNOLOGIES)
        for name, layer in (extra or {}).items():
            self.register(name, layer)

    def register(self, name: str, layer: Optional[int]) -> None:
        if name == NULL:
            if layer is not None:
                raise PolicyError("NULL technology has no OSI layer")
            return
        if layer not in (2, 3, 5, 7):
            raise PolicyError(f"technology {name!r}: layer must be one of 2, 3, 5, 7")
        if name in self._layers and self._layers[name] != layer:
            raise PolicyError(f"technology {name!r} already registered at layer {self._layers[name]}")
        self._layers[name] = layer

    def __contains__(self, name: str) -> bool:
        return name in self._layers

    def __iter__(self):
        return iter(sorted(self._layers))

    def get(self, name: str) -> Technology:
        if name not in self._layers:
            raise PolicyError(f"unregistered technology: {name!r}")
        return Technology(name, self._layers[name])

    def layer(self, name: str) -> Optional[int]:
        return self.get(name).layer

    def custom(self) -> dict:
        return {n: l for n, l in self._layers.items() if DEFAULT_TECHNOLOGIES.get(n, -1) != l}


DEFAULT_REGISTRY = TechnologyRegistry()


def technology_relation(t1: str, t2: str, registry: TechnologyRegistry = DEFAULT_REGISTRY) -> Relation:
    a, b = registry.get(t1), registry.get(t2)
    if a.name == b.name:
        return Relation.EQUIVALENT
    if a.is_null != b.is_null:
        return Relation.DISJOINT
    if a.layer < b.layer:
        return Relation.DOMINATES
    if a.layer > b.layer:
        return Relation.DOMINATED_BY
    return Relation.KIN


# ---------------------------------------------------------------------------
# coefficients


def _as_fraction(value) -> Fraction:
    if isinstance(value, bool):
        raise PolicyError(f"invalid coefficient {value!r}")
    try:
        frac = Fraction(str(value)) if isinstance(value, float) else Fraction(value)
    except (TypeError, ValueError) as exc:
        raise PolicyError(f"invalid coefficient {value!r}") from exc
    if frac < 0:
        raise PolicyError(f"coefficients must be non-negative, got {value!r}")
    return frac


@dataclass(frozen=True, order=False)
class Coefficients:
    """(header integrity, payload integrity, confidentiality), exact rationals."""

    header_integrity: Fraction = Fraction(0)
    payload_integrity: Fraction = Fraction(0)
    confidentiality: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("header_integrity", "payload_integrity", "confidentiality"):
            object.__setattr__(self, name, _as_fraction(getattr(self, name)))

    @classmethod
    def of(cls, values: Sequence) -> "Coefficients":
        if isinstance(values, Coefficients):
            return values
        if len(values) != 3:
            raise PolicyError(f"coefficients need exactly 3 components, got {list(values)!r}")
        return cls(*values)

    def as_tuple(self) -> tuple[Fraction, Fraction, Fraction]:
        return (self.header_integrity, self.payload_integrity, self.confidentiality)

    @property
    def is_zero(self) -> bool:
        return not any(self.as_tuple())

    def join(self, other: "Coefficients") -> "Coefficients":
        return Coefficients(*(max(a, b) for a, b in zip(self.as_tuple(), other.as_tuple())))

    def meet(self, other: "Coefficients") -> "Coefficients":
        return Coefficients(*(min(a, b) for a, b in zip(self.as_tuple(), other.as_tuple())))

    def to_spec(self) -> list:
        return [int(c) if c.denominator == 1 else str(c) for c in self.as_tuple()]

    def __str__(self) -> str:
        return "(" + ",".join(str(c) for c in self.to_spec()) + ")"


ZERO = Coefficients()


def coefficient_relation(c1: Coefficients, c2: Coefficients) -> Relation:
    a, b = c1.as_tuple(), c2.as_tuple()
    if a == b:
        return Relation.EQUIVALENT
    if all(x >= y for x, y in zip(a, b)):
        return Relation.DOMINATES
    if all(x <= y for x, y in zip(a, b)):
        return Relation.DOMINATED_BY
    return Relation.DISJOINT


# ---------------------------------------------------------------------------
# policy implementations


@dataclass(frozen=True)
class PolicyImplementation:
    """One directional channel ``(s, d, t, C, S, G)`` plus deployment data.

    ``source``/``destination`` are entity references resolved by an
    :class:`~policy_anomalies.network.EntityForest`.  ``gateways`` is
    ``None`` when the chain should be derived from the routing table.
    """

    id: str
    source: str
    destination: str
    technology: str
    coefficients: Coefficients = ZERO
    selector: Selector = field(default_factory=Selector)
    gateways: Optional[tuple[str, ...]] = ()
    deployed_at: Optional[str] = None
    priority: int = 0

    def __post_init__(self):
        if self.gateways is not None:
            object.__setattr__(self, "gateways", tuple(self.gateways))
        if not isinstance(self.coefficients, Coefficients):
            object.__setattr__(self, "coefficients", Coefficients.of(self.coefficients))
        if self.priority < 0:
            raise PolicyError(f"PI {self.id}: priority must be non-negative")
        if self.technology == NULL and not self.coefficients.is_zero:
            raise PolicyError(f"PI {self.id}: NULL technology requires zero coefficients")

    def with_(self, **changes) -> "PolicyImplementation":
        return replace(self, **changes)

    def to_spec(self, *, include_set_fields: bool = True) -> dict:
        out = {
            "id": self.id,
            "source": self.source,
            "destination": self.destination,
            "coefficients": self.coefficients.to_spec(),
            "selector": self.selector.to_spec(),
        }
        if self.gateways is not None:
            out["gateways"] = list(self.gateways)
        out["priority"] = self.priority
        if include_set_fields:
            out["technology"] = self.technology
            out["deployed_at"] = self.deployed_at
        return out

    @classmethod
    def from_spec(cls, spec: dict, **defaults) -> "PolicyImplementation":
        data = {**defaults, **spec}
        gws = data.get("gateways", None)
        return cls(
            id=str(data["id"]),
            source=str(data["source"]),
            destination=str(data["destination"]),
            technology=str(data["technology"]),
            coefficients=Coefficients.of(data.get("coefficients", [0, 0, 0])),
            selector=Selector.from_spec(data.get("selector", "*")),
            gateways=None if gws is None else tuple(gws),
            deployed_at=data.get("deployed_at"),
            priority=int(data.get("priority", 0)),
        )

    def short(self) -> str:
        return f"<{self.source}->{self.destination} | {self.technology} | {self.coefficients}>"


@dataclass(frozen=True)
class PISet:
    """Priority-ordered PIs sharing a deployment node and a technology."""

    node_id: str
    technology: str
    pis: tuple[PolicyImplementation, ...] = ()

    def __post_init__(self):
        pis = tuple(sorted(self.pis, key=lambda p: p.priority))
        seen = set()
        for pi in pis:
            if pi.deployed_at != self.node_id or pi.technology != self.technology:
                raise PolicyError(
                    f"PI {pi.id} does not belong to PI set ({self.node_id}, {self.technology})"
                )
            if pi.priority in seen:
                raise PolicyError(
                    f"duplicate priority {pi.priority} in PI set ({self.node_id}, {self.technology})"
                )
            seen.add(pi.priority)
        object.__setattr__(self, "pis", pis)


def group_pi_sets(pis: Iterable[PolicyImplementation]) -> list[PISet]:
    groups: dict[tuple[str, str], list[PolicyImplementation]] = {}
    for pi in pis:
        groups.setdefault((pi.deployed_at, pi.technology), []).append(pi)
    return [PISet(node, tech, tuple(members)) for (node, tech), members in sorted(groups.items())]


# ---------------------------------------------------------------------------
# least upper bound


def technology_join(
    t1: str,
    t2: str,
    registry: TechnologyRegistry = DEFAULT_REGISTRY,
    preferred: Sequence[str] = (),
) -> str:
    """Smallest technology dominating-or-equal to both.

    Same-layer (kin) technologies have no order of their own; the first one
    found in ``preferred`` wins, then the alphabetically smaller name.
    """
    rel = technology_relation(t1, t2, registry)
    if rel is Relation.EQUIVALENT or rel is Relation.DOMINATES:
        return t1
    if rel is Relation.DOMINATED_BY:
        return t2
    if rel is Relation.DISJOINT:
        raise PolicyError(f"no upper bound between {t1} and {t2} (one of them is NULL)")
    for name in preferred:
        if name in (t1, t2):
            return name
    return min(t1, t2)


def least_upper_bound_pi(
    i1: PolicyImplementation,
    i2: PolicyImplementation,
    forest: "EntityForest",
    *,
    registry: TechnologyRegistry = DEFAULT_REGISTRY,
    preferred: Sequence[str] = (),
    new_id: Optional[str] = None,
    priority: Optional[int] = None,
) -> PolicyImplementation:
    """Build a PI covering both inputs in every field."""
    if i1 == i2:
        return i1
    if i1.gateways != i2.gateways:
        raise PolicyError(f"cannot join {i1.id} and {i2.id}: different gateway lists")
    src = forest.common_ancestor(i1.source, i2.source)
    dst = forest.common_ancestor(i1.destination, i2.destination)
    if src is None or dst is None:
        raise PolicyError(f"cannot join {i1.id} and {i2.id}: disjoint end-points")
    tech = technology_join(i1.technology, i2.technology, registry, preferred)
    return PolicyImplementation(
        id=new_id or f"lub({i1.id},{i2.id})",
        source=src,
        destination=dst,
        technology=tech,
        coefficients=i1.coefficients.join(i2.coefficients),
        selector=i1.selector.field_union(i2.selector),
        gateways=i1.gateways,
        deployed_at=i1.deployed_at,
        priority=min(i1.priority, i2.priority) if priority is None else priority,
    )
