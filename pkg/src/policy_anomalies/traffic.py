"""Interval-set field algebra and five-tuple traffic selectors."""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator


class FieldKind(str, Enum):
    IP_SET = "IP_SET"
    PORT_SET = "PORT_SET"
    PROTO_SET = "PROTO_SET"


DOMAIN_MAX = {
    FieldKind.IP_SET: 2**32 - 1,
    FieldKind.PORT_SET: 65535,
    FieldKind.PROTO_SET: 255,
}

PROTOCOL_NUMBERS = {"ICMP": 1, "TCP": 6, "UDP": 17, "GRE": 47, "ESP": 50, "AH": 51}
PROTOCOL_NAMES = {v: k for k, v in PROTOCOL_NUMBERS.items()}


class Relation(str, Enum):
    """Verdict of the four relationship operators (plus the reversed dominance)."""

    EQUIVALENT = "EQUIVALENT"
    DOMINATES = "DOMINATES"
    DOMINATED_BY = "DOMINATED_BY"
    KIN = "KIN"
    DISJOINT = "DISJOINT"

    @property
    def dominates_or_equal(self) -> bool:
        return self in (Relation.EQUIVALENT, Relation.DOMINATES)

    @property
    def dominated_or_equal(self) -> bool:
        return self in (Relation.EQUIVALENT, Relation.DOMINATED_BY)

    @property
    def disjoint(self) -> bool:
        return self is Relation.DISJOINT

    def flipped(self) -> "Relation":
        if self is Relation.DOMINATES:
            return Relation.DOMINATED_BY
        if self is Relation.DOMINATED_BY:
            return Relation.DOMINATES
        return self


def _normalize(intervals: Iterable[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    out: list[list[int]] = []
    for lo, hi in sorted((int(a), int(b)) for a, b in intervals):
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        if out and lo <= out[-1][1] + 1:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return tuple((a, b) for a, b in out)


@dataclass(frozen=True)
class FieldSet:
    """A union of disjoint closed intervals over one field's discrete domain.

    Intervals are kept sorted, non-overlapping and non-adjacent, so two sets
    describing the same members compare equal.
    """

    kind: FieldKind
    intervals: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        norm = _normalize(self.intervals)
        top = DOMAIN_MAX[self.kind]
        for lo, hi in norm:
            if lo < 0 or hi > top:
                raise ValueError(f"{self.kind.value} value out of range: [{lo}, {hi}]")
        object.__setattr__(self, "intervals", norm)

    @classmethod
    def full(cls, kind: FieldKind) -> "FieldSet":
        return cls(kind, ((0, DOMAIN_MAX[kind]),))

    @classmethod
    def empty(cls, kind: FieldKind) -> "FieldSet":
        return cls(kind, ())

    @classmethod
    def of(cls, kind: FieldKind, *values: int) -> "FieldSet":
        return cls(kind, tuple((v, v) for v in values))

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def is_full(self) -> bool:
        return self.intervals == ((0, DOMAIN_MAX[self.kind]),)

    def size(self) -> int:
        return sum(hi - lo + 1 for lo, hi in self.intervals)

    def __contains__(self, value: int) -> bool:
        return any(lo <= value <= hi for lo, hi in self.intervals)

    def __iter__(self) -> Iterator[int]:
        for lo, hi in self.intervals:
            yield from range(lo, hi + 1)

    def _check(self, other: "FieldSet") -> None:
        if self.kind is not other.kind:
            raise ValueError(f"field kind mismatch: {self.kind.value} vs {other.kind.value}")

    def union(self, other: "FieldSet") -> "FieldSet":
        self._check(other)
        return FieldSet(self.kind, self.intervals + other.intervals)

    def intersection(self, other: "FieldSet") -> "FieldSet":
        self._check(other)
        out = []
        a, b = self.intervals, other.intervals
        i = j = 0
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo <= hi:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return FieldSet(self.kind, tuple(out))

    def difference(self, other: "FieldSet") -> "FieldSet":
        self._check(other)
        out = []
        for lo, hi in self.intervals:
            cur = lo
            for olo, ohi in other.intervals:
                if ohi < cur or olo > hi:
                    continue
                if olo > cur:
                    out.append((cur, olo - 1))
                cur = max(cur, ohi + 1)
                if cur > hi:
                    break
            if cur <= hi:
                out.append((cur, hi))
        return FieldSet(self.kind, tuple(out))

    def issubset(self, other: "FieldSet") -> bool:
        self._check(other)
        b = other.intervals
        j = 0
        for lo, hi in self.intervals:
            while j < len(b) and b[j][1] < lo:
                j += 1
            if j == len(b) or b[j][0] > lo or b[j][1] < hi:
                return False
        return True

    def isdisjoint(self, other: "FieldSet") -> bool:
        self._check(other)
        a, b = self.intervals, other.intervals
        i = j = 0
        while i < len(a) and j < len(b):
            if a[i][1] < b[j][0]:
                i += 1
            elif b[j][1] < a[i][0]:
                j += 1
            else:
                return False
        return True

    # text form ---------------------------------------------------------

    @classmethod
    def parse(cls, kind: FieldKind, spec) -> "FieldSet":
        """Build a field set from ``"*"``, a scalar, a range string or a list of those."""
        if spec is None or spec == "*":
            return cls.full(kind)
        if isinstance(spec, (list, tuple)):
            out = cls.empty(kind)
            for item in spec:
                out = out.union(cls.parse(kind, item))
            return out
        if isinstance(spec, bool):
            raise ValueError(f"invalid {kind.value} value: {spec!r}")
        if isinstance(spec, int):
            return cls.of(kind, spec)
        text = str(spec).strip()
        if kind is FieldKind.IP_SET:
            return cls(kind, (_parse_ip_range(text),))
        if kind is FieldKind.PROTO_SET and text.upper() in PROTOCOL_NUMBERS:
            return cls.of(kind, PROTOCOL_NUMBERS[text.upper()])
        if "-" in text:
            lo, hi = text.split("-", 1)
            return cls(kind, ((int(lo), int(hi)),))
        return cls.of(kind, int(text))

    def to_spec(self):
        """Inverse of :meth:`parse` producing the canonical JSON-friendly form."""
        if self.is_full:
            return "*"
        items = []
        for lo, hi in self.intervals:
            if self.kind is FieldKind.IP_SET:
                items.extend(_format_ip_range(lo, hi))
            elif self.kind is FieldKind.PROTO_SET and lo == hi and lo in PROTOCOL_NAMES:
                items.append(PROTOCOL_NAMES[lo])
            elif lo == hi:
                items.append(lo)
            else:
                items.append(f"{lo}-{hi}")
        if len(items) == 1:
            return items[0]
        return items

    def __str__(self) -> str:
        spec = self.to_spec()
        if isinstance(spec, list):
            return "{" + ",".join(str(s) for s in spec) + "}"
        return str(spec)


def _parse_ip_range(text: str) -> tuple[int, int]:
    if "/" in text:
        net = ipaddress.IPv4Network(text, strict=False)
        return int(net.network_address), int(net.broadcast_address)
    if "-" in text:
        lo, hi = text.split("-", 1)
        return int(ipaddress.IPv4Address(lo.strip())), int(ipaddress.IPv4Address(hi.strip()))
    addr = int(ipaddress.IPv4Address(text))
    return addr, addr


def _format_ip_range(lo: int, hi: int) -> list[str]:
    if lo == hi:
        return [str(ipaddress.IPv4Address(lo))]
    nets = list(ipaddress.summarize_address_range(ipaddress.IPv4Address(lo), ipaddress.IPv4Address(hi)))
    if len(nets) == 1:
        return [str(nets[0])]
    return [f"{ipaddress.IPv4Address(lo)}-{ipaddress.IPv4Address(hi)}"]


FIVE_TUPLE = ("ip_src", "p_src", "ip_dst", "p_dst", "prt")
SOURCE_FIELDS = ("ip_src", "p_src")
_FIELD_KIND = {
    "ip_src": FieldKind.IP_SET,
    "p_src": FieldKind.PORT_SET,
    "ip_dst": FieldKind.IP_SET,
    "p_dst": FieldKind.PORT_SET,
    "prt": FieldKind.PROTO_SET,
}


def _full(name):
    return field(default_factory=lambda: FieldSet.full(_FIELD_KIND[name]))


@dataclass(frozen=True)
class Selector:
    """Traffic selector: the Cartesian product of its field sets."""

    ip_src: FieldSet = _full("ip_src")
    p_src: FieldSet = _full("p_src")
    ip_dst: FieldSet = _full("ip_dst")
    p_dst: FieldSet = _full("p_dst")
    prt: FieldSet = _full("prt")
    extras: tuple[tuple[str, FieldSet], ...] = ()

    def __post_init__(self):
        for name in FIVE_TUPLE:
            fs = getattr(self, name)
            if fs.kind is not _FIELD_KIND[name]:
                raise ValueError(f"{name} must be a {_FIELD_KIND[name].value}")
        object.__setattr__(self, "extras", tuple((str(n), fs) for n, fs in self.extras))

    @classmethod
    def wildcard(cls) -> "Selector":
        return cls()

    @classmethod
    def build(cls, ip_src="*", p_src="*", ip_dst="*", p_dst="*", prt="*", extras=()) -> "Selector":
        return cls(
            FieldSet.parse(FieldKind.IP_SET, ip_src),
            FieldSet.parse(FieldKind.PORT_SET, p_src),
            FieldSet.parse(FieldKind.IP_SET, ip_dst),
            FieldSet.parse(FieldKind.PORT_SET, p_dst),
            FieldSet.parse(FieldKind.PROTO_SET, prt),
            tuple(extras),
        )

    def fields(self) -> tuple[FieldSet, ...]:
        return (self.ip_src, self.p_src, self.ip_dst, self.p_dst, self.prt) + tuple(
            fs for _, fs in self.extras
        )

    def field_names(self) -> tuple[str, ...]:
        return FIVE_TUPLE + tuple(n for n, _ in self.extras)

    def get(self, name: str) -> FieldSet:
        if name in FIVE_TUPLE:
            return getattr(self, name)
        for n, fs in self.extras:
            if n == name:
                return fs
        raise KeyError(f"unknown selector field: {name}")

    @property
    def is_empty(self) -> bool:
        return any(fs.is_empty for fs in self.fields())

    @property
    def is_wildcard(self) -> bool:
        return all(fs.is_full for fs in self.fields())

    def _schema_check(self, other: "Selector") -> None:
        if self.field_names() != other.field_names():
            raise ValueError(
                f"selector schema mismatch: {self.field_names()} vs {other.field_names()}"
            )

    def _combine(self, other: "Selector", op: str) -> "Selector":
        self._schema_check(other)
        a, b = self.fields(), other.fields()
        combined = [getattr(x, op)(y) for x, y in zip(a, b)]
        extras = tuple((n, fs) for (n, _), fs in zip(self.extras, combined[5:]))
        return Selector(*combined[:5], extras=extras)

    def intersection(self, other: "Selector") -> "Selector":
        return self._combine(other, "intersection")

    def field_union(self, other: "Selector") -> "Selector":
        """Smallest product-form selector covering both (field-wise union)."""
        return self._combine(other, "union")

    def contains(self, other: "Selector") -> bool:
        """True when every packet matched by ``other`` is matched by ``self``."""
        self._schema_check(other)
        if other.is_empty:
            return True
        if self.is_empty:
            return False
        return all(b.issubset(a) for a, b in zip(self.fields(), other.fields()))

    def same_traffic(self, other: "Selector") -> bool:
        self._schema_check(other)
        if self.is_empty or other.is_empty:
            return self.is_empty and other.is_empty
        return self.fields() == other.fields()

    def overlaps(self, other: "Selector") -> bool:
        self._schema_check(other)
        if self.is_empty or other.is_empty:
            return False
        return not any(a.isdisjoint(b) for a, b in zip(self.fields(), other.fields()))

    def matches(self, packet: tuple[int, ...]) -> bool:
        fields = self.fields()
        if len(packet) != len(fields):
            raise ValueError("packet arity does not match selector schema")
        return all(v in fs for v, fs in zip(packet, fields))

    def reversed(self) -> "Selector":
        return Selector(self.ip_dst, self.p_dst, self.ip_src, self.p_src, self.prt, self.extras)

    def restricted(self, names: Iterable[str]) -> "Selector":
        """Keep the named fields; widen all others to the full domain."""
        keep = set(names)
        unknown = keep - set(self.field_names())
        if unknown:
            raise KeyError(f"unknown selector field(s): {sorted(unknown)}")
        vals = {
            n: (getattr(self, n) if n in keep else FieldSet.full(_FIELD_KIND[n]))
            for n in FIVE_TUPLE
        }
        extras = tuple(
            (n, fs if n in keep else FieldSet.full(fs.kind)) for n, fs in self.extras
        )
        return Selector(**vals, extras=extras)

    # serialization -----------------------------------------------------

    def to_spec(self):
        if self.is_wildcard and not self.extras:
            return "*"
        out = {n: getattr(self, n).to_spec() for n in FIVE_TUPLE}
        if self.extras:
            out["extras"] = [[n, fs.kind.value, fs.to_spec()] for n, fs in self.extras]
        return out

    @classmethod
    def from_spec(cls, spec) -> "Selector":
        if spec is None or spec == "*":
            return cls()
        if not isinstance(spec, dict):
            raise ValueError(f"selector must be '*' or an object, got {spec!r}")
        unknown = set(spec) - set(FIVE_TUPLE) - {"extras"}
        if unknown:
            raise ValueError(f"unknown selector field(s): {sorted(unknown)}")
        extras = tuple(
            (name, FieldSet.parse(FieldKind(kind), value))
            for name, kind, value in spec.get("extras", ())
        )
        return cls.build(*(spec.get(n, "*") for n in FIVE_TUPLE), extras=extras)

    def __str__(self) -> str:
        return "(" + ", ".join(str(fs) for fs in self.fields()) + ")"


def selector_relation(s1: Selector, s2: Selector) -> Relation:
    """Compare the matched-traffic sets of two selectors."""
    s1._schema_check(s2)
    e1, e2 = s1.is_empty, s2.is_empty
    if e1 or e2:
        if e1 and e2:
            return Relation.EQUIVALENT
        return Relation.DOMINATED_BY if e1 else Relation.DOMINATES
    f1, f2 = s1.fields(), s2.fields()
    if f1 == f2:
        return Relation.EQUIVALENT
    if all(b.issubset(a) for a, b in zip(f1, f2)):
        return Relation.DOMINATES
    if all(a.issubset(b) for a, b in zip(f1, f2)):
        return Relation.DOMINATED_BY
    if any(a.isdisjoint(b) for a, b in zip(f1, f2)):
        return Relation.DISJOINT
    return Relation.KIN


def reverse_selector(s: Selector) -> Selector:
    return s.reversed()


def restrict_selector(s: Selector, fields: Iterable[str]) -> Selector:
    return s.restricted(fields)
