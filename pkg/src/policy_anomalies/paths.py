"""PI chaining into paths, the node-level connection graph and cycles."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import networkx as nx

from .traffic import Selector

DEFAULT_PATH_CAP = 1024


@dataclass(frozen=True)
class Hop:
    """A PI reduced to what chaining needs: end-point nodes and traffic."""

    id: str
    src: str
    dst: str
    selector: Optional[Selector] = None


@dataclass(frozen=True)
class Path:
    source: str
    destination: str
    pis: tuple[str, ...]
    traffic: Optional[Selector] = None

    def __len__(self) -> int:
        return len(self.pis)

    @property
    def nodes(self) -> tuple[str, ...]:
        return (self.source,) + self._inner + (self.destination,)

    _inner: tuple[str, ...] = field(default=(), repr=False, compare=False)


def _meet(a: Optional[Selector], b: Optional[Selector]) -> Optional[Selector]:
    if a is None:
        return b
    if b is None:
        return a
    return a.intersection(b)


def _extend(path: Path, hop: Hop) -> Optional[Path]:
    # an internal loop is a path of its own and never a prefix
    if hop.src != path.destination or hop.dst == hop.src or path.source == path.destination:
        return None
    if hop.dst in path.nodes:
        return None
    traffic = _meet(path.traffic, hop.selector)
    if traffic is not None and traffic.is_empty:
        return None
    return Path(path.source, hop.dst, path.pis + (hop.id,), traffic, path._inner + (path.destination,))


def _start(hop: Hop) -> Optional[Path]:
    if hop.selector is not None and hop.selector.is_empty:
        return None
    return Path(hop.src, hop.dst, (hop.id,), hop.selector)


def _by_source(hops: Iterable[Hop]) -> dict[str, list[Hop]]:
    out: dict[str, list[Hop]] = {}
    for h in sorted(hops, key=lambda h: h.id):
        out.setdefault(h.src, []).append(h)
    return out


@dataclass
class PathSet:
    paths: list[Path]
    truncated: bool = False

    def between(self) -> dict[tuple[str, str], list[Path]]:
        groups: dict[tuple[str, str], list[Path]] = {}
        for p in self.paths:
            groups.setdefault((p.source, p.destination), []).append(p)
        return groups


def enumerate_all_paths(hops: Sequence[Hop], cap: int = DEFAULT_PATH_CAP) -> PathSet:
    """Every simple path, shortest first.

    Single-PI paths are always listed; ``cap`` bounds the number of
    multi-PI paths, which are generated level by level so that shorter
    ones are kept when the bound bites.
    """
    if cap < 1:
        raise ValueError("path cap must be >= 1")
    out = [p for p in (_start(h) for h in sorted(hops, key=lambda h: h.id)) if p is not None]
    index = _by_source(hops)
    level = out
    budget = cap
    truncated = False
    while level and not truncated:
        nxt = []
        for path in level:
            for hop in index.get(path.destination, ()):
                ext = _extend(path, hop)
                if ext is None:
                    continue
                if budget == 0:
                    truncated = True
                    break
                nxt.append(ext)
                budget -= 1
            if truncated:
                break
        out.extend(nxt)
        level = nxt
    return PathSet(out, truncated)


def enumerate_simple_paths(
    hops: Sequence[Hop], e1: str, e2: str, cap: int = DEFAULT_PATH_CAP
) -> PathSet:
    """Simple paths from node ``e1`` to node ``e2`` in lexicographic PI-id order."""
    if cap < 1:
        raise ValueError("path cap must be >= 1")
    index = _by_source(hops)
    found: list[Path] = []
    truncated = False

    def visit(path: Path) -> bool:
        nonlocal truncated
        if path.destination == e2:
            if len(found) >= cap:
                truncated = True
                return False
            found.append(path)
            return True
        for hop in index.get(path.destination, ()):
            ext = _extend(path, hop)
            if ext is not None and not visit(ext):
                return False
        return True

    for hop in index.get(e1, ()):
        start = _start(hop)
        if start is not None and not visit(start):
            break
    return PathSet(found, truncated)


# ---------------------------------------------------------------------------
# connection graph


@dataclass
class ConnectionGraph:
    """Directed node graph; each edge remembers which PIs walk it."""

    vertices: set[str] = field(default_factory=set)
    edges: dict[tuple[str, str], set[str]] = field(default_factory=dict)

    @classmethod
    def from_chains(cls, chains: dict[str, Sequence[str]]) -> "ConnectionGraph":
        g = cls()
        for pi_id in sorted(chains):
            chain = list(chains[pi_id])
            g.vertices.update(chain)
            for a, b in zip(chain, chain[1:]):
                if a != b:
                    g.edges.setdefault((a, b), set()).add(pi_id)
        return g

    @property
    def connection_count(self) -> int:
        return sum(len(v) for v in self.edges.values())

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(sorted(self.vertices))
        g.add_edges_from(sorted(self.edges))
        return g


def _rotate(cycle: Sequence[str]) -> tuple[str, ...]:
    k = min(range(len(cycle)), key=lambda i: cycle[i])
    return tuple(cycle[k:]) + tuple(cycle[:k])


def is_acyclic(graph: ConnectionGraph) -> bool:
    return nx.is_directed_acyclic_graph(graph.to_networkx())


def detect_cycles(
    graph: ConnectionGraph, cap: Optional[int] = None, min_length: int = 1
) -> tuple[list[tuple[str, ...]], bool]:
    """Elementary cycles (rotated to start at the smallest node), plus a truncation flag.

    Cycles shorter than ``min_length`` are skipped before the cap is applied.
    """
    g = graph.to_networkx()
    if nx.is_directed_acyclic_graph(g):
        return [], False
    gen = (c for c in nx.simple_cycles(g) if len(c) >= min_length)
    if cap is None:
        cycles = list(gen)
        truncated = False
    else:
        cycles = list(itertools.islice(gen, cap + 1))
        truncated = len(cycles) > cap
        cycles = cycles[:cap]
    return sorted({_rotate(c) for c in cycles}), truncated


def cycle_edges(cycle: Sequence[str]) -> list[tuple[str, str]]:
    return [(cycle[i], cycle[(i + 1) % len(cycle)]) for i in range(len(cycle))]


__all__ = [
    "ConnectionGraph",
    "DEFAULT_PATH_CAP",
    "Hop",
    "Path",
    "PathSet",
    "cycle_edges",
    "detect_cycles",
    "enumerate_all_paths",
    "enumerate_simple_paths",
    "is_acyclic",
]
