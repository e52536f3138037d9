"""Text, JSON and DOT renderings of analysis results."""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass, field
from typing import Optional

from .anomalies import AnalysisResult, AnalysisStats, Anomaly, AnomalyKind, EffectCategory
from .policy import NULL, PolicyImplementation
from .resolution import suggest
from .scenario import Scenario

REPORT_SCHEMA_VERSION = 1
FORMATS = ("text", "json", "dot-bundle")


class ReportError(ValueError):
    """Unknown format or an anomaly that has no drawing."""


# ---------------------------------------------------------------------------
# DOT


def _q(text: str) -> str:
    return '"' + str(text).replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def _coeff_label(pi: PolicyImplementation) -> str:
    return "(" + ",".join(str(v) for v in pi.coefficients.to_spec()) + ")"


def is_tunnel(pi: PolicyImplementation, scenario: Scenario) -> bool:
    """Carries traffic whose addresses lie outside its own end-points."""
    sel = pi.selector
    for ref, ips in ((pi.source, sel.ip_src), (pi.destination, sel.ip_dst)):
        if ips.is_full:
            continue
        scope, _ = scenario.forest.address_scope(ref)
        if scope is None or not ips.issubset(scope):
            return True
    return False


def channel_class(pi: PolicyImplementation, scenario: Scenario) -> str:
    if pi.technology == NULL or pi.coefficients.is_zero:
        return "unprotected"
    return "tunnel" if is_tunnel(pi, scenario) else "protected"


_EDGE_STYLE = {
    "unprotected": 'style="dashed"',
    "protected": 'style="solid"',
    "tunnel": 'style="solid", color="black:invis:black", penwidth=2',
}


def _attach(scenario: Scenario, node: str, layer: Optional[int]) -> str:
    """The vertex of ``node`` where a layer-``layer`` channel hooks in."""
    forest = scenario.forest
    best, best_layer = node, -1
    for ref in forest.descendants(node):
        ent = forest.get(ref)
        if layer is not None and ent.layer <= layer and ent.layer > best_layer:
            best, best_layer = ent.ref, ent.layer
    return best


def emit_dot(anomaly: Anomaly, scenario: Scenario) -> str:
    """A DOT digraph of the entity trees and channels behind ``anomaly``."""
    if anomaly.kind is AnomalyKind.OUT_OF_PLACE:
        raise ReportError("OUT_OF_PLACE anomalies have no graphical rendering")
    forest = scenario.forest
    ids = list(anomaly.involved)
    # inner channels give a superfluous tunnel its context
    ids += [p for p in anomaly.evidence.get("inner", ()) if p not in ids]
    pis = [scenario.pi(p) for p in ids]
    nodes: list[str] = []
    for n in anomaly.nodes:
        if n in forest.nodes() and n not in nodes:
            nodes.append(n)
    for pi in pis:
        for n in scenario.chain(pi):
            if n not in nodes:
                nodes.append(n)

    lines = [f"digraph {_q(anomaly.kind.value)} {{"]
    title = f"{anomaly.kind.value} [{anomaly.effect.value} / {anomaly.info.value}]"
    lines.append(f"  label={_q(title)};")
    lines.append("  labelloc=t;")
    lines.append("  rankdir=LR;")
    lines.append('  node [shape=box, fontsize=10];')
    for n in nodes:
        lines.append(f"  subgraph {_q('cluster_' + n)} {{")
        lines.append(f"    label={_q(n)};")
        lines.append(f"    {_q(n)} [shape=ellipse];")
        for ref in forest.descendants(n):
            ent = forest.get(ref)
            lines.append(f"    {_q(ref)} [label={_q(f'{ent.label} (l{ent.layer})')}];")
        for ref in forest.descendants(n):
            ent = forest.get(ref)
            lines.append(f"    {_q(ent.parent)} -> {_q(ref)} [arrowhead=none, color=gray];")
        lines.append("  }")

    for pi in pis:
        layer = scenario.registry.layer(pi.technology)
        klass = channel_class(pi, scenario)
        label = f"{pi.id} {pi.technology}: {_coeff_label(pi)}\n{pi.selector}"
        src, dst = forest.canonical(pi.source), forest.canonical(pi.destination)
        if klass == "tunnel":
            hops = [src] + [_attach(scenario, g, layer) for g in pi.gateways or ()] + [dst]
        else:
            hops = [src, dst]
        for k, (a, b) in enumerate(zip(hops, hops[1:])):
            attrs = [_EDGE_STYLE[klass]]
            if k == 0:
                attrs.append(f"label={_q(label)}")
            lines.append(f"  {_q(a)} -> {_q(b)} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def dot_bundle(result: AnalysisResult, scenario: Scenario) -> dict[str, str]:
    """File name -> DOT text for every renderable anomaly."""
    out = {}
    for idx, a in enumerate(result.anomalies, 1):
        if a.kind is AnomalyKind.OUT_OF_PLACE:
            continue
        out[f"{idx:04d}_{a.kind.value.lower()}.dot"] = emit_dot(a, scenario)
    return out


# ---------------------------------------------------------------------------
# report document


@dataclass
class ReportDocument:
    scenario: dict
    anomalies: list[dict]
    stats: dict
    notes: list[str] = field(default_factory=list)
    truncated: bool = False
    schema_version: int = REPORT_SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "scenario": self.scenario,
            "stats": self.stats,
            "truncated": self.truncated,
            "notes": list(self.notes),
            "anomalies": self.anomalies,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReportDocument":
        return cls(
            scenario=d["scenario"],
            anomalies=list(d["anomalies"]),
            stats=d["stats"],
            notes=list(d.get("notes", [])),
            truncated=bool(d.get("truncated", False)),
            schema_version=int(d["schema_version"]),
        )

    def result(self) -> AnalysisResult:
        """Rebuild the analysis result (resolutions are dropped)."""
        return AnalysisResult(
            [Anomaly.from_dict(a) for a in self.anomalies],
            AnalysisStats(**self.stats),
            list(self.notes),
            self.truncated,
        )


def _summary(scenario: Optional[Scenario]) -> dict:
    if scenario is None:
        return {}
    return {
        "nodes": len(scenario.forest.nodes()),
        "entities": len(scenario.forest),
        "pis": len(scenario.pis),
        "pi_sets": len(scenario.pi_sets()),
        "warnings": list(scenario.warnings),
    }


def build_report(result: AnalysisResult, scenario: Optional[Scenario] = None, *, resolutions: bool = True) -> ReportDocument:
    items = []
    for a in result.anomalies:
        d = a.to_dict()
        if resolutions and scenario is not None:
            d["resolutions"] = [r.to_dict() for r in suggest(a, scenario)]
        items.append(d)
    return ReportDocument(_summary(scenario), items, result.stats.to_dict(), list(result.notes), result.truncated)


def parse_report(data) -> ReportDocument:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return ReportDocument.from_dict(json.loads(data))


def _text(doc: ReportDocument) -> str:
    out = []
    s = doc.scenario
    if s:
        out.append(f"scenario: {s['nodes']} nodes, {s['entities']} entities, {s['pis']} PIs in {s['pi_sets']} PI sets")
        for w in s.get("warnings", []):
            out.append(f"warning: {w}")
    st = doc.stats
    out.append(
        f"analysis: {len(doc.anomalies)} anomalies, {st['enumerated_paths']} paths, "
        f"pre-computation {st['pre_computation_time']:.3f}s, analysis {st['analysis_time']:.3f}s"
    )
    if doc.truncated:
        out.append("note: enumeration was capped; path-level results may be incomplete")
    for n in doc.notes:
        out.append(f"note: {n}")
    for cat in EffectCategory:
        group = [a for a in doc.anomalies if a["effect"] == cat.value]
        if not group:
            continue
        out.append("")
        out.append(f"== {cat.value} ({len(group)})")
        for a in group:
            who = ", ".join(a["subjects"]) or ", ".join(a["nodes"])
            out.append(f"- {a['kind']} [{a['info']}] {who}: {a['message']}")
            for key, val in a["evidence"].items():
                out.append(f"    {key} = {json.dumps(val)}")
            for idx, r in enumerate(a.get("resolutions", ()), 1):
                out.append(f"    fix {idx}: {r['action']} {', '.join(r['subjects'])} ({r['rationale']})")
    if not doc.anomalies:
        out.append("no anomalies")
    return "\n".join(out) + "\n"


def emit_report(result: AnalysisResult, format: str = "text", scenario: Optional[Scenario] = None, *, resolutions: bool = True) -> bytes:
    if format not in FORMATS:
        raise ReportError(f"unknown report format {format!r}; choose one of {', '.join(FORMATS)}")
    if format == "dot-bundle":
        if scenario is None and result.anomalies:
            raise ReportError("DOT rendering needs the scenario")
        files = dot_bundle(result, scenario) if scenario is not None else {}
        buf = io.BytesIO()
        with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
            for name, text in files.items():
                zf.writestr(zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0)), text)
        return buf.getvalue()
    doc = build_report(result, scenario, resolutions=resolutions)
    if format == "json":
        return (json.dumps(doc.to_dict(), indent=2) + "\n").encode("utf-8")
    return _text(doc).encode("utf-8")


__all__ = [
    "FORMATS",
    "REPORT_SCHEMA_VERSION",
    "ReportDocument",
    "ReportError",
    "build_report",
    "channel_class",
    "dot_bundle",
    "emit_dot",
    "emit_report",
    "is_tunnel",
    "parse_report",
]
