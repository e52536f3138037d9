import io
import json
import zipfile

import pydot
import pytest

from policy_anomalies.anomalies import AnalysisResult, AnalysisStats, AnomalyKind, EffectCategory, run_analysis
from policy_anomalies.reference import case_names, case_scenario
from policy_anomalies.report import (
    FORMATS,
    ReportError,
    build_report,
    channel_class,
    dot_bundle,
    emit_dot,
    emit_report,
    parse_report,
)


def analysed(name):
    kind, sc = case_scenario(name)
    result = run_analysis(sc)
    return next(a for a in result.anomalies if a.kind.value == kind), sc, result


def edge_labels(dot):
    (graph,) = pydot.graph_from_dot_data(dot)
    out = []
    for e in graph.get_edges():
        label = e.get_label()
        if label:
            out.append(label.strip('"'))
    return out


@pytest.mark.parametrize("name", [n for n in case_names() if n != "out_of_place"])
def test_dot_parses_for_every_renderable_case(name):
    anomaly, sc, _ = analysed(name)
    dot = emit_dot(anomaly, sc)
    graphs = pydot.graph_from_dot_data(dot)
    assert graphs and len(graphs) == 1
    # one cluster per node in the drawing
    assert all(n in dot for n in anomaly.nodes if n in sc.forest.nodes())


def test_out_of_place_has_no_drawing():
    anomaly, sc, result = analysed("out_of_place")
    with pytest.raises(ReportError):
        emit_dot(anomaly, sc)
    assert all("out_of_place" not in name for name in dot_bundle(result, sc))


def test_affinity_edges_carry_technology_and_coefficients():
    anomaly, sc, _ = analysed("affinity")
    labels = [label.split("\\n")[0] for label in edge_labels(emit_dot(anomaly, sc))]
    assert sorted(labels) == ["af1 IPsec: (0,0,3)", "af2 TLS: (0,3,0)"]


def test_superfluous_tunnel_is_drawn_with_its_inner_channel():
    anomaly, sc, _ = analysed("superfluous")
    dot = emit_dot(anomaly, sc)
    labels = [label.split("\\n")[0] for label in edge_labels(dot)]
    assert sorted(labels) == ["su1 IPsec: (1,1,1)", "su2 IPsec: (3,3,3)"]
    assert channel_class(sc.pi("su1"), sc) == "tunnel"
    assert channel_class(sc.pi("su2"), sc) == "protected"
    assert "black:invis:black" in dot


def test_unprotected_channels_are_dashed():
    _, sc = case_scenario("contradiction")
    classes = {p.id: channel_class(p, sc) for p in sc.pis}
    assert "unprotected" in classes.values()


def test_text_report_groups_by_effect():
    _, sc, result = analysed("shadowing")
    text = emit_report(result, "text", sc).decode()
    headers = [line for line in text.splitlines() if line.startswith("== ")]
    order = [c.value for c in EffectCategory]
    seen = [h.split()[1] for h in headers]
    assert seen == sorted(seen, key=order.index)
    assert "SHADOWING" in text and "fix 1:" in text


def test_json_report_round_trips():
    _, sc, result = analysed("correlation")
    raw = emit_report(result, "json", sc)
    doc = parse_report(raw)
    assert doc.to_dict() == json.loads(raw)
    assert doc.result().anomalies == result.anomalies
    assert all(a["resolutions"] for a in doc.anomalies)
    assert doc == build_report(result, sc)


def test_json_without_resolutions():
    _, sc, result = analysed("redundancy")
    doc = parse_report(emit_report(result, "json", sc, resolutions=False))
    assert all("resolutions" not in a for a in doc.anomalies)


def test_dot_bundle_is_a_deterministic_zip():
    _, sc, result = analysed("cyclic")
    first, second = emit_report(result, "dot-bundle", sc), emit_report(result, "dot-bundle", sc)
    assert first == second
    with zipfile.ZipFile(io.BytesIO(first)) as zf:
        names = zf.namelist()
        assert names == sorted(dot_bundle(result, sc))
        for n in names:
            assert pydot.graph_from_dot_data(zf.read(n).decode())


def test_empty_result_in_every_format():
    empty = AnalysisResult([], AnalysisStats())
    assert "no anomalies" in emit_report(empty, "text").decode()
    assert parse_report(emit_report(empty, "json")).anomalies == []
    with zipfile.ZipFile(io.BytesIO(emit_report(empty, "dot-bundle"))) as zf:
        assert zf.namelist() == []


def test_format_errors():
    _, sc, result = analysed("redundancy")
    with pytest.raises(ReportError, match="unknown report format"):
        emit_report(result, "yaml", sc)
    with pytest.raises(ReportError):
        emit_report(result, "dot-bundle")
    assert FORMATS == ("text", "json", "dot-bundle")


def test_every_kind_has_a_text_line():
    for name in case_names():
        kind, sc = case_scenario(name)
        text = emit_report(run_analysis(sc), "text", sc).decode()
        assert f"- {AnomalyKind(kind).value} [" in text
