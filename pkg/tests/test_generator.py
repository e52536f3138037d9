from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from policy_anomalies.anomalies import AnomalyKind, run_analysis
from policy_anomalies.ingest.generator import (
    GenerationError,
    GenerationParams,
    generate_scenario,
    manifest_anomalies,
    manifest_recall,
)
from policy_anomalies.scenario import serialize_scenario

sizes = st.tuples(st.integers(0, 25), st.integers(0, 25), st.integers(30, 80), st.integers(0, 10_000))


def test_empty_policy():
    sc = generate_scenario(GenerationParams(0, 0, 10))
    assert len(sc.forest.nodes()) == 10
    assert sc.pis == ()
    assert run_analysis(sc).anomalies == []


def test_same_seed_same_scenario():
    p = GenerationParams(20, 20, 50, 7)
    assert serialize_scenario(generate_scenario(p)) == serialize_scenario(generate_scenario(p))
    other = serialize_scenario(generate_scenario(GenerationParams(20, 20, 50, 8)))
    assert other != serialize_scenario(generate_scenario(p))


@settings(max_examples=25)
@given(sizes)
def test_sizes_match_the_parameters(args):
    n_pi, n_conflict, n_entities, seed = args
    sc = generate_scenario(GenerationParams(n_pi, n_conflict, n_entities, seed))
    assert len(sc.forest.nodes()) == n_entities
    assert len(sc.pis) == n_pi + n_conflict


@settings(max_examples=25)
@given(st.integers(1, 40), st.integers(0, 10_000), st.sampled_from([(1, 0, 0), (0, 1, 0), (0, 0, 1), (1 / 3, 1 / 3, 1 / 3)]))
def test_phase_one_is_conflict_free(n_pi, seed, mix):
    sc = generate_scenario(GenerationParams(n_pi, 0, 60, seed, mix))
    found = Counter(a.kind for a in run_analysis(sc).anomalies)
    found.pop(AnomalyKind.MONITORABILITY, None)  # chained tunnels are monitorable by construction
    assert not found


@settings(max_examples=15)
@given(st.integers(0, 30), st.integers(1, 30), st.integers(0, 10_000))
def test_every_injection_is_found(n_pi, n_conflict, seed):
    sc = generate_scenario(GenerationParams(n_pi, n_conflict, 70, seed))
    found, missing = manifest_recall(sc, run_analysis(sc))
    assert not missing
    assert len(found) == len(manifest_anomalies(sc)) > 0


def test_kinds_are_drawn_roughly_uniformly():
    counts = Counter()
    for seed in range(6):
        sc = generate_scenario(GenerationParams(20, 100, 120, seed))
        counts.update(e["kind"] for e in sc.manifest if "kind" in e)
    assert set(counts) == {k.value for k in AnomalyKind}
    assert max(counts.values()) < 4 * min(counts.values())


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n_pi=-1),
        dict(n_conflict=-2),
        dict(scheme_mix=(0.5, 0.5, 0.5)),
        dict(scheme_mix=(1.0, 0.0)),
        dict(n_pi=70_000),
    ],
)
def test_invalid_parameters(kwargs):
    with pytest.raises(GenerationError):
        GenerationParams(**kwargs)


def test_too_few_entities():
    with pytest.raises(GenerationError):
        generate_scenario(GenerationParams(5, 0, 2))
