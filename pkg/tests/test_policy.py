from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st
from mini import DOMAINS, NODES, random_world, to_selector
from oracles import coefficient_relation as coeff_oracle

from policy_anomalies.policy import (
    Coefficients,
    PISet,
    PolicyError,
    PolicyImplementation,
    TechnologyRegistry,
    coefficient_relation,
    group_pi_sets,
    least_upper_bound_pi,
    technology_join,
    technology_relation,
)
from policy_anomalies.reference import network_scenario
from policy_anomalies.traffic import Relation, selector_relation

triples = st.tuples(*(st.integers(0, 3) for _ in range(3)))
mini_fields = st.tuples(*(st.frozensets(st.sampled_from(d)) for d in DOMAINS))


@pytest.mark.parametrize(
    "a,b,want",
    [
        ("IPsec", "TLS", Relation.DOMINATES),
        ("TLS", "IPsec", Relation.DOMINATED_BY),
        ("TLS", "SSH", Relation.KIN),
        ("TLS", "NULL", Relation.DISJOINT),
        ("NULL", "NULL", Relation.EQUIVALENT),
        ("MACsec", "WS-Security", Relation.DOMINATES),
    ],
)
def test_technology_relation(a, b, want):
    assert technology_relation(a, b) is want


def test_unregistered_technology_is_an_error():
    with pytest.raises(PolicyError):
        technology_relation("WireGuard", "TLS")


def test_registry_extension():
    reg = TechnologyRegistry({"WireGuard": 3})
    assert technology_relation("WireGuard", "IPsec", reg) is Relation.KIN
    with pytest.raises(PolicyError):
        reg.register("WireGuard", 5)
    with pytest.raises(PolicyError):
        reg.register("Odd", 4)
    with pytest.raises(PolicyError):
        reg.register("NULL", 3)


@pytest.mark.parametrize(
    "a,b,want",
    [
        ((3, 3, 3), (1, 1, 1), Relation.DOMINATES),
        ((0, 3, 0), (0, 0, 3), Relation.DISJOINT),
        ((2, 2, 2), (2, 2, 2), Relation.EQUIVALENT),
        ((0, 0, 1), (0, 1, 1), Relation.DOMINATED_BY),
    ],
)
def test_coefficient_relation(a, b, want):
    assert coefficient_relation(Coefficients.of(a), Coefficients.of(b)) is want


@given(triples, triples)
def test_coefficient_relation_matches_oracle(a, b):
    assert coefficient_relation(Coefficients.of(a), Coefficients.of(b)).value == coeff_oracle(a, b)


@given(triples, triples, triples)
def test_coefficient_dominance_is_a_strict_partial_order(a, b, c):
    rel = lambda x, y: coefficient_relation(Coefficients.of(x), Coefficients.of(y))  # noqa: E731
    assert rel(a, a) is Relation.EQUIVALENT
    if rel(a, b) is Relation.DOMINATES:
        assert rel(b, a) is Relation.DOMINATED_BY
        if rel(b, c) is Relation.DOMINATES:
            assert rel(a, c) is Relation.DOMINATES


def test_coefficients_are_exact_rationals():
    c = Coefficients.of([0.1, "1/3", 2])
    assert c.header_integrity == Fraction(1, 10)
    assert c.to_spec() == ["1/10", "1/3", 2]
    with pytest.raises(PolicyError):
        Coefficients.of([-1, 0, 0])
    with pytest.raises(PolicyError):
        Coefficients.of([1, 2])


def test_null_pi_needs_zero_coefficients():
    with pytest.raises(PolicyError):
        PolicyImplementation("p", "a", "b", "NULL", Coefficients.of((0, 0, 1)))
    PolicyImplementation("p", "a", "b", "NULL")


def test_pi_spec_round_trip():
    pi = PolicyImplementation("p", "c_a1", "s_c1", "TLS", (0, 3, 0), gateways=("g_a1",), deployed_at="c_a1", priority=2)
    assert PolicyImplementation.from_spec(pi.to_spec()) == pi


def test_pi_set_rejects_duplicate_priority_and_foreign_members():
    a = PolicyImplementation("a", "x", "y", "TLS", deployed_at="n", priority=1)
    b = a.with_(id="b")
    with pytest.raises(PolicyError):
        PISet("n", "TLS", (a, b))
    with pytest.raises(PolicyError):
        PISet("n", "IPsec", (a,))
    sets = group_pi_sets([b.with_(priority=0), a])
    assert [p.id for p in sets[0].pis] == ["b", "a"]


def test_technology_join():
    assert technology_join("IPsec", "TLS") == "IPsec"
    assert technology_join("TLS", "SSH") == "SSH"
    assert technology_join("TLS", "SSH", preferred=("TLS",)) == "TLS"
    with pytest.raises(PolicyError):
        technology_join("TLS", "NULL")


def test_lub_of_affinity_pair():
    forest = network_scenario().forest
    i1 = PolicyImplementation("i1", "c_a1.l3", "s_c1.l3", "IPsec", (0, 0, 3), deployed_at="c_a1")
    i2 = PolicyImplementation("i2", "c_a1.l5", "s_c1.l5", "TLS", (0, 3, 0), deployed_at="c_a1", priority=1)
    lub = least_upper_bound_pi(i1, i2, forest)
    assert (lub.source, lub.destination, lub.technology) == ("c_a1.l3", "s_c1.l3", "IPsec")
    assert lub.coefficients == Coefficients.of((0, 3, 3))
    assert least_upper_bound_pi(i1, i1, forest) is i1


def test_lub_preconditions():
    forest = network_scenario().forest
    i1 = PolicyImplementation("i1", "c_a1.l3", "s_c1.l3", "IPsec", deployed_at="c_a1")
    with pytest.raises(PolicyError):
        least_upper_bound_pi(i1, i1.with_(id="i2", gateways=("g_a1",)), forest)
    with pytest.raises(PolicyError):
        least_upper_bound_pi(i1, i1.with_(id="i2", source="c_a2.l3"), forest)


@given(st.integers(0, 10_000), st.data())
def test_lub_is_an_upper_bound(seed, data):
    world = random_world(seed)
    forest = world.scenario.forest
    refs = sorted(world.oracle.parents)
    s_node, d_node = data.draw(st.sampled_from(NODES)), data.draw(st.sampled_from(NODES))

    def draw_pi(pid):
        # same-layer technologies have no join, so only comparable ones are drawn
        tech = data.draw(st.sampled_from(("MACsec", "IPsec", "TLS")))
        return PolicyImplementation(
            pid,
            data.draw(st.sampled_from([r for r in refs if r.startswith(s_node)])),
            data.draw(st.sampled_from([r for r in refs if r.startswith(d_node)])),
            tech,
            data.draw(triples),
            to_selector(data.draw(mini_fields)),
            deployed_at=s_node,
        )

    i1, i2 = draw_pi("i1"), draw_pi("i2")
    lub = least_upper_bound_pi(i1, i2, forest)
    for pi in (i1, i2):
        assert forest.relation(lub.source, pi.source).dominates_or_equal
        assert forest.relation(lub.destination, pi.destination).dominates_or_equal
        assert technology_relation(lub.technology, pi.technology).dominates_or_equal
        assert coefficient_relation(lub.coefficients, pi.coefficients).dominates_or_equal
        assert selector_relation(lub.selector, pi.selector).dominates_or_equal
