import random

import pytest
from hypothesis import given
from hypothesis import strategies as st
from mini import DOMAINS, random_forest, to_selector
from oracles import coefficient_relation, matched
from oracles import entity_relation as entity_oracle
from oracles import firewall_drops_all as fw_oracle

from policy_anomalies.network import (
    Action,
    CapabilityProfile,
    Edge,
    EntityForest,
    FirewallRule,
    NetworkEntity,
    NetworkError,
    TopologyGraph,
    UnroutableError,
    UnsupportedTechnologyError,
    crossed_gateways,
    deployment_node,
    entity_relation,
    firewall_drops_all,
    max_coefficients,
    source_in_selector_scope,
)
from policy_anomalies.policy import Coefficients, PolicyImplementation
from policy_anomalies.reference import network_scenario
from policy_anomalies.traffic import FieldKind, FieldSet, Relation, Selector

mini_fields = st.tuples(*(st.frozensets(st.sampled_from(d)) for d in DOMAINS))


@pytest.fixture(scope="module")
def net():
    return network_scenario()


def test_fixture_devices_and_services(net):
    # 8 clients, 5 gateways, 2 servers; services are entities on the servers
    assert len(net.forest.nodes()) == 15
    assert {net.forest.node_of(a) for a in ("db", "web_1", "web_2")} == {"s_c1", "s_c2"}


@pytest.mark.parametrize(
    "a,b,want",
    [
        ("s_c1.l3", "s_c1.l7'", Relation.DOMINATES),
        ("s_c1.l5", "s_c1.l5'", Relation.KIN),
        ("s_c1.l7'", "s_c1", Relation.DOMINATED_BY),
        ("c_a1.l3", "s_c1.l3", Relation.DISJOINT),
        ("web_1", "s_c1.l5'", Relation.EQUIVALENT),
    ],
)
def test_entity_relation_examples(net, a, b, want):
    assert entity_relation(net.forest, a, b) is want


def test_every_entity_is_equivalent_to_itself(net):
    for ent in net.forest:
        assert entity_relation(net.forest, ent.ref, ent.ref) is Relation.EQUIVALENT


def test_unknown_entity_is_an_error(net):
    with pytest.raises(NetworkError):
        entity_relation(net.forest, "c_a1.l9", "c_a1")


@given(st.integers(0, 100_000))
def test_entity_relation_matches_ancestry_walk(seed):
    ents, parents = random_forest(random.Random(seed))
    forest = EntityForest(ents)
    refs = sorted(parents)
    for a in refs:
        for b in refs:
            got = forest.relation(a, b)
            assert got.value == entity_oracle(parents, a, b)
            assert forest.relation(b, a) is got.flipped()
            for c in refs:
                if got is Relation.DOMINATES and forest.relation(b, c) is Relation.DOMINATES:
                    assert forest.relation(a, c) is Relation.DOMINATES


def test_forest_validation():
    root = NetworkEntity("n")
    with pytest.raises(NetworkError):
        EntityForest([root, NetworkEntity("n", "x", 4, "n")])
    with pytest.raises(NetworkError):
        EntityForest([root, NetworkEntity("n", "a", 3, "n"), NetworkEntity("n", "b", 2, "n.a")])
    with pytest.raises(NetworkError):
        EntityForest([root, root])
    with pytest.raises(NetworkError):
        EntityForest([root, NetworkEntity("m"), NetworkEntity("n", "a", 3, "m")])


def test_deployment_node_is_the_stored_field():
    pi = PolicyImplementation("p", "c_a1", "s_c1", "TLS", deployed_at="g_b1")
    assert deployment_node(pi) == "g_b1"


def test_max_coefficients_is_component_wise_minimum():
    def prof(name, c):
        return CapabilityProfile(name, {"IPsec"}, max_coefficients={"IPsec": Coefficients.of(c)})

    assert max_coefficients(prof("a", (5, 5, 5)), prof("b", (3, 3, 3)), "IPsec") == Coefficients.of((3, 3, 3))
    assert max_coefficients(prof("a", (5, 3, 5)), prof("b", (3, 5, 5)), "IPsec") == Coefficients.of((3, 3, 5))
    with pytest.raises(UnsupportedTechnologyError):
        max_coefficients(prof("a", (1, 1, 1)), CapabilityProfile("b"), "IPsec")
    assert max_coefficients(CapabilityProfile("a", {"TLS"}), CapabilityProfile("b", {"TLS"}), "TLS") is None


@given(*(st.tuples(*(st.integers(0, 5) for _ in range(3))) for _ in range(2)))
def test_max_coefficients_is_dominated_by_both_bounds(a, b):
    pa = CapabilityProfile("a", {"TLS"}, max_coefficients={"TLS": Coefficients.of(a)})
    pb = CapabilityProfile("b", {"TLS"}, max_coefficients={"TLS": Coefficients.of(b)})
    got = max_coefficients(pa, pb, "TLS").as_tuple()
    assert coefficient_relation(got, a) in ("EQUIVALENT", "DOMINATED_BY")
    assert coefficient_relation(got, b) in ("EQUIVALENT", "DOMINATED_BY")


# firewall -------------------------------------------------------------------


def test_universal_deny_and_default_allow():
    pi_sel = Selector.build("10.0.0.0/8", "*", "*", 443, "TCP")
    assert firewall_drops_all([FirewallRule(Selector(), Action.DENY)], pi_sel)
    assert not firewall_drops_all([], pi_sel)


def test_rule_order_matters():
    sel = Selector.build(p_dst=443)
    allow, deny = FirewallRule(sel, Action.ALLOW), FirewallRule(Selector(), Action.DENY)
    assert firewall_drops_all([deny, allow], sel)
    assert not firewall_drops_all([allow, deny], sel)


@given(mini_fields, st.lists(st.tuples(st.sampled_from(("ALLOW", "DENY")), mini_fields), max_size=4))
def test_firewall_matches_packet_oracle(fields, rules):
    got = firewall_drops_all([FirewallRule(to_selector(f), Action(a)) for a, f in rules], to_selector(fields))
    assert got == fw_oracle([(a, matched(f)) for a, f in rules], matched(fields))


# addressing -----------------------------------------------------------------


def test_source_scope_examples(net):
    assert source_in_selector_scope(net.forest, "c_a1.l3", Selector.build("10.1.0.0/16"))
    assert not source_in_selector_scope(net.forest, "c_a1.l3", Selector.build("10.2.0.0/16"))
    assert source_in_selector_scope(net.forest, "db", Selector.build("10.3.2.1", 5432))
    assert not source_in_selector_scope(net.forest, "db", Selector.build("10.3.2.1", 443))


def test_entity_without_address_is_an_error():
    forest = EntityForest([NetworkEntity("n"), NetworkEntity("n", "l2", 2, "n")])
    with pytest.raises(NetworkError):
        source_in_selector_scope(forest, "n.l2", Selector())


@given(st.integers(0, 100_000), mini_fields)
def test_source_scope_matches_packet_enumeration(seed, fields):
    ents, parents = random_forest(random.Random(seed))
    forest = EntityForest(ents)
    sel = to_selector(fields)
    for ref in parents:
        ip, ports = forest.address_scope(ref)
        if ip is None:
            continue
        # the scope is a product of addresses and ports, never empty
        want = set(ip) <= fields[0] and set(ports) <= fields[1]
        assert source_in_selector_scope(forest, ref, sel) == want


# topology -------------------------------------------------------------------


def test_crossed_gateways_example(net):
    assert crossed_gateways("c_a1", "s_c1", net.topology) == ("g_a1", "g_c1", "g_c2")
    assert crossed_gateways("g_a1", "c_a1", net.topology) == ()


def test_routes_are_connected_walks(net):
    topo = net.topology
    for (src, dst), walk in topo.routes.items():
        assert walk[0] == src and walk[-1] == dst
        assert all(topo.edge(a, b) is not None for a, b in zip(walk, walk[1:]))


def test_topology_validation():
    topo = TopologyGraph(["a", "b", "c"], [Edge("a", "b")])
    with pytest.raises(UnroutableError):
        topo.route("a", "c")
    with pytest.raises(NetworkError):
        topo.add_route("a", "c", ["a", "c"])
    with pytest.raises(NetworkError):
        TopologyGraph(["a"], [Edge("a", "z")])


def test_reindex_rebuilds_scopes(net):
    before = net.forest.address_scope("c_a1")
    net.forest.reindex()
    assert net.forest.address_scope("c_a1") == before
    assert before[0] == FieldSet.parse(FieldKind.IP_SET, "10.1.0.1")
