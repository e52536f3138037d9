import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import MINI_IPS, MINI_PORTS, MINI_PROTOS, MINI_UNIVERSE, matched, set_relation
from mini import DOMAINS, to_selector

from policy_anomalies.traffic import (
    FieldKind,
    FieldSet,
    Relation,
    Selector,
    restrict_selector,
    reverse_selector,
    selector_relation,
)

small = st.frozensets(st.integers(0, 40), max_size=30)


def port_set(values) -> FieldSet:
    return FieldSet.of(FieldKind.PORT_SET, *sorted(values))


def mini_fields(empty=True):
    return st.tuples(*(st.frozensets(st.sampled_from(d), min_size=0 if empty else 1) for d in DOMAINS))


# field sets -----------------------------------------------------------------


@given(small, small)
def test_fieldset_algebra_matches_python_sets(a, b):
    fa, fb = port_set(a), port_set(b)
    assert set(fa.union(fb)) == a | b
    assert set(fa.intersection(fb)) == a & b
    assert set(fa.difference(fb)) == a - b
    assert fa.issubset(fb) == (a <= b)
    assert fa.isdisjoint(fb) == (not a & b)
    assert fa.size() == len(a)


@given(small)
def test_fieldset_is_normalized(a):
    iv = port_set(a).intervals
    for (lo1, hi1), (lo2, _) in zip(iv, iv[1:]):
        assert hi1 + 1 < lo2
    assert all(lo <= hi for lo, hi in iv)


@given(small, small)
def test_equal_members_compare_equal(a, b):
    assert (port_set(a) == port_set(b)) == (a == b)


def test_fieldset_bounds_and_kinds():
    with pytest.raises(ValueError):
        FieldSet.of(FieldKind.PORT_SET, 70000)
    with pytest.raises(ValueError):
        FieldSet.full(FieldKind.PORT_SET).union(FieldSet.full(FieldKind.PROTO_SET))
    assert FieldSet.parse(FieldKind.PORT_SET, "*").is_full
    assert FieldSet.parse(FieldKind.PROTO_SET, "tcp") == FieldSet.of(FieldKind.PROTO_SET, 6)


@pytest.mark.parametrize(
    "kind,spec",
    [
        (FieldKind.IP_SET, "10.1.0.0/16"),
        (FieldKind.IP_SET, "10.0.0.3"),
        (FieldKind.IP_SET, "10.0.0.3-10.0.0.9"),
        (FieldKind.IP_SET, ["10.0.0.1", "10.2.0.0/24"]),
        (FieldKind.PORT_SET, "1000-2000"),
        (FieldKind.PORT_SET, [22, 443]),
        (FieldKind.PROTO_SET, "UDP"),
        (FieldKind.PROTO_SET, "*"),
    ],
)
def test_fieldset_text_round_trip(kind, spec):
    fs = FieldSet.parse(kind, spec)
    assert FieldSet.parse(kind, fs.to_spec()) == fs


# selectors ------------------------------------------------------------------


def test_subnet_selector_dominates_narrower_one():
    s1 = Selector.build("10.1.0.0/16", "*", "10.2.0.0/16", "*", "*")
    s2 = Selector.build("10.1.5.0/24", "*", "10.2.0.0/16", "*", "TCP")
    assert selector_relation(s1, s2) is Relation.DOMINATES
    assert selector_relation(s2, s1) is Relation.DOMINATED_BY


def test_wildcard_is_equivalent_to_itself():
    assert selector_relation(Selector(), Selector()) is Relation.EQUIVALENT


def test_schema_mismatch_is_rejected():
    tagged = Selector(extras=(("vlan", FieldSet.full(FieldKind.PORT_SET)),))
    with pytest.raises(ValueError):
        selector_relation(Selector(), tagged)


@given(mini_fields(), mini_fields())
def test_selector_relation_matches_packet_enumeration(f1, f2):
    got = selector_relation(to_selector(f1), to_selector(f2))
    assert got.value == set_relation(matched(f1), matched(f2))


@given(mini_fields(), mini_fields())
def test_selector_relation_is_antisymmetric(f1, f2):
    s1, s2 = to_selector(f1), to_selector(f2)
    assert selector_relation(s1, s2).flipped() is selector_relation(s2, s1)


def test_reverse_swaps_source_and_destination():
    s = Selector.build("10.0.0.1", 1000, "10.0.0.2", 443, "TCP")
    r = reverse_selector(s)
    assert r == Selector.build("10.0.0.2", 443, "10.0.0.1", 1000, "TCP")
    assert reverse_selector(Selector()) == Selector()


@given(mini_fields())
def test_reverse_is_an_involution(f):
    s = to_selector(f)
    assert reverse_selector(reverse_selector(s)) == s


def test_restrict_keeps_named_fields_only():
    s = Selector.build("10.0.0.1", 1000, "10.0.0.2", 443, "TCP")
    assert restrict_selector(s, {"ip_src", "p_src"}) == Selector.build("10.0.0.1", 1000)
    assert restrict_selector(s, s.field_names()) == s
    with pytest.raises(KeyError):
        restrict_selector(s, {"vlan"})


@given(mini_fields(empty=False), st.sets(st.sampled_from(("ip_src", "p_src", "ip_dst", "p_dst", "prt"))))
def test_restriction_only_widens(f, names):
    s = to_selector(f)
    r = restrict_selector(s, names)
    for packet in itertools.islice(matched(f), 200):
        assert r.matches(packet)
    assert r.contains(s)


@given(mini_fields())
def test_membership_matches_cartesian_product(f):
    s = to_selector(f)
    want = matched(f)
    sample = MINI_UNIVERSE[::97]
    assert all(s.matches(p) == (p in want) for p in sample)
    assert s.is_empty == (not want)


def test_selector_spec_round_trip():
    s = Selector.build("10.1.0.0/16", "*", "10.2.0.0/16", [80, 443], "TCP")
    assert Selector.from_spec(s.to_spec()) == s
    assert Selector.from_spec("*") == Selector()
    with pytest.raises(ValueError):
        Selector.from_spec({"ip_source": "*"})


def test_mini_domain_sizes():
    assert len(MINI_UNIVERSE) == 16 * 4 * 16 * 4 * 2
    assert (len(MINI_IPS), len(MINI_PORTS), len(MINI_PROTOS)) == (16, 4, 2)
