"""A three-site reference network and one small scenario per anomaly kind.

Sites A and B reach site C over the Internet (edges tagged with zone
``internet``).  Site C has three gateways, two servers and three clients.
Services are entities: ``db`` and ``web_1`` live on ``s_c1``, ``web_2`` on
``s_c2``.  Every case deploys its PIs at their source node unless stated.
"""

from __future__ import annotations

import copy
from itertools import permutations

import networkx as nx

from .scenario import Scenario, build_scenario

ALL_TECHNOLOGIES = ["IPsec", "MACsec", "SSH", "TLS", "WPA2", "WS-Security"]

CLIENTS = {
    "c_a1": "10.1.0.1",
    "c_a2": "10.1.0.2",
    "c_a3": "10.1.0.3",
    "c_b1": "10.2.0.1",
    "c_b2": "10.2.0.2",
    "c_c1": "10.3.1.1",
    "c_c2": "10.3.1.2",
    "c_c3": "10.3.1.3",
}
GATEWAYS = {
    # internal, external
    "g_a1": ("10.1.0.254", "203.0.113.1"),
    "g_b1": ("10.2.0.254", "203.0.113.2"),
    "g_c1": ("10.3.0.1", "203.0.113.3"),
    "g_c2": ("10.3.0.2", "203.0.113.4"),
    "g_c3": ("10.3.0.3", "203.0.113.5"),
}
EDGES = [
    ("g_a1", "c_a1", None),
    ("g_a1", "c_a2", None),
    ("g_a1", "c_a3", None),
    ("g_b1", "c_b1", None),
    ("g_b1", "c_b2", None),
    ("g_a1", "g_c1", "internet"),
    ("g_b1", "g_c1", "internet"),
    ("g_a1", "g_b1", "internet"),
    ("g_c1", "g_c2", None),
    ("g_c1", "g_c3", None),
    ("g_c2", "g_c3", None),
    ("g_c2", "s_c1", None),
    ("g_c2", "s_c2", None),
    ("g_c3", "c_c1", None),
    ("g_c3", "c_c2", None),
    ("g_c3", "c_c3", None),
]


def _client(node, ip):
    return {
        "id": node,
        "entities": [
            {"label": "l2", "layer": 2, "parent": None},
            {"label": "l3", "layer": 3, "parent": "l2", "ip": ip},
            {"label": "l5", "layer": 5, "parent": "l3"},
            {"label": "l7", "layer": 7, "parent": "l5"},
        ],
    }


def _gateway(node, inner, outer):
    return {
        "id": node,
        "entities": [
            {"label": "l2", "layer": 2, "parent": None},
            {"label": "l3", "layer": 3, "parent": "l2", "ip": inner},
            {"label": "l2'", "layer": 2, "parent": None},
            {"label": "l3'", "layer": 3, "parent": "l2'", "ip": outer},
        ],
    }


def _nodes():
    nodes = [_client(n, ip) for n, ip in CLIENTS.items()]
    nodes += [_gateway(n, *ips) for n, ips in GATEWAYS.items()]
    nodes.append(
        {
            "id": "s_c1",
            "entities": [
                {"label": "l2", "layer": 2, "parent": None},
                {"label": "l3", "layer": 3, "parent": "l2", "ip": "10.3.2.1"},
                {"label": "l5", "layer": 5, "parent": "l3", "port": 5432, "alias": "db"},
                {"label": "l5'", "layer": 5, "parent": "l3", "port": 443, "alias": "web_1"},
                {"label": "l7'", "layer": 7, "parent": "l5'"},
            ],
        }
    )
    nodes.append(
        {
            "id": "s_c2",
            "entities": [
                {"label": "l2", "layer": 2, "parent": None},
                {"label": "l3", "layer": 3, "parent": "l2", "ip": "10.3.2.2"},
                {"label": "l5", "layer": 5, "parent": "l3", "port": 443, "alias": "web_2"},
                {"label": "l7", "layer": 7, "parent": "l5"},
            ],
        }
    )
    return sorted(nodes, key=lambda n: n["id"])


def _routing(edges):
    g = nx.Graph()
    for a, b, _ in edges:
        g.add_edge(a, b)
    routes = []
    for src, dst in permutations(sorted(g.nodes), 2):
        routes.append({"src": src, "dst": dst, "path": nx.shortest_path(g, src, dst)})
    return routes


def reference_network() -> dict:
    """Scenario document with the network only (no PIs, no thresholds)."""
    nodes = _nodes()
    caps = {
        n["id"]: {
            "technologies": list(ALL_TECHNOLOGIES),
            "layer2": ["MACsec"],
            "max_coefficients": {t: [5, 5, 5] for t in ALL_TECHNOLOGIES},
        }
        for n in nodes
    }
    return {
        "schema_version": 1,
        "nodes": nodes,
        "topology": {"edges": [dict(a=a, b=b, **({"zone": z} if z else {})) for a, b, z in EDGES]},
        "routing": _routing(EDGES),
        "capabilities": caps,
        "pi_sets": [],
        "thresholds": {"min_coefficients": [], "inspection_zones": []},
    }


def _pi(pid, src, dst, coeffs, selector="*", **extra):
    return {"id": pid, "source": src, "destination": dst, "coefficients": list(coeffs), "selector": selector, **extra}


def _sets(*entries):
    """entries: (node, technology, [pi, ...])"""
    return [{"node": n, "technology": t, "pis": pis} for n, t, pis in entries]


INTERNET_RULE = {"when": {"crosses_zone": "internet"}, "min": [1, 1, 1]}

SUBNET_C_CLIENTS = "10.3.1.0/24"
SUBNET_C_SERVERS = "10.3.2.0/24"


def _case_docs() -> dict[str, tuple[str, dict]]:
    cases: dict[str, tuple[str, dict]] = {}

    def case(name, kind, pi_sets, tweak=None):
        doc = reference_network()
        doc["pi_sets"] = pi_sets
        if tweak:
            tweak(doc)
        cases[name] = (kind, doc)

    # ---- anomalies exercised together as the reference multiset
    def internet_threshold(doc):
        doc["thresholds"]["min_coefficients"] = [INTERNET_RULE]

    case(
        "inadequacy",
        "INADEQUACY",
        _sets(("c_a1", "TLS", [_pi("in1", "c_a1", "s_c1", (0, 1, 0))])),
        internet_threshold,
    )
    case(
        "monitorability",
        "MONITORABILITY",
        _sets(
            ("s_c1", "IPsec", [_pi("mo1", "s_c1", "g_c1", (3, 3, 3))]),
            ("g_c1", "IPsec", [_pi("mo2", "g_c1", "c_a1", (3, 3, 3))]),
        ),
    )
    # the outer tunnel is weaker than the inner one so it is not superfluous
    case(
        "skewed",
        "SKEWED_CHANNEL",
        _sets(
            (
                "g_c3",
                "IPsec",
                [_pi("sk1", "g_c3", "g_a1", (0, 0, 2)), _pi("sk2", "g_c3", "g_c1", (0, 0, 3))],
            )
        ),
    )

    def drop_tls_on_s_c2(doc):
        cap = doc["capabilities"]["s_c2"]
        cap["technologies"].remove("TLS")
        del cap["max_coefficients"]["TLS"]

    case(
        "non_enforceability",
        "NON_ENFORCEABILITY",
        _sets(("s_c2", "TLS", [_pi("ne1", "web_2", "db", (0, 0, 3))])),
        drop_tls_on_s_c2,
    )
    case(
        "shadowing",
        "SHADOWING",
        _sets(
            (
                "c_a1",
                "TLS",
                [
                    _pi("sh1", "c_a1.l5", "web_1", (0, 3, 0), priority=0),
                    _pi("sh2", "c_a1.l5", "web_1", (0, 0, 3), priority=1),
                ],
            )
        ),
    )
    case(
        "correlation",
        "CORRELATION",
        _sets(
            (
                "s_c2",
                "TLS",
                [_pi("co1", "web_2", "s_c1", (0, 0, 3)), _pi("co2", "s_c2", "db", (0, 3, 3))],
            )
        ),
    )
    case(
        "inclusion",
        "INCLUSION",
        _sets(
            ("c_a1", "IPsec", [_pi("ic1", "c_a1.l3", "s_c1.l3", (0, 3, 3))]),
            ("c_a1", "TLS", [_pi("ic2", "c_a1.l5", "web_1", (0, 0, 3))]),
        ),
    )
    case(
        "contradiction",
        "CONTRADICTION",
        _sets(
            ("c_a1", "IPsec", [_pi("cd1", "c_a1", "s_c1", (0, 3, 3))]),
            ("c_a1", "NULL", [_pi("cd2", "c_a1", "s_c1", (0, 0, 0))]),
        ),
    )
    case(
        "superfluous",
        "SUPERFLUOUS",
        _sets(
            (
                "g_c3",
                "IPsec",
                [
                    _pi(
                        "su1", "g_c3.l3'", "g_c2.l3'", (1, 1, 1),
                        {"ip_src": SUBNET_C_CLIENTS, "ip_dst": SUBNET_C_SERVERS},
                    )
                ],
            ),
            (
                "c_c1",
                "IPsec",
                [
                    _pi(
                        "su2", "c_c1.l3", "s_c1.l3", (3, 3, 3),
                        {"ip_src": CLIENTS["c_c1"], "ip_dst": "10.3.2.1"},
                        gateways=["g_c3", "g_c2"],
                    )
                ],
            ),
        ),
    )
    case(
        "affinity",
        "AFFINITY",
        _sets(
            ("c_a1", "IPsec", [_pi("af1", "c_a1.l3", "s_c1.l3", (0, 0, 3))]),
            ("c_a1", "TLS", [_pi("af2", "c_a1.l5", "s_c1.l5", (0, 3, 0))]),
        ),
    )
    case(
        "alternative_path",
        "ALTERNATIVE_PATH",
        _sets(
            (
                "g_c2",
                "IPsec",
                [_pi("al1", "g_c2", "g_c3", (0, 0, 3)), _pi("al2", "g_c2", "g_c1", (0, 0, 3))],
            ),
            ("g_c1", "IPsec", [_pi("al3", "g_c1", "g_c3", (0, 0, 3))]),
        ),
    )

    # ---- the remaining kinds
    case(
        "internal_loop",
        "INTERNAL_LOOP",
        _sets(("s_c1", "WS-Security", [_pi("il1", "db", "s_c1.l7'", (0, 0, 3))])),
    )
    case(
        "out_of_place",
        "OUT_OF_PLACE",
        _sets(("g_b1", "TLS", [_pi("op1", "c_a1", "s_c1", (0, 0, 3))])),
    )
    case(
        "redundancy",
        "REDUNDANCY",
        _sets(
            (
                "c_a1",
                "TLS",
                [
                    _pi("re1", "c_a1", "s_c1", (3, 3, 3), priority=0),
                    _pi("re2", "c_a1.l5", "web_1", (1, 1, 1), priority=1),
                ],
            )
        ),
    )
    case(
        "exception",
        "EXCEPTION",
        _sets(
            (
                "c_a1",
                "TLS",
                [
                    _pi(
                        "ex1", "c_a1.l5", "web_1", (0, 0, 3),
                        {"ip_src": "10.1.0.1", "ip_dst": "10.3.2.1", "p_dst": 443, "prt": "TCP"},
                        priority=0,
                    ),
                    _pi(
                        "ex2", "c_a1", "s_c1", (0, 3, 0),
                        {"ip_src": "10.1.0.0/16", "ip_dst": SUBNET_C_SERVERS},
                        priority=1,
                    ),
                ],
            )
        ),
    )

    def deny_at_g_c1(doc):
        doc["capabilities"]["g_c1"]["firewall"] = [{"action": "DENY", "selector": "*"}]

    case(
        "filtered",
        "FILTERED_CHANNEL",
        _sets(("c_a1", "IPsec", [_pi("fi1", "c_a1", "s_c1", (0, 0, 3))])),
        deny_at_g_c1,
    )

    def wifi_client(doc):
        doc["capabilities"]["c_c1"]["layer2"] = ["MACsec", "WPA2"]

    case(
        "l2",
        "L2",
        _sets(("c_c1", "WPA2", [_pi("l21", "c_c1", "s_c1", (0, 0, 3))])),
        wifi_client,
    )
    case(
        "asymmetric",
        "ASYMMETRIC_CHANNEL",
        _sets(
            ("c_a1", "IPsec", [_pi("as1", "c_a1", "s_c1", (3, 3, 3))]),
            ("s_c1", "IPsec", [_pi("as2", "s_c1", "c_a1", (1, 1, 1))]),
        ),
    )
    case(
        "cyclic",
        "CYCLIC_PATH",
        _sets(
            ("g_c1", "IPsec", [_pi("cy1", "g_c1", "g_c2", (0, 0, 3))]),
            ("g_c2", "IPsec", [_pi("cy2", "g_c2", "g_c3", (0, 0, 3))]),
            ("g_c3", "IPsec", [_pi("cy3", "g_c3", "g_c1", (0, 0, 3))]),
        ),
    )
    return cases


# cases whose union forms the reference multiset (one instance each)
MULTISET_CASES = (
    "inadequacy",
    "monitorability",
    "skewed",
    "non_enforceability",
    "shadowing",
    "correlation",
    "inclusion",
    "contradiction",
    "superfluous",
    "affinity",
    "alternative_path",
)

_CACHE: dict = {}


def case_documents() -> dict[str, tuple[str, dict]]:
    if not _CACHE:
        _CACHE.update(_case_docs())
    return copy.deepcopy(_CACHE)


def case_names() -> list[str]:
    return list(case_documents())


def case_scenario(name: str) -> tuple[str, Scenario]:
    """(expected anomaly kind name, scenario) for one case."""
    kind, doc = case_documents()[name]
    return kind, build_scenario(doc)


def network_scenario() -> Scenario:
    return build_scenario(reference_network())
