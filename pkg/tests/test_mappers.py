from pathlib import Path

import pytest

from policy_anomalies.ingest.mappers import (
    MappingContext,
    MappingError,
    UnmappedCipherError,
    map_openvpn,
    map_ssh,
    map_strongswan,
)
from policy_anomalies.policy import Coefficients, PolicyImplementation
from policy_anomalies.traffic import Selector

CONFIGS = Path(__file__).parent / "data" / "configs"


def text(name):
    return (CONFIGS / name).read_text()


def fields(pi):
    return (pi.source, pi.destination, pi.technology, pi.coefficients.to_spec(), pi.selector.to_spec(), list(pi.gateways))


def test_site_to_site():
    (pi,) = map_strongswan(text("strongswan_net_net.conf"))
    assert fields(pi) == (
        "192.168.0.1", "192.168.0.2", "IPsec", [5, 5, 5],
        Selector.build("10.1.0.0/16", "*", "10.2.0.0/16").to_spec(), [],
    )


def test_end_to_end_has_a_wildcard_selector():
    (pi,) = map_strongswan(text("strongswan_host_host.conf"))
    assert fields(pi) == ("192.168.0.100", "192.168.0.200", "IPsec", [5, 5, 5], "*", [])


def test_remote_access_selects_the_remote_subnet():
    (pi,) = map_strongswan(text("strongswan_home.conf"))
    # the listing's rightsubnet, not the network printed beside it
    assert pi.selector == Selector.build(ip_dst="10.1.0.0/16")
    assert (pi.source, pi.destination) == ("192.168.0.100", "192.168.0.1")


def test_openvpn_tunnel():
    (pi,) = map_openvpn(text("openvpn_client.conf"), text("openvpn_server.conf"), client_address="192.168.1.100")
    assert fields(pi) == ("192.168.1.100:*", "192.168.1.1:1194", "TLS", [5, 5, 5], "*", [])


def test_ssh_forward_selector():
    (pi,) = map_ssh(text("ssh_client.conf"), client_address="192.168.2.100")
    assert (pi.source, pi.destination, pi.technology) == ("192.168.2.100:*", "192.168.2.1:22022", "SSH")
    assert pi.selector == Selector.build("10.0.0.3", "*", "192.168.2.1", 3306, "TCP")


def test_ssh_without_forward_is_a_wildcard():
    conf = text("ssh_client.conf").split("#SSH tunnel setting")[0]
    (pi,) = map_ssh(conf, client_address="192.168.2.100")
    assert pi.selector == Selector()


def test_ssh_needs_a_hostname():
    conf = "\n".join(line for line in text("ssh_client.conf").splitlines() if not line.startswith("HostName"))
    with pytest.raises(MappingError, match="HostName"):
        map_ssh(conf)


def test_openvpn_needs_the_client_remote():
    with pytest.raises(MappingError, match="remote"):
        map_openvpn(text("openvpn_server.conf"))


def test_unmapped_cipher_is_explicit():
    with pytest.raises(UnmappedCipherError):
        map_openvpn(text("openvpn_client.conf").replace("AES-256-CBC", "BF-CBC"), client_address="10.0.0.1")


def test_custom_cipher_table():
    ctx = MappingContext({"aes256-sha512-modp2048": [3, 3, 4]})
    (pi,) = map_strongswan(text("strongswan_host_host.conf"), ctx)
    assert pi.coefficients == Coefficients.of((3, 3, 4))


def test_strongswan_errors():
    conf = text("strongswan_net_net.conf")
    with pytest.raises(MappingError):
        map_strongswan(conf.replace("right=192.168.0.2\n", ""))
    with pytest.raises(MappingError, match="same network"):
        map_strongswan(conf.replace("10.2.0.0/16", "10.1.0.0/16"))


@pytest.mark.parametrize(
    "mapper",
    [
        lambda: map_strongswan(text("strongswan_net_net.conf")),
        lambda: map_openvpn(text("openvpn_client.conf"), client_address="192.168.1.100"),
        lambda: map_ssh(text("ssh_client.conf"), client_address="192.168.2.100"),
    ],
)
def test_mapping_is_pure_and_round_trips(mapper):
    first, second = mapper(), mapper()
    assert first == second
    for pi in first:
        assert PolicyImplementation.from_spec(pi.to_spec()) == pi
