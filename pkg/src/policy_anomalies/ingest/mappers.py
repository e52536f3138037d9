"""Translate strongSwan, OpenVPN and SSH client excerpts into PIs.

Only the directives seen in small hand-written configs are understood;
anything else is skipped.  End-points are plain address strings
(``"192.168.1.1:1194"`` when a port is known), ready to be bound to
entities of a scenario.
"""

from __future__ import annotations

import ipaddress
import re
from dataclasses import dataclass, field
from typing import Mapping, Optional

from ..policy import Coefficients, PolicyImplementation
from ..traffic import Selector


class MappingError(ValueError):
    """The excerpt lacks something the mapping needs."""


class UnmappedCipherError(MappingError):
    def __init__(self, cipher: str):
        self.cipher = cipher
        super().__init__(f"unmapped cipher {cipher!r}: add it to the coefficient map")


# AES-256 with SHA-512 class suites, as used by all three tools.
DEFAULT_CIPHER_MAP: dict[str, tuple[int, int, int]] = {
    "aes256-sha512-modp2048": (5, 5, 5),
    "aes-256-cbc/sha-512": (5, 5, 5),
    "aes256-cbc/hmac-sha2-512": (5, 5, 5),
}


def _norm(cipher: str) -> str:
    return re.sub(r"\s+", "", cipher).lower()


@dataclass
class MappingContext:
    """Cipher table plus facts the excerpts do not carry."""

    coefficient_map: Mapping[str, object] = field(default_factory=lambda: dict(DEFAULT_CIPHER_MAP))
    client_address: Optional[str] = None

    def coefficients(self, cipher: str) -> Coefficients:
        table = {_norm(k): v for k, v in self.coefficient_map.items()}
        key = _norm(cipher)
        if key not in table:
            raise UnmappedCipherError(cipher)
        return Coefficients.of(table[key])


def _ctx(context, client_address=None) -> MappingContext:
    if context is None:
        context = MappingContext()
    elif isinstance(context, Mapping):
        context = MappingContext(coefficient_map=context)
    if client_address is not None:
        context = MappingContext(context.coefficient_map, client_address)
    return context


def _address(text: str, what: str) -> str:
    try:
        return str(ipaddress.ip_address(text))
    except ValueError:
        raise MappingError(f"{what}: {text!r} is not an IP address") from None


def _network(text: str, what: str) -> ipaddress.IPv4Network:
    try:
        return ipaddress.ip_network(text, strict=False)
    except ValueError:
        raise MappingError(f"{what}: {text!r} is not a subnet") from None


# ---------------------------------------------------------------------------
# strongSwan


def _ipsec_sections(text: str) -> list[tuple[str, dict[str, str]]]:
    sections: list[tuple[str, dict[str, str]]] = []
    current: Optional[dict[str, str]] = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split(None, 1)
        if head[0] in ("conn", "config", "ca"):
            name = head[1].strip() if len(head) > 1 else ""
            current = {}
            sections.append((f"{head[0]} {name}".strip(), current))
            continue
        if current is not None and "=" in line:
            key, _, value = line.partition("=")
            current[key.strip()] = value.strip()
    return sections


def map_strongswan(conf_text: str, context=None) -> list[PolicyImplementation]:
    """One IPsec PI per named ``conn`` block.

    Unnamed ``conn`` blocks and ``conn %default`` supply defaults for the
    blocks that follow.
    """
    ctx = _ctx(context)
    defaults: dict[str, str] = {}
    out = []
    for header, body in _ipsec_sections(conf_text):
        kind, _, name = header.partition(" ")
        if kind != "conn":
            continue
        if name in ("", "%default"):
            defaults.update(body)
            continue
        conf = {**defaults, **body}
        if not conf.get("left") or not conf.get("right"):
            raise MappingError(f"conn {name}: both left and right peers are required")
        left = _address(conf["left"], f"conn {name} left")
        right = _address(conf["right"], f"conn {name} right")
        cipher = conf.get("esp") or conf.get("ike")
        if not cipher:
            raise MappingError(f"conn {name}: no esp or ike proposal")
        lsub, rsub = conf.get("leftsubnet"), conf.get("rightsubnet")
        if lsub and rsub and _network(lsub, name) == _network(rsub, name):
            raise MappingError(f"conn {name}: left and right subnets are the same network")
        selector = Selector.build(
            ip_src=str(_network(lsub, name)) if lsub else "*",
            ip_dst=str(_network(rsub, name)) if rsub else "*",
        )
        out.append(
            PolicyImplementation(
                id=name,
                source=left,
                destination=right,
                technology="IPsec",
                coefficients=ctx.coefficients(cipher),
                selector=selector,
                gateways=(),
                deployed_at=left,
            )
        )
    return out


def strongswan_scheme(pi: PolicyImplementation) -> str:
    """end-to-end, site-to-site or remote-access, from the selector shape."""
    src_any = pi.selector.ip_src.is_full
    dst_any = pi.selector.ip_dst.is_full
    if src_any and dst_any:
        return "end-to-end"
    if not src_any and not dst_any:
        return "site-to-site"
    return "remote-access"


# ---------------------------------------------------------------------------
# OpenVPN


def _directives(text: str) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    for raw in text.splitlines():
        line = re.split(r"[#;]", raw, 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        out.setdefault(parts[0], []).append(" ".join(parts[1:]))
    return out


def _host_port(args: str, default_port: Optional[int]) -> tuple[str, Optional[int]]:
    """Pick the address out of ``remote`` arguments (``[name] host[:port] [port]``)."""
    tokens = args.split()
    for idx, tok in enumerate(tokens):
        host, _, port = tok.rpartition(":") if tok.count(":") == 1 else (tok, "", "")
        try:
            addr = str(ipaddress.ip_address(host))
        except ValueError:
            continue
        if port:
            return addr, int(port)
        if idx + 1 < len(tokens) and tokens[idx + 1].isdigit():
            return addr, int(tokens[idx + 1])
        return addr, default_port
    raise MappingError(f"remote {args!r}: no IP address")


def map_openvpn(client_text: str, server_text: Optional[str] = None, context=None, *, client_address=None) -> list[PolicyImplementation]:
    """The client's TLS tunnel to its ``remote`` server."""
    ctx = _ctx(context, client_address)
    client = _directives(client_text or "")
    if "remote" not in client:
        raise MappingError("OpenVPN client configuration has no remote directive")
    server = _directives(server_text or "")
    server_port = int(server["port"][0]) if server.get("port") else None
    host, port = _host_port(client["remote"][0], server_port or 1194)
    cipher, auth = client.get("cipher"), client.get("auth")
    if not cipher or not auth:
        raise MappingError("OpenVPN client configuration needs cipher and auth directives")
    src = f"{_address(ctx.client_address, 'client') if ctx.client_address else '*'}:*"
    dst = f"{host}:{port}"
    return [
        PolicyImplementation(
            id=f"openvpn_{host}",
            source=src,
            destination=dst,
            technology="TLS",
            coefficients=ctx.coefficients(f"{cipher[0]}/{auth[0]}"),
            selector=Selector(),
            gateways=(),
            deployed_at=src,
        )
    ]


# ---------------------------------------------------------------------------
# SSH


def _ssh_hosts(text: str) -> list[tuple[str, dict[str, list[str]]]]:
    hosts: list[tuple[str, dict[str, list[str]]]] = []
    current = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition(" ")
        if "=" in key:
            key, _, rest = key.partition("=")
            value = (rest + " " + value).strip()
        key = key.lower()
        value = value.strip().lstrip("=").strip()
        if key == "host":
            current = {}
            hosts.append((value, current))
        elif current is not None:
            current.setdefault(key, []).append(value)
    return hosts


def _forward(spec: str, server: str) -> Selector:
    """``LocalForward [bind:]port host:hostport`` as a selector.

    Bound traffic leaves the bind address towards the forwarded port; a
    loopback target means the server itself.
    """
    parts = spec.split()
    if len(parts) != 2:
        raise MappingError(f"LocalForward {spec!r}: expected a listen and a target part")
    listen, target = parts
    bind, _, _lport = listen.rpartition(":")
    thost, _, tport = target.rpartition(":")
    dst = server if thost and ipaddress.ip_address(thost).is_loopback else (thost or server)
    return Selector.build(
        ip_src=_address(bind, "LocalForward bind address") if bind else "*",
        ip_dst=_address(dst, "LocalForward target"),
        p_dst=int(tport),
        prt="TCP",
    )


def map_ssh(conf_text: str, context=None, *, client_address=None) -> list[PolicyImplementation]:
    """One SSH PI per ``Host`` block."""
    ctx = _ctx(context, client_address)
    out = []
    for name, opts in _ssh_hosts(conf_text):
        if not opts.get("hostname"):
            raise MappingError(f"Host {name}: missing HostName")
        server = _address(opts["hostname"][0], f"Host {name} HostName")
        port = int(opts["port"][0]) if opts.get("port") else 22
        if not opts.get("ciphers") or not opts.get("macs"):
            raise MappingError(f"Host {name}: Ciphers and MACs are required to rate the channel")
        cipher = f"{opts['ciphers'][0].split(',')[0]}/{opts['macs'][0].split(',')[0]}"
        selector = _forward(opts["localforward"][0], server) if opts.get("localforward") else Selector()
        src = f"{_address(ctx.client_address, 'client') if ctx.client_address else '*'}:*"
        out.append(
            PolicyImplementation(
                id=f"ssh_{name}",
                source=src,
                destination=f"{server}:{port}",
                technology="SSH",
                coefficients=ctx.coefficients(cipher),
                selector=selector,
                gateways=(),
                deployed_at=src,
            )
        )
    return out


MAPPERS = {"strongswan": map_strongswan, "openvpn": map_openvpn, "ssh": map_ssh}

__all__ = [
    "DEFAULT_CIPHER_MAP",
    "MAPPERS",
    "MappingContext",
    "MappingError",
    "UnmappedCipherError",
    "map_openvpn",
    "map_ssh",
    "map_strongswan",
    "strongswan_scheme",
]
