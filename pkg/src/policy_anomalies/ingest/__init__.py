"""Scenario documents, configuration excerpts and synthetic scenarios."""

from ..scenario import ScenarioError, load_scenario, parse_scenario, serialize_scenario
from .generator import GenerationError, GenerationParams, generate_scenario, manifest_recall
from .mappers import (
    MappingContext,
    MappingError,
    UnmappedCipherError,
    map_openvpn,
    map_ssh,
    map_strongswan,
)

__all__ = [
    "GenerationError",
    "GenerationParams",
    "MappingContext",
    "MappingError",
    "ScenarioError",
    "UnmappedCipherError",
    "generate_scenario",
    "load_scenario",
    "manifest_recall",
    "map_openvpn",
    "map_ssh",
    "map_strongswan",
    "parse_scenario",
    "serialize_scenario",
]
