"""Detection, classification and resolution of communication protection policy anomalies."""

from .anomalies import (
    AnalysisResult,
    AnalysisStats,
    Anomaly,
    AnomalyKind,
    EffectCategory,
    InfoCategory,
    run_analysis,
)
from .network import EntityForest, NetworkEntity, TopologyGraph, CapabilityProfile, FirewallRule
from .policy import Coefficients, PolicyImplementation, PISet, least_upper_bound_pi
from .scenario import Scenario, ScenarioError, load_scenario, parse_scenario, serialize_scenario
from .traffic import FieldSet, Relation, Selector
from .resolution import Action, Resolution, VerificationReport, apply_resolution, suggest, verify_resolution
from .report import ReportDocument, emit_dot, emit_report, parse_report
from .ingest import GenerationParams, generate_scenario, map_openvpn, map_ssh, map_strongswan

__version__ = "0.1.0"

__all__ = [
    "Action",
    "GenerationParams",
    "ReportDocument",
    "Resolution",
    "VerificationReport",
    "apply_resolution",
    "emit_dot",
    "emit_report",
    "generate_scenario",
    "map_openvpn",
    "map_ssh",
    "map_strongswan",
    "parse_report",
    "suggest",
    "verify_resolution",
    "AnalysisResult",
    "AnalysisStats",
    "Anomaly",
    "AnomalyKind",
    "CapabilityProfile",
    "Coefficients",
    "EffectCategory",
    "EntityForest",
    "FieldSet",
    "FirewallRule",
    "InfoCategory",
    "NetworkEntity",
    "PISet",
    "PolicyImplementation",
    "Relation",
    "Scenario",
    "ScenarioError",
    "Selector",
    "TopologyGraph",
    "least_upper_bound_pi",
    "load_scenario",
    "parse_scenario",
    "run_analysis",
    "serialize_scenario",
]
