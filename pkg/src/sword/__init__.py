"""Spectral moment change-point detection for dynamic graphs."""

from .detector import ConfigError, DetectorConfig, ScoreSeries, WindowSpec, detect_stream, score_stream
from .evaluate import match_detections
from .graph import GraphSnapshot, load_snapshot_stream
from .kpm import (
    MomentVector,
    ProbeSet,
    dos_histogram,
    estimate_moments,
    estimate_stream_moments,
    exact_moments,
    gamma_discrepancy,
    moment_distance,
)
from .scpd import CascadeConfig, scpd_score_stream
from .synth import ScenarioSpec, generate_sequence

__version__ = "0.1.0"

__all__ = [
    "CascadeConfig",
    "ConfigError",
    "DetectorConfig",
    "GraphSnapshot",
    "MomentVector",
    "ProbeSet",
    "ScenarioSpec",
    "ScoreSeries",
    "WindowSpec",
    "detect_stream",
    "dos_histogram",
    "estimate_moments",
    "estimate_stream_moments",
    "exact_moments",
    "gamma_discrepancy",
    "generate_sequence",
    "load_snapshot_stream",
    "match_detections",
    "moment_distance",
    "scpd_score_stream",
    "score_stream",
]
