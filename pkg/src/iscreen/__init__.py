"""Iterative sure independence screening for high-dimensional linear models."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    AlgorithmConfig,
    Dataset,
    PenaltyKind,
    PenaltySpec,
    RateConstants,
    Screening,
    Selection,
    StopReason,
    Trajectory,
    TrueModel,
    standardize,
)
from .pipeline import Preset, check_sure_screening, preset_config, run, suggest_schedule  # noqa: E402

__all__ = [
    "AlgorithmConfig",
    "Dataset",
    "PenaltyKind",
    "PenaltySpec",
    "Preset",
    "RateConstants",
    "Screening",
    "Selection",
    "StopReason",
    "Trajectory",
    "TrueModel",
    "check_sure_screening",
    "preset_config",
    "run",
    "standardize",
    "suggest_schedule",
]
