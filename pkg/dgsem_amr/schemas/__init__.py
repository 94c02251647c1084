"""Pydantic schemas for run configuration."""

from .run_config import (
    AmrConfig,
    CaseName,
    FluxMode,
    OEConfig,
    RunConfig,
    StepConfig,
    vortex_time_step,
)

__all__ = [
    "AmrConfig",
    "CaseName",
    "FluxMode",
    "OEConfig",
    "RunConfig",
    "StepConfig",
    "vortex_time_step",
]
