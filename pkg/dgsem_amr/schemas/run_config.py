"""Run configuration schemas.

Per-run numerical parameters, validated with pydantic. Process-level
settings (logging, output root) live in :mod:`dgsem_amr.config`.
"""

from enum import Enum
from typing import Any, Dict, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class FluxMode(str, Enum):
    """Treatment of 2:1 nonconforming interfaces."""

    ES = "es"
    MORTAR = "mortar"


class CaseName(str, Enum):
    """Benchmark cases shipped with the solver."""

    VORTEX = "vortex"
    DMR = "dmr"
    JET = "jet"


class OEConfig(BaseModel):
    """Oscillation-eliminating damping parameters."""

    model_config = ConfigDict(extra="forbid")

    enabled: bool = True
    s: float = 0.2
    c_oe: float = 0.1

    @field_validator("s")
    @classmethod
    def validate_s(cls, v: float) -> float:
        """Validate the scaling parameter lies in (0, 1]."""
        if not 0 < v <= 1:
            raise ValueError("OE scaling parameter s must be in (0, 1]")
        return v

    @field_validator("c_oe")
    @classmethod
    def validate_c_oe(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("OE threshold c_oe must be positive")
        return v


class AmrConfig(BaseModel):
    """Adaptive refinement thresholds and cadence."""

    model_config = ConfigDict(extra="forbid")

    enabled: bool = True
    c_ref: float = 0.1
    c_crs: float = 0.1
    max_level: int = 0
    interval: int = 10

    @field_validator("c_ref", "c_crs")
    @classmethod
    def validate_thresholds(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("AMR thresholds must be positive")
        return v

    @field_validator("max_level")
    @classmethod
    def validate_max_level(cls, v: int) -> int:
        if not 0 <= v <= 8:
            raise ValueError("AMR max_level must be between 0 and 8")
        return v

    @field_validator("interval")
    @classmethod
    def validate_interval(cls, v: int) -> int:
        if v < 1:
            raise ValueError("AMR interval must be at least 1")
        return v

    @model_validator(mode="after")
    def validate_threshold_order(self) -> "AmrConfig":
        """Require c_ref >= c_crs."""
        if self.c_ref < self.c_crs:
            raise ValueError("AMR thresholds must satisfy c_ref >= c_crs")
        return self

    @property
    def active(self) -> bool:
        """True when adaptation can change the mesh."""
        return self.enabled and self.max_level > 0


class StepConfig(BaseModel):
    """Time step control."""

    model_config = ConfigDict(extra="forbid")

    cfl: float = 0.8
    pp_check: bool = True
    pp_limit: bool = False  # Clip CFL steps to the cell-average positivity bound
    fixed_dt: Optional[float] = None

    @field_validator("cfl")
    @classmethod
    def validate_cfl(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("CFL number must be positive")
        return v

    @field_validator("fixed_dt")
    @classmethod
    def validate_fixed_dt(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and v <= 0:
            raise ValueError("Fixed time step must be positive")
        return v


# Defaults applied by RunConfig.for_case before user overrides
CASE_DEFAULTS: Dict[CaseName, Dict[str, Any]] = {
    CaseName.VORTEX: {
        "degree": 3,
        "flux": FluxMode.MORTAR,
        "nx": 10,
        "ny": 10,
        "final_time": 0.2,
        "limiter_enabled": False,
        "oe": {"enabled": False},
        "amr": {"enabled": False, "max_level": 0},
    },
    CaseName.DMR: {
        "degree": 2,
        "flux": FluxMode.MORTAR,
        "nx": 32,
        "ny": 8,
        "final_time": 0.2,
        "amr": {"enabled": True, "max_level": 3, "c_ref": 0.05, "c_crs": 0.05},
    },
    CaseName.JET: {
        "degree": 3,
        "flux": FluxMode.MORTAR,
        "nx": 38,
        "ny": 75,
        "final_time": 0.001,
        "amr": {"enabled": True, "max_level": 2, "c_ref": 0.1, "c_crs": 0.1},
        "step": {"pp_limit": True},  # Inflow ghost speeds outrun the CFL estimate
    },
}

# DMR thresholds depend on the degree
DMR_THRESHOLDS = {1: 0.2, 2: 0.05}


class RunConfig(BaseModel):
    """Complete parameter set of one simulation run."""

    model_config = ConfigDict(extra="forbid", use_enum_values=False)

    case: CaseName = CaseName.VORTEX
    degree: int = 3
    flux: FluxMode = FluxMode.MORTAR
    nx: int = 10
    ny: int = 10
    uniform_levels: int = 0  # Uniform refinements of the base mesh (vortex study)
    final_time: float = 0.2
    gamma: float = 1.4
    limiter_enabled: bool = True
    oe: OEConfig = Field(default_factory=OEConfig)
    amr: AmrConfig = Field(default_factory=AmrConfig)
    step: StepConfig = Field(default_factory=StepConfig)
    max_steps: Optional[int] = None
    output_dir: Optional[str] = None
    snapshot_interval: int = 0  # Steps between field snapshots; 0 writes final only
    write_vtu: bool = False

    @field_validator("degree")
    @classmethod
    def validate_degree(cls, v: int) -> int:
        """Validate polynomial degree is in the supported range."""
        if not 1 <= v <= 8:
            raise ValueError("Polynomial degree must be between 1 and 8")
        return v

    @field_validator("nx", "ny")
    @classmethod
    def validate_counts(cls, v: int) -> int:
        if v < 1:
            raise ValueError("Element counts must be at least 1")
        return v

    @field_validator("uniform_levels", "snapshot_interval")
    @classmethod
    def validate_non_negative(cls, v: int) -> int:
        if v < 0:
            raise ValueError("Value must be non-negative")
        return v

    @field_validator("final_time")
    @classmethod
    def validate_final_time(cls, v: float) -> float:
        if v < 0:
            raise ValueError("Final time must be non-negative")
        return v

    @field_validator("gamma")
    @classmethod
    def validate_gamma(cls, v: float) -> float:
        if v <= 1:
            raise ValueError("gamma must be greater than 1")
        return v

    @field_validator("max_steps")
    @classmethod
    def validate_max_steps(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v < 0:
            raise ValueError("max_steps must be non-negative")
        return v

    @classmethod
    def for_case(cls, case: "CaseName | str", **overrides: Any) -> "RunConfig":
        """Build a config from the case defaults with ``overrides`` applied.

        Nested sections (``oe``, ``amr``, ``step``) in ``overrides`` are merged
        key by key into the defaults rather than replacing them.
        """
        case = CaseName(case)
        data: Dict[str, Any] = {"case": case}
        for key, value in CASE_DEFAULTS[case].items():
            data[key] = dict(value) if isinstance(value, dict) else value
        for key, value in overrides.items():
            if isinstance(value, dict) and isinstance(data.get(key), dict):
                data[key] = {**data[key], **value}
            else:
                data[key] = value

        degree = int(data.get("degree", 3))
        if case is CaseName.DMR and degree in DMR_THRESHOLDS:
            amr_overrides = overrides.get("amr", {}) or {}
            threshold = DMR_THRESHOLDS[degree]
            amr = dict(data.get("amr", {}))
            for key in ("c_ref", "c_crs"):
                if key not in amr_overrides:
                    amr[key] = threshold
            data["amr"] = amr

        if case is CaseName.VORTEX:
            step = dict(data.get("step", {}) or {})
            if step.get("fixed_dt") is None:
                level = int(data.get("uniform_levels", 0))
                step["fixed_dt"] = vortex_time_step(level)
            data["step"] = step

        return cls(**data)


def vortex_time_step(level: int) -> float:
    """Fixed step of the vortex convergence schedule at refinement ``level``."""
    return 0.2 / (20 * 2**level)
