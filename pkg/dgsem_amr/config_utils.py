"""Run configuration utilities."""

from pathlib import Path
from typing import Any, Mapping, Optional

from dotenv import dotenv_values

from .exceptions import ConfigurationError
from .schemas.run_config import AmrConfig, CaseName, OEConfig, RunConfig, StepConfig

# Nested sections of RunConfig addressable as ``<section>.<key>`` or
# ``<section>_<key>`` in a flat file
NESTED_SECTIONS = {"oe": OEConfig, "amr": AmrConfig, "step": StepConfig}


def load_run_config_file(path: "str | Path") -> dict[str, Optional[str]]:
    """Read a flat ``key=value`` run file.

    Args:
        path: File to read

    Returns:
        Raw string values keyed by lower-cased key.

    Raises:
        ConfigurationError: If the file does not exist.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"Run configuration file not found: {path}")
    return {key.lower(): value for key, value in dotenv_values(path).items()}


def _split_key(key: str) -> tuple[Optional[str], str]:
    key = key.strip().lower().replace("-", "_")
    if "." in key:
        section, _, name = key.partition(".")
        return section, name
    for section in NESTED_SECTIONS:
        prefix = section + "_"
        if key.startswith(prefix) and key[len(prefix) :] in NESTED_SECTIONS[
            section
        ].model_fields:
            return section, key[len(prefix) :]
    return None, key


def _nest(values: Mapping[str, Any]) -> dict[str, Any]:
    nested: dict[str, Any] = {}
    for key, value in values.items():
        if value is None or value == "":
            continue
        section, name = _split_key(key)
        if section is None:
            nested[name] = value
        else:
            nested.setdefault(section, {})[name] = value
    return nested


def build_run_config(
    file_values: Optional[Mapping[str, Any]] = None,
    cli_overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """Merge file values, then command-line overrides, into a ``RunConfig``.

    The case defaults of ``RunConfig.for_case`` apply beneath both layers.

    Raises:
        ConfigurationError: On unknown keys or an unknown case name.
        pydantic.ValidationError: If a value fails field validation.
    """
    merged = _nest(file_values or {})
    for key, value in _nest(cli_overrides or {}).items():
        if isinstance(value, dict):
            merged[key] = {**merged.get(key, {}), **value}
        else:
            merged[key] = value

    unknown = sorted(key for key in merged if key not in RunConfig.model_fields)
    if unknown:
        raise ConfigurationError(f"Unknown configuration keys: {', '.join(unknown)}")
    for section in NESTED_SECTIONS:
        extra = sorted(
            set(merged.get(section, {})) - set(NESTED_SECTIONS[section].model_fields)
        )
        if extra:
            names = ", ".join(f"{section}.{name}" for name in extra)
            raise ConfigurationError(f"Unknown configuration keys: {names}")

    case = merged.pop("case", CaseName.VORTEX)
    try:
        case = CaseName(str(case.value if isinstance(case, CaseName) else case).lower())
    except ValueError as e:
        raise ConfigurationError(f"Unknown case: {case}") from e
    return RunConfig.for_case(case, **merged)


def validate_configuration(cfg: RunConfig) -> tuple[bool, list[str]]:
    """Validate cross-field requirements that field validators cannot express.

    Args:
        cfg: Run configuration to check

    Returns:
        Tuple of (is_valid, list of error messages).
    """
    errors: list[str] = []

    if cfg.case is CaseName.VORTEX:
        if cfg.nx % 2 or cfg.ny % 2:
            errors.append("Vortex checkerboard mesh needs even nx and ny")
        if cfg.amr.active:
            errors.append("Vortex case runs on fixed meshes; disable AMR")
    if cfg.step.fixed_dt is not None and cfg.final_time > 0:
        steps = cfg.final_time / cfg.step.fixed_dt
        if cfg.max_steps is None and steps > 1e7:
            errors.append(f"Fixed time step requires {steps:.3g} steps")

    return len(errors) == 0, errors


def get_safe_config_dict(cfg: RunConfig) -> dict[str, Any]:
    """Flatten a run configuration into dotted keys for logging.

    Args:
        cfg: Run configuration to convert

    Returns:
        Dictionary of plain values keyed like ``amr.c_ref``.
    """
    result: dict[str, Any] = {}
    for key, value in cfg.model_dump(mode="json").items():
        if isinstance(value, dict):
            for name, inner in value.items():
                result[f"{key}.{name}"] = inner
        else:
            result[key] = value
    return result


def print_configuration_summary(cfg: RunConfig) -> None:
    """Print configuration summary to stdout.

    Args:
        cfg: Run configuration to print
    """
    print("Run Configuration Summary:")
    print(f"  Case: {cfg.case.value}")
    print(f"  Degree: {cfg.degree}")
    print(f"  Flux: {cfg.flux.value}")
    print(f"  Base Mesh: {cfg.nx} x {cfg.ny} (uniform levels {cfg.uniform_levels})")
    print(f"  Final Time: {cfg.final_time}")
    dt = cfg.step.fixed_dt if cfg.step.fixed_dt is not None else f"CFL {cfg.step.cfl}"
    print(f"  Time Step: {dt}")
    print(f"  Limiter: {'on' if cfg.limiter_enabled else 'off'}")
    oe = f"s={cfg.oe.s} c_oe={cfg.oe.c_oe}" if cfg.oe.enabled else "off"
    print(f"  OE: {oe}")
    if cfg.amr.active:
        print(
            f"  AMR: max_level={cfg.amr.max_level} c_ref={cfg.amr.c_ref} "
            f"c_crs={cfg.amr.c_crs} interval={cfg.amr.interval}"
        )
    else:
        print("  AMR: off")
    print(f"  Output: {cfg.output_dir or '(settings default)'}")
