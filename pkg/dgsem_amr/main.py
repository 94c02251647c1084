"""Command-line entry point."""

import argparse
import sys
from typing import Any, Optional, Sequence

from pydantic import ValidationError

from ._version import __version__
from .config import Settings, get_settings
from .config_utils import (
    build_run_config,
    get_safe_config_dict,
    load_run_config_file,
    print_configuration_summary,
    validate_configuration,
)
from .exceptions import ConfigurationError, PositivityFailureError, SolverError
from .schemas.run_config import CaseName, FluxMode, RunConfig
from .services.convergence import run_convergence_study
from .services.output_writer import OutputWriter
from .services.simulation_service import run_simulation
from .utils.logger import configure_root_logger, get_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_SOLVER_ERROR = 1
EXIT_POSITIVITY_FAILURE = 2
EXIT_CONFIGURATION_ERROR = 3

# Vortex convergence study: uniform levels, degrees and both interface fluxes
STUDY_LEVELS = (0, 1, 2, 3)
STUDY_DEGREES = (1, 2, 3)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="solver",
        description="Positivity-preserving entropy-stable DGSEM for 2D Euler with AMR",
    )
    parser.add_argument("--config", help="Flat key=value run configuration file")
    parser.add_argument("--case", choices=[c.value for c in CaseName])
    parser.add_argument("--flux", choices=[f.value for f in FluxMode])
    parser.add_argument("--degree", type=int)
    parser.add_argument("--cfl", type=float)
    parser.add_argument("--tfinal", type=float)
    parser.add_argument("--out", help="Output directory")
    parser.add_argument(
        "--study",
        action="store_true",
        help="Run the vortex convergence study and write convergence.csv",
    )
    parser.add_argument("--version", action="version", version=__version__)
    return parser


def cli_overrides(args: argparse.Namespace) -> dict[str, Any]:
    """Map parsed arguments onto ``RunConfig`` keys, skipping unset ones."""
    mapping = {
        "case": args.case,
        "flux": args.flux,
        "degree": args.degree,
        "step.cfl": args.cfl,
        "final_time": args.tfinal,
        "output_dir": args.out,
    }
    return {key: value for key, value in mapping.items() if value is not None}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Build and cross-validate the run configuration.

    Raises:
        ConfigurationError: If the configuration is unusable.
    """
    file_values = load_run_config_file(args.config) if args.config else {}
    overrides = cli_overrides(args)
    if args.study:
        overrides.setdefault("case", CaseName.VORTEX.value)
    cfg = build_run_config(file_values, overrides)
    is_valid, errors = validate_configuration(cfg)
    if not is_valid:
        raise ConfigurationError("; ".join(errors))
    return cfg


def run(cfg: RunConfig, settings: Settings, study: bool) -> None:
    logger.debug("Run configuration: %s", get_safe_config_dict(cfg))
    if study:
        rows = run_convergence_study(
            cfg, STUDY_LEVELS, STUDY_DEGREES, list(FluxMode), settings=settings
        )
        out = cfg.output_dir or settings.output_dir
        OutputWriter(out).write_convergence_table(rows)
        return
    result = run_simulation(cfg, settings=settings)
    logger.info(
        "Completed %s: t=%.6g steps=%d files=%d",
        result.case.name,
        result.t,
        result.steps,
        len(result.output_files),
    )


def report_error(error: Exception, kind: str) -> None:
    """Write the one-line machine-parsable error record to stderr."""
    message = " ".join(str(error).split())
    print(f"ERROR kind={kind} message={message}", file=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run, and map failures onto exit codes."""
    args = build_parser().parse_args(argv)
    settings = get_settings()
    configure_root_logger(settings.log_level)
    logger.info("Starting %s v%s", settings.app_name, __version__)

    try:
        cfg = resolve_config(args)
        print_configuration_summary(cfg)
        run(cfg, settings, args.study)
    except PositivityFailureError as e:
        logger.error("Positivity failure: %s", e)
        report_error(e, e.kind)
        return EXIT_POSITIVITY_FAILURE
    except ConfigurationError as e:
        report_error(e, e.kind)
        return EXIT_CONFIGURATION_ERROR
    except ValidationError as e:
        report_error(e, "configuration_error")
        return EXIT_CONFIGURATION_ERROR
    except SolverError as e:
        logger.error("Solver error: %s", e)
        report_error(e, e.kind)
        return EXIT_SOLVER_ERROR

    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
