"""Simulation, convergence and output services."""

from .convergence import compute_l2_error, convergence_rates, run_convergence_study
from .output_writer import ConvergenceRow, DiagnosticsRow, OutputWriter
from .simulation_service import (
    SimulationResult,
    SimulationService,
    run_simulation,
    write_outputs,
)

__all__ = [
    "ConvergenceRow",
    "DiagnosticsRow",
    "OutputWriter",
    "SimulationResult",
    "SimulationService",
    "compute_l2_error",
    "convergence_rates",
    "run_convergence_study",
    "run_simulation",
    "write_outputs",
]
