"""Simulation driver: time loop with adaptation cadence and diagnostics."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from ..cases import sample_initial_condition, setup_case
from ..cases.base import CaseSetup
from ..config import Settings, get_settings
from ..mesh.amr import Marks, adapt_mesh, mark_elements, transfer_solution
from ..mesh.topology import MeshTopology
from ..numerics.dgsem import Discretization
from ..numerics.euler import GasModel, pressure
from ..numerics.reference_ops import ReferenceOperators, get_operators
from ..numerics.timestepping import (
    POSITIVITY_DT_SAFETY,
    StageOptions,
    compute_dt,
    conserved_totals,
    positivity_dt,
    pp_cfl_check,
    ssprk3_step,
    total_entropy,
)
from ..schemas.run_config import FluxMode, RunConfig
from ..utils.logger import get_logger, log_elapsed
from .output_writer import DiagnosticsRow, OutputWriter

logger = get_logger(__name__)

# Relative slack when deciding that the final time has been reached
TIME_TOL = 1e-12


@dataclass
class SimulationResult:
    """Final state of a run and its per-step diagnostics."""

    case: CaseSetup
    mesh: MeshTopology
    ops: ReferenceOperators
    U: np.ndarray
    t: float
    steps: int
    diagnostics: List[DiagnosticsRow] = field(default_factory=list)
    output_files: List[Path] = field(default_factory=list)


class SimulationService:
    """Run one configured case from setup to final time."""

    def __init__(self, cfg: RunConfig, settings: Optional[Settings] = None):
        """Initialize the service.

        Args:
            cfg: Validated run configuration
            settings: Process settings (defaults to a fresh ``Settings``)
        """
        self.cfg = cfg
        self.settings = settings or get_settings()
        self.gas = GasModel(cfg.gamma)
        self.ops = get_operators(cfg.degree)
        self.eps = self.settings.positivity_eps

    @property
    def output_dir(self) -> Path:
        if self.cfg.output_dir:
            return Path(self.cfg.output_dir)
        return self.settings.output_path

    def diagnostics(
        self, disc: Discretization, U: np.ndarray, t: float, dt: float, margin: float
    ) -> DiagnosticsRow:
        arrays = disc.arrays
        totals = conserved_totals(arrays, U, self.ops)
        return DiagnosticsRow(
            t=t,
            dt=dt,
            mass=float(totals[0]),
            mom_x=float(totals[1]),
            mom_y=float(totals[2]),
            energy=float(totals[3]),
            entropy=total_entropy(arrays, U, self.ops, self.gas),
            min_rho=float(U[..., 0].min()),
            min_p=float(np.min(pressure(U, self.gas))),
            n_elements=arrays.n_elements,
            pp_margin=margin,
        )

    def initial_adaptation(
        self, case: CaseSetup, mesh: MeshTopology, U: np.ndarray
    ) -> np.ndarray:
        """Refine toward the initial data, re-sampling it after each pass."""
        for _ in range(self.cfg.amr.max_level):
            marks = mark_elements(mesh, U, self.cfg.amr, self.ops, self.gas)
            if not marks.refine:
                break
            mesh, plan = adapt_mesh(mesh, Marks(refine=marks.refine))
            if plan.is_identity:
                break
            U = sample_initial_condition(case, mesh, self.gas)
        return U

    def adapt(self, mesh: MeshTopology, U: np.ndarray) -> np.ndarray:
        old_ids = mesh.arrays().ids.copy()
        with log_elapsed(logger, "Adaptation", logging.DEBUG):
            marks = mark_elements(mesh, U, self.cfg.amr, self.ops, self.gas)
            mesh, plan = adapt_mesh(mesh, marks)
        if plan.is_identity:
            return U
        return transfer_solution(plan, old_ids, U, mesh, self.ops, self.gas, self.eps)

    def run(self, write: bool = True) -> SimulationResult:
        """Advance to ``final_time`` (or ``max_steps``) and optionally write outputs.

        Raises:
            PositivityFailureError: If a cell average becomes inadmissible.
            InadmissibleStateError: If a nodal state is inadmissible without limiting.
        """
        cfg = self.cfg
        case, mesh, U = setup_case(cfg, self.gas)
        if cfg.amr.active:
            U = self.initial_adaptation(case, mesh, U)

        disc = Discretization(
            mesh,
            self.ops,
            cfg.flux,
            case.boundary_conditions,
            self.gas,
            self.eps,
            monitor_entropy=self.settings.debug and cfg.flux is FluxMode.ES,
        )
        options = StageOptions(
            limiter_enabled=cfg.limiter_enabled,
            oe=cfg.oe,
            eps=self.eps,
            debug=self.settings.debug,
        )
        writer = OutputWriter(self.output_dir) if write else None
        result = SimulationResult(
            case=case, mesh=mesh, ops=self.ops, U=U, t=0.0, steps=0
        )
        result.diagnostics.append(self.diagnostics(disc, U, 0.0, 0.0, float("nan")))

        t = 0.0
        step = 0
        final = cfg.final_time
        logger.info(
            "Starting %s run to t=%.6g on %d elements",
            case.name,
            final,
            mesh.n_active,
        )
        while final - t > TIME_TOL * max(1.0, final):
            if cfg.max_steps is not None and step >= cfg.max_steps:
                break
            dt = compute_dt(disc.arrays, U, cfg.step, self.ops, self.gas)
            if cfg.step.pp_limit and cfg.step.fixed_dt is None:
                bound = POSITIVITY_DT_SAFETY * positivity_dt(disc, U, t)
                if bound < dt:
                    logger.debug("Step clipped to positivity bound %.3e", bound)
                    dt = bound
            dt = min(dt, final - t)
            margin = float("nan")
            if cfg.step.pp_check:
                margin = pp_cfl_check(disc, U, dt, t)
            U, report = ssprk3_step(disc, U, dt, t, options)
            t += dt
            step += 1
            if cfg.amr.active and step % cfg.amr.interval == 0:
                U = self.adapt(mesh, U)
            row = self.diagnostics(disc, U, t, dt, margin)
            result.diagnostics.append(row)
            logger.debug(
                "step=%d t=%.6e dt=%.3e min_rho=%.3e min_p=%.3e troubled=%d limited=%d",
                step,
                t,
                dt,
                row.min_rho,
                row.min_p,
                report.n_troubled,
                report.n_limited,
            )
            if writer and cfg.snapshot_interval and step % cfg.snapshot_interval == 0:
                result.output_files += writer.write_snapshot(
                    mesh,
                    U,
                    self.ops,
                    f"{case.name}_{step:06d}",
                    self.gas,
                    t,
                    cfg.write_vtu,
                )

        result.U, result.t, result.steps = U, t, step
        logger.info(
            "Finished %s run: t=%.6g steps=%d elements=%d",
            case.name,
            t,
            step,
            mesh.n_active,
        )
        if writer is not None:
            result.output_files += write_outputs(
                result, writer, cfg, self.settings, self.gas
            )
        return result


def write_outputs(
    result: SimulationResult,
    writer: OutputWriter,
    cfg: RunConfig,
    settings: Settings,
    gas: GasModel,
) -> List[Path]:
    """Diagnostics CSV, final snapshot and mesh; DMR runs add a density slice."""
    paths = [
        writer.write_diagnostics(result.diagnostics, settings.diagnostics_filename)
    ]
    name = f"{result.case.name}_final"
    paths += writer.write_snapshot(
        result.mesh, result.U, result.ops, name, gas, result.t, cfg.write_vtu
    )
    paths.append(writer.write_mesh_vtk(result.mesh, f"{result.case.name}_mesh"))
    if result.case.name == "dmr":
        paths.append(writer.write_density_slice(result.mesh, result.U, result.ops, 0.1))
    for path in paths:
        logger.info("Output written: %s", path)
    return paths


def run_simulation(
    cfg: RunConfig, settings: Optional[Settings] = None, write: bool = True
) -> SimulationResult:
    """Run ``cfg`` with a fresh ``SimulationService``."""
    with log_elapsed(logger, f"Run of case {cfg.case.value}"):
        return SimulationService(cfg, settings).run(write=write)
