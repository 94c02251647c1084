"""Solver exception hierarchy."""

from typing import Optional


class SolverError(Exception):
    """Base exception for solver errors."""

    kind = "solver_error"


class UnsupportedDegreeError(SolverError, ValueError):
    """Raised when a polynomial degree outside the supported range is requested."""

    kind = "unsupported_degree"


class InadmissibleStateError(SolverError, ValueError):
    """Raised when a state has nonpositive density, pressure or non-finite entries."""

    kind = "inadmissible_state"


class MeshError(SolverError, ValueError):
    """Raised on invalid mesh construction, geometry or connectivity."""

    kind = "mesh_error"


class ConfigurationError(SolverError, ValueError):
    """Raised when a run configuration cannot be used."""

    kind = "configuration_error"


class PositivityFailureError(SolverError):
    """Raised when a cell average or interpolated trace cannot be made admissible.

    The string form is a single machine-parsable line.
    """

    kind = "positivity_failure"

    def __init__(
        self,
        context: str,
        element: Optional[int] = None,
        min_rho: float = float("nan"),
        min_p: float = float("nan"),
    ):
        self.context = context
        self.element = element
        self.min_rho = float(min_rho)
        self.min_p = float(min_p)
        super().__init__(
            f"POSITIVITY_FAILURE element={element if element is not None else '-'} "
            f"context={context} min_rho={self.min_rho:.6e} min_p={self.min_p:.6e}"
        )


class OutputError(SolverError):
    """Raised when an output file cannot be written."""

    kind = "output_error"

    def __init__(self, path: str, reason: str):
        self.path = path
        super().__init__(f"Cannot write {path}: {reason}")
