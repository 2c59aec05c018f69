"""Exception taxonomy shared across the solver, mapped to CLI exit codes."""

__all__ = [
    "SolverError",
    "ConfigError",
    "HyperbolicityError",
    "PositivityError",
    "BlowUpError",
    "DtUnderflowError",
]


class SolverError(Exception):
    """Base class for all solver failures."""


class ConfigError(SolverError):
    """Invalid configuration or basis sizes (exit code 2)."""


class HyperbolicityError(SolverError):
    """P(h) lost positive definiteness at some cell (exit code 3).

    `cell` is the offending cell index when known, `detail` an optional
    eigenvalue or node diagnostic.
    """

    def __init__(self, message, cell=None, detail=None):
        super().__init__(message)
        self.cell = cell
        self.detail = detail


class PositivityError(SolverError):
    """Height surrogate non-positive at a quadrature node (exit code 3)."""

    def __init__(self, message, cell=None, node=None):
        super().__init__(message)
        self.cell = cell
        self.node = node


class BlowUpError(SolverError):
    """NaN/Inf detected in the state (exit code 4)."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class DtUnderflowError(SolverError):
    """Adaptive time step shrank below the resolvable scale (exit code 5)."""

    def __init__(self, message, t=None, dt=None):
        super().__init__(message)
        self.t = t
        self.dt = dt
