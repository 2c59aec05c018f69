"""Energy-conservative and energy-stable finite volume schemes for the 1D
stochastic Galerkin shallow water equations."""

from .basis import PceBasis, build_basis, eval_basis, mean_variance, p_operator
from .cli import SolverConfig, build_experiment, load_config
from .core import (
    CellState,
    Field,
    Velocity,
    flux_jacobian,
    physical_flux,
    project_bottom,
    symmetrizer_eig,
    velocity,
)
from .entropy import (
    energy,
    energy_flux,
    energy_potential,
    entropy_variables,
    entropy_variables_flat,
    hessian_quadform,
)
from .errors import (
    BlowUpError,
    ConfigError,
    DtUnderflowError,
    HyperbolicityError,
    PositivityError,
    SolverError,
)
from .schemes import (
    SchemeKind,
    ec_flux,
    ec_source,
    es1_flux,
    es2_flux,
    numerical_energy_flux,
    semidiscrete_rhs,
)
from .timestep import (
    cfl_dt,
    integrate,
    positivity_check,
    positivity_lambda,
    rk3_fixed,
    ssp_rk3_step,
    total_energy,
)

__version__ = "0.1.0"

__all__ = [
    "PceBasis",
    "SolverConfig",
    "load_config",
    "build_experiment",
    "build_basis",
    "eval_basis",
    "mean_variance",
    "p_operator",
    "CellState",
    "Field",
    "Velocity",
    "velocity",
    "physical_flux",
    "flux_jacobian",
    "symmetrizer_eig",
    "project_bottom",
    "energy",
    "energy_flux",
    "entropy_variables",
    "entropy_variables_flat",
    "energy_potential",
    "hessian_quadform",
    "SchemeKind",
    "ec_flux",
    "ec_source",
    "es1_flux",
    "es2_flux",
    "numerical_energy_flux",
    "semidiscrete_rhs",
    "positivity_check",
    "positivity_lambda",
    "cfl_dt",
    "ssp_rk3_step",
    "rk3_fixed",
    "integrate",
    "total_energy",
    "SolverError",
    "ConfigError",
    "HyperbolicityError",
    "PositivityError",
    "BlowUpError",
    "DtUnderflowError",
    "__version__",
]
