"""Simulation suite for volume-constrained cross-diffusion systems.

Subpackages and modules:

- ``simplex``: admissible compositions and exchange-coefficient matrices.
- ``entropy``: mixing entropy, entropy variables, and their inverses.
- ``mobility``: mobility matrices and the numerical structure certificate.
- ``fv_fixed``: implicit finite-volume solver on a fixed interval.
- ``moving_domain``: growth model on a moving interval via a reference map.
- ``lattice``: stochastic exclusion-process oracle with a compiled kernel.
- ``cli``: configuration-driven command-line runner.
"""

from .simplex import (CoefficientMatrix, Composition, ValidationReport,
                      sample_interior, validate_initial)
from .entropy import dh, dh_inverse, h, hessian, hessian_inverse
from .mobility import (StructureCertificate, StructureHypothesisError,
                       check_structure, mobility)
from .fv_fixed import (Field, Grid1D, NonConvergenceError, SolverConfig,
                       Trajectory, face_flux, run, step)
from .moving_domain import (FluxSchedule, MassBalanceReport,
                            MovingTrajectory, mass_balance, run_moving,
                            step_moving, thickness)
from .lattice import (LatticeState, LatticeTrajectory, from_profile, kmc_run,
                      sample_replicas)

__version__ = "0.1.0"

__all__ = [
    "CoefficientMatrix", "Composition", "ValidationReport",
    "sample_interior", "validate_initial",
    "h", "dh", "dh_inverse", "hessian", "hessian_inverse",
    "mobility", "check_structure", "StructureCertificate",
    "StructureHypothesisError",
    "Grid1D", "Field", "SolverConfig", "Trajectory", "NonConvergenceError",
    "face_flux", "run", "step",
    "FluxSchedule", "MovingTrajectory", "MassBalanceReport", "mass_balance",
    "run_moving", "step_moving", "thickness",
    "LatticeState", "LatticeTrajectory", "from_profile", "kmc_run",
    "sample_replicas",
    "__version__",
]
