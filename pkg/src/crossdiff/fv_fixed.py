"""Implicit finite-volume solver for the cross-diffusion system on a fixed
1D interval with zero-flux boundaries.

The update is backward Euler in time over cell averages.  Cell unknowns are
entropy variables, so every Newton iterate maps to compositions strictly
inside the admissible simplex and no positivity clipping is ever needed.
Fluxes use arithmetic-mean face compositions and two-point gradients, which
gives second order in space; backward Euler is first order in time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import entropy
from ._newton import NewtonError, newton_solve
from .mobility import mobility, mobility_directional_jacobian
from .simplex import CoefficientMatrix, validate_initial

#: Initial data is pulled at least this far inside the simplex before the
#: entropy-variable transform (which needs strictly interior points).
CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class Grid1D:
    """Uniform cell-centered grid on (0, length)."""

    length: float
    cells: int

    def __post_init__(self):
        if not (self.length > 0.0):
            raise ValueError("grid length must be positive")
        if self.cells < 1:
            raise ValueError("grid needs at least one cell")

    @property
    def dx(self) -> float:
        return self.length / self.cells

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.cells) + 0.5) * self.dx

    @property
    def faces(self) -> np.ndarray:
        return np.arange(self.cells + 1) * self.dx


@dataclass(frozen=True)
class Field:
    """Per-cell state stored in entropy variables.

    Shape contract: ``w`` is (cells, n) where n counts the non-solvent
    species.  The solvent fraction is always the deficit 1 - sum(u).
    """

    grid: Grid1D
    w: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.w, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != self.grid.cells:
            raise ValueError("w must have shape (cells, n)")
        if not np.all(np.isfinite(arr)):
            raise ValueError("entropy variables must be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "w", arr)

    @classmethod
    def from_initial(cls, grid: Grid1D, u0: np.ndarray) -> "Field":
        """Build a field from per-cell compositions, clamping to the
        CLAMP_TOL-interior so the entropy transform is well defined."""
        u0 = np.asarray(u0, dtype=float)
        if u0.ndim != 2 or u0.shape[0] != grid.cells:
            raise ValueError("initial data must have shape (cells, n)")
        report = validate_initial(u0)
        if not report:
            raise ValueError(
                "initial data outside the admissible simplex: "
                + "; ".join(f"cell {k}: {msg}" for k, msg in report.violations)
            )
        u = np.maximum(u0, CLAMP_TOL)
        rho = u.sum(axis=1, keepdims=True)
        scale = np.where(rho > 1.0 - CLAMP_TOL, (1.0 - CLAMP_TOL) / rho, 1.0)
        return cls(grid, entropy.dh(u * scale))

    @property
    def n(self) -> int:
        return self.w.shape[1]

    @property
    def u(self) -> np.ndarray:
        """Cell compositions, shape (cells, n)."""
        return entropy.dh_inverse(self.w)

    def masses(self) -> np.ndarray:
        """Integrals of u_0..u_n over the domain, length n + 1."""
        u = self.u
        per_species = u.sum(axis=0) * self.grid.dx
        solvent = self.grid.length - per_species.sum()
        return np.concatenate(([solvent], per_species))

    def total_entropy(self) -> float:
        return float(entropy.h(self.u).sum() * self.grid.dx)


@dataclass(frozen=True)
class SolverConfig:
    """Time-stepping and Newton parameters."""

    dt: float
    t_end: float
    newton_tol: float = 1e-11
    newton_max_iter: int = 30
    dt_min: float = 1e-12
    output_every: int = 1

    def __post_init__(self):
        if not (self.dt > 0.0):
            raise ValueError("dt must be positive")
        if self.t_end < 0.0:
            raise ValueError("t_end must be nonnegative")
        if not (0.0 < self.dt_min <= self.dt):
            raise ValueError("need 0 < dt_min <= dt")
        if not (self.newton_tol > 0.0):
            raise ValueError("newton_tol must be positive")
        if self.newton_max_iter < 1 or self.output_every < 1:
            raise ValueError("iteration and output cadence must be >= 1")


@dataclass
class Trajectory:
    """Recorded states plus per-step diagnostics of a fixed-domain run."""

    grid: Grid1D
    times: list
    states: list
    diag_times: list
    masses: list
    entropies: list
    newton_iters: list

    def masses_array(self) -> np.ndarray:
        return np.asarray(self.masses)

    def entropy_array(self) -> np.ndarray:
        return np.asarray(self.entropies)


class NonConvergenceError(RuntimeError):
    """Raised when step halving bottoms out at dt_min; carries the partial
    trajectory computed so far (may be None for single-step calls)."""

    def __init__(self, message: str, worst_residual: float, partial=None):
        super().__init__(message)
        self.worst_residual = worst_residual
        self.partial = partial


def face_flux(u_left: np.ndarray, u_right: np.ndarray, K: CoefficientMatrix,
              dx: float) -> np.ndarray:
    """Numerical flux through interior faces from adjacent cell states."""
    u_left = np.asarray(u_left, dtype=float)
    u_right = np.asarray(u_right, dtype=float)
    u_face = 0.5 * (u_left + u_right)
    grad = (u_right - u_left) / dx
    A = mobility(u_face, K)
    return np.einsum("...ij,...j->...i", A, grad)


def _residual_and_jacobian(K: CoefficientMatrix, dx: float, dt: float,
                           u_old: np.ndarray):
    """Return residual(w) and jacobian(w) callbacks for one implicit step."""

    def residual(w):
        u = entropy.dh_inverse(w)
        F = face_flux(u[:-1], u[1:], K, dx)
        div = np.zeros_like(u)
        if F.shape[0]:
            div[:-1] += F
            div[1:] -= F
        return (u - u_old) * dx - dt * div

    def jacobian(w):
        u = entropy.dh_inverse(w)
        S = entropy.hessian_inverse(u)  # du/dw per cell
        N, n = u.shape
        eye = np.eye(n)
        diag_u = np.broadcast_to(dx * eye, (N, n, n)).copy()
        if N > 1:
            u_face = 0.5 * (u[:-1] + u[1:])
            grad = (u[1:] - u[:-1]) / dx
            A = mobility(u_face, K)
            B = mobility_directional_jacobian(grad, K)
            dF_left = -A / dx + 0.5 * B   # d flux / d u(left cell)
            dF_right = A / dx + 0.5 * B   # d flux / d u(right cell)
            # cell k gains flux F_{k+1/2} and loses F_{k-1/2}
            diag_u[:-1] -= dt * dF_left
            diag_u[1:] += dt * dF_right
            sup_u = -dt * dF_right
            sub_u = dt * dF_left
            sub = np.einsum("kij,kjl->kil", sub_u, S[:-1])
            sup = np.einsum("kij,kjl->kil", sup_u, S[1:])
        else:
            sub = np.zeros((0, n, n))
            sup = np.zeros((0, n, n))
        diag = np.einsum("kij,kjl->kil", diag_u, S)
        return sub, diag, sup

    return residual, jacobian


def _advance(field: Field, K: CoefficientMatrix, dt: float,
             config: SolverConfig):
    """One backward-Euler update of size dt with recursive halving.

    Returns (new_field, newton_iterations_spent).
    """
    u_old = field.u
    residual, jacobian = _residual_and_jacobian(K, field.grid.dx, dt, u_old)
    try:
        w_new, iters = newton_solve(field.w, residual, jacobian,
                                    config.newton_tol, config.newton_max_iter)
        return Field(field.grid, w_new), iters
    except NewtonError as exc:
        if dt / 2.0 < config.dt_min:
            raise NonConvergenceError(
                f"Newton failed at dt = {dt:g} (dt_min reached)",
                exc.worst_residual) from exc
        first, it1 = _advance(field, K, dt / 2.0, config)
        second, it2 = _advance(first, K, dt / 2.0, config)
        return second, it1 + it2


def step(field: Field, K: CoefficientMatrix, dt: float,
         config: SolverConfig | None = None) -> Field:
    """Advance one implicit step of size dt and return the new field."""
    if config is None:
        config = SolverConfig(dt=dt, t_end=dt)
    new_field, _ = _advance(field, K, dt, config)
    return new_field


def run(field: Field, K: CoefficientMatrix, config: SolverConfig) -> Trajectory:
    """March from t = 0 to t_end recording states and diagnostics.

    States are recorded at t = 0, every ``output_every``-th step, and the
    final time.  Mass and entropy diagnostics are recorded every step.
    """
    if field.n + 1 != K.K.shape[0]:
        raise ValueError("coefficient matrix size does not match species count")
    traj = Trajectory(grid=field.grid, times=[0.0], states=[field],
                      diag_times=[0.0], masses=[field.masses()],
                      entropies=[field.total_entropy()], newton_iters=[])
    t = 0.0
    step_index = 0
    while t < config.t_end - 1e-14 * max(1.0, config.t_end):
        dt = min(config.dt, config.t_end - t)
        try:
            field, iters = _advance(field, K, dt, config)
        except NonConvergenceError as exc:
            raise NonConvergenceError(str(exc), exc.worst_residual,
                                      partial=traj) from exc
        t += dt
        step_index += 1
        traj.diag_times.append(t)
        traj.masses.append(field.masses())
        traj.entropies.append(field.total_entropy())
        traj.newton_iters.append(iters)
        done = t >= config.t_end - 1e-14 * max(1.0, config.t_end)
        if done or step_index % config.output_every == 0:
            traj.times.append(t)
            traj.states.append(field)
    return traj
