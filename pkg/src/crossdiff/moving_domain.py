"""Moving-boundary growth model on a reference interval.

The physical domain (0, e(t)) grows at the total deposition rate and is
mapped to the fixed reference interval (0, 1).  In reference coordinates the
conserved quantity per cell is e(t) * v and the face flux gains an advective
part with velocity directed toward the origin, so faces take their advected
value from the right cell.  The deposition boundary condition enters as the
prescribed total flux through the reference face at 1; the face at 0 is a
wall.  Piecewise-constant deposition schedules integrate exactly, and time
steps are snapped to schedule breakpoints so each implicit step sees one
constant flux vector.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

from . import entropy
from ._newton import NewtonError, newton_solve
from .fv_fixed import Field, Grid1D, NonConvergenceError, SolverConfig
from .mobility import mobility, mobility_directional_jacobian
from .simplex import CoefficientMatrix


@dataclass(frozen=True)
class FluxSchedule:
    """Piecewise-constant deposition fluxes for species 0..n.

    ``values`` holds one flux vector per interval; ``breakpoints`` are the
    interior interval boundaries, so ``len(values) == len(breakpoints) + 1``.
    Fluxes are right-continuous: at a breakpoint the new interval applies.
    """

    breakpoints: tuple
    values: tuple
    horizon: float

    def __init__(self, breakpoints, values, horizon):
        breakpoints = tuple(float(b) for b in breakpoints)
        vals = np.asarray(values, dtype=float)
        if vals.ndim != 2:
            raise ValueError("values must be a 2D array of flux vectors")
        if vals.shape[0] != len(breakpoints) + 1:
            raise ValueError("need exactly one flux vector per interval")
        if not np.all(np.isfinite(vals)) or np.any(vals < 0.0):
            raise ValueError("fluxes must be finite and nonnegative")
        if not (horizon > 0.0):
            raise ValueError("horizon must be positive")
        if any(b2 <= b1 for b1, b2 in zip(breakpoints, breakpoints[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if breakpoints and not (0.0 < breakpoints[0]
                                and breakpoints[-1] < horizon):
            raise ValueError("breakpoints must lie inside (0, horizon)")
        object.__setattr__(self, "breakpoints", breakpoints)
        object.__setattr__(self, "values",
                           tuple(tuple(row) for row in vals.tolist()))
        object.__setattr__(self, "horizon", float(horizon))

    @classmethod
    def constant(cls, value, horizon) -> "FluxSchedule":
        return cls((), [value], horizon)

    @property
    def n_species(self) -> int:
        """Number of flux components (solvent included)."""
        return len(self.values[0])

    def _check_time(self, t: float):
        if not (0.0 <= t <= self.horizon * (1.0 + 1e-12)):
            raise ValueError(f"time {t} outside schedule horizon")

    def value_at(self, t: float) -> np.ndarray:
        """Flux vector on the interval containing t (right-continuous)."""
        self._check_time(t)
        idx = bisect.bisect_right(self.breakpoints, t)
        if t >= self.horizon:
            idx = len(self.values) - 1
        return np.asarray(self.values[idx], dtype=float)

    def total_rate_at(self, t: float) -> float:
        """Growth speed e'(t): sum of all species fluxes."""
        return float(self.value_at(t).sum())

    def integral_to(self, t: float) -> np.ndarray:
        """Exact per-species integral of the flux over (0, t)."""
        self._check_time(t)
        edges = (0.0,) + self.breakpoints + (self.horizon,)
        total = np.zeros(self.n_species)
        for j, row in enumerate(self.values):
            lo, hi = edges[j], edges[j + 1]
            width = min(t, hi) - lo
            if width <= 0.0:
                break
            total += np.asarray(row) * width
        return total

    def next_breakpoint_after(self, t: float) -> float:
        idx = bisect.bisect_right(self.breakpoints, t)
        if idx < len(self.breakpoints):
            return self.breakpoints[idx]
        return self.horizon


def thickness(schedule: FluxSchedule, e0: float, t: float) -> float:
    """Domain thickness e(t) = e0 plus total deposited volume up to t."""
    if not (e0 > 0.0):
        raise ValueError("initial thickness must be positive")
    return e0 + float(schedule.integral_to(t).sum())


@dataclass
class MovingTrajectory:
    """Recorded reference-domain states and diagnostics of a growth run."""

    grid: Grid1D
    e0: float
    schedule: FluxSchedule
    times: list
    states: list
    thicknesses: list
    diag_times: list
    masses: list
    entropies: list
    newton_iters: list


def _masses_physical(state: Field, e: float) -> np.ndarray:
    """Physical per-species masses on (0, e): e * mean of v, solvent first."""
    v = state.u
    dxi = state.grid.dx
    per_species = v.sum(axis=0) * dxi * e
    solvent = e * state.grid.length - per_species.sum()
    return np.concatenate(([solvent], per_species))


def _step_residual_jacobian(K: CoefficientMatrix, dxi: float, dt: float,
                            v_old: np.ndarray, e_old: float, e_new: float,
                            rate: float, phi: np.ndarray):
    """Callbacks for one implicit step on the reference domain.

    ``phi`` is the flux vector for the solved species 1..n on this step's
    interval; ``rate`` is the total growth speed including the solvent.
    """
    N, n = v_old.shape
    xi_faces = np.arange(1, N) * dxi  # interior reference faces

    def residual(w):
        v = entropy.dh_inverse(w)
        R = (e_new * v - e_old * v_old) * dxi
        if N > 1:
            v_face = 0.5 * (v[:-1] + v[1:])
            grad = (v[1:] - v[:-1]) / dxi
            A = mobility(v_face, K)
            G = np.einsum("fij,fj->fi", A, grad) / e_new
            G += xi_faces[:, None] * rate * v[1:]  # advect from the right
            R[:-1] -= dt * G
            R[1:] += dt * G
        R[-1] -= dt * phi  # prescribed flux through the face at xi = 1
        return R

    def jacobian(w):
        v = entropy.dh_inverse(w)
        S = entropy.hessian_inverse(v)
        eye = np.eye(n)
        diag_u = np.broadcast_to(e_new * dxi * eye, (N, n, n)).copy()
        if N > 1:
            v_face = 0.5 * (v[:-1] + v[1:])
            grad = (v[1:] - v[:-1]) / dxi
            A = mobility(v_face, K)
            B = mobility_directional_jacobian(grad, K)
            dG_left = (-A / dxi + 0.5 * B) / e_new
            dG_right = (A / dxi + 0.5 * B) / e_new
            dG_right += xi_faces[:, None, None] * rate * eye
            diag_u[:-1] -= dt * dG_left
            diag_u[1:] += dt * dG_right
            sub = np.einsum("kij,kjl->kil", dt * dG_left, S[:-1])
            sup = np.einsum("kij,kjl->kil", -dt * dG_right, S[1:])
        else:
            sub = np.zeros((0, n, n))
            sup = np.zeros((0, n, n))
        diag = np.einsum("kij,kjl->kil", diag_u, S)
        return sub, diag, sup

    return residual, jacobian


def _advance_moving(state: Field, K: CoefficientMatrix,
                    schedule: FluxSchedule, e0: float, t: float, dt: float,
                    config: SolverConfig):
    """One implicit step from t to t + dt (no breakpoint inside). Returns
    (new_state, newton_iterations)."""
    e_old = thickness(schedule, e0, t)
    e_new = thickness(schedule, e0, t + dt)
    flux = schedule.value_at(t)
    rate = float(flux.sum())
    phi = flux[1:]
    residual, jacobian = _step_residual_jacobian(
        K, state.grid.dx, dt, state.u, e_old, e_new, rate, phi)
    try:
        w_new, iters = newton_solve(state.w, residual, jacobian,
                                    config.newton_tol, config.newton_max_iter)
        return Field(state.grid, w_new), iters
    except NewtonError as exc:
        if dt / 2.0 < config.dt_min:
            raise NonConvergenceError(
                f"Newton failed at t = {t:g}, dt = {dt:g} (dt_min reached)",
                exc.worst_residual) from exc
        first, it1 = _advance_moving(state, K, schedule, e0, t, dt / 2.0,
                                     config)
        second, it2 = _advance_moving(first, K, schedule, e0, t + dt / 2.0,
                                      dt / 2.0, config)
        return second, it1 + it2


def step_moving(state: Field, K: CoefficientMatrix, schedule: FluxSchedule,
                e0: float, t: float, dt: float,
                config: SolverConfig | None = None) -> Field:
    """Advance one step of size dt starting at time t.

    The step must not straddle a schedule breakpoint; ``run_moving`` arranges
    that automatically.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if schedule.next_breakpoint_after(t) < t + dt - 1e-14:
        raise ValueError("step straddles a schedule breakpoint")
    if config is None:
        config = SolverConfig(dt=dt, t_end=dt)
    new_state, _ = _advance_moving(state, K, schedule, e0, t, dt, config)
    return new_state


def run_moving(state: Field, K: CoefficientMatrix, schedule: FluxSchedule,
               e0: float, config: SolverConfig) -> MovingTrajectory:
    """March the growth model from t = 0 to config.t_end.

    Steps are clipped to schedule breakpoints and the final time so that the
    flux vector is constant within every implicit solve.
    """
    if state.n + 1 != K.K.shape[0]:
        raise ValueError("coefficient matrix size does not match species count")
    if schedule.n_species != state.n + 1:
        raise ValueError("schedule must provide fluxes for species 0..n")
    if config.t_end > schedule.horizon * (1.0 + 1e-12):
        raise ValueError("t_end exceeds the schedule horizon")
    traj = MovingTrajectory(
        grid=state.grid, e0=float(e0), schedule=schedule,
        times=[0.0], states=[state], thicknesses=[float(e0)],
        diag_times=[0.0], masses=[_masses_physical(state, e0)],
        entropies=[e0 * state.total_entropy()], newton_iters=[])
    t = 0.0
    step_index = 0
    eps = 1e-14 * max(1.0, config.t_end)
    while t < config.t_end - eps:
        target = min(t + config.dt, config.t_end)
        bp = schedule.next_breakpoint_after(t)
        if bp < target - eps:
            target = bp
        dt = target - t
        try:
            state, iters = _advance_moving(state, K, schedule, e0, t, dt,
                                           config)
        except NonConvergenceError as exc:
            raise NonConvergenceError(str(exc), exc.worst_residual,
                                      partial=traj) from exc
        t = target
        step_index += 1
        e_now = thickness(schedule, e0, t)
        traj.diag_times.append(t)
        traj.masses.append(_masses_physical(state, e_now))
        traj.entropies.append(e_now * state.total_entropy())
        traj.newton_iters.append(iters)
        done = t >= config.t_end - eps
        if done or step_index % config.output_every == 0:
            traj.times.append(t)
            traj.states.append(state)
            traj.thicknesses.append(e_now)
    return traj


@dataclass(frozen=True)
class MassBalanceReport:
    """Worst deviation of computed masses from the exact deposition law."""

    max_defect: float
    max_defect_species: int
    max_defect_time: float
    per_species_max: tuple
    per_species_time: tuple

    def to_dict(self) -> dict:
        return {
            "max_defect": self.max_defect,
            "max_defect_species": self.max_defect_species,
            "max_defect_time": self.max_defect_time,
            "species": [
                {"species": i, "max_defect": d, "time": t}
                for i, (d, t) in enumerate(zip(self.per_species_max,
                                               self.per_species_time))
            ],
        }


def mass_balance(traj: MovingTrajectory) -> MassBalanceReport:
    """Compare per-species masses against m_i(0) + integral of phi_i.

    The exact continuum law says each species mass changes only through its
    deposition flux; the implicit scheme satisfies it to round-off because
    interior fluxes telescope.
    """
    m0 = traj.masses[0]
    times = np.asarray(traj.diag_times)
    masses = np.asarray(traj.masses)  # (steps + 1, n + 1)
    expected = np.array([m0 + traj.schedule.integral_to(t) for t in times])
    defects = np.abs(masses - expected)
    per_species_idx = defects.argmax(axis=0)
    per_species_max = defects.max(axis=0)
    worst_species = int(per_species_max.argmax())
    return MassBalanceReport(
        max_defect=float(per_species_max[worst_species]),
        max_defect_species=worst_species,
        max_defect_time=float(times[per_species_idx[worst_species]]),
        per_species_max=tuple(float(v) for v in per_species_max),
        per_species_time=tuple(float(times[i]) for i in per_species_idx))
