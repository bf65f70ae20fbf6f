"""Validated value types for volume-filling compositions and coefficient matrices.

A composition holds the volume fractions ``u = (u_1, ..., u_n)`` of the n
tracked species; the solvent/vacancy fraction ``u_0 = 1 - sum(u)`` is always
derived, never stored, so the volume-filling constraint holds by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Strict-interior margin: keeps log(u_i) and 1/(1 - rho) finite in float64.
INTERIOR_TOL = 1e-14


def _as_vector(u) -> np.ndarray:
    arr = np.asarray(u, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"composition must be a non-empty 1-d vector, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class Composition:
    """A point of the closed admissible set: u_i >= 0 and sum(u) <= 1."""

    u: np.ndarray

    def __init__(self, u):
        arr = _as_vector(u)
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"non-finite volume fraction: {arr}")
        if np.any(arr < 0.0):
            raise ValueError(f"negative volume fraction: {arr}")
        if arr.sum() > 1.0:
            raise ValueError(f"volume fractions sum to {arr.sum()} > 1")
        arr.flags.writeable = False
        object.__setattr__(self, "u", arr)

    @property
    def n(self) -> int:
        return self.u.size

    @property
    def rho(self) -> float:
        return float(self.u.sum())

    @property
    def u0(self) -> float:
        """Solvent fraction, derived so that u0 + rho == 1 exactly."""
        return 1.0 - self.rho

    def is_interior(self, tol: float = INTERIOR_TOL) -> bool:
        return bool(np.all(self.u > tol) and self.rho < 1.0 - tol)

    def __array__(self, dtype=None, copy=None):
        return np.array(self.u, dtype=dtype)


@dataclass(frozen=True)
class CoefficientMatrix:
    """Symmetric nonnegative cross-diffusion coefficients for n+1 species.

    ``K[i, j]`` couples species i and j (species 0 is the solvent); the
    diagonal is unused and stored as zero.  ``alpha`` is the smallest
    off-diagonal entry.
    """

    K: np.ndarray
    n: int = field(init=False)

    def __init__(self, K):
        arr = np.asarray(K, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 2:
            raise ValueError(f"K must be square of size >= 2, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("cross-diffusion coefficients must be finite")
        if np.any(arr < 0.0):
            raise ValueError("cross-diffusion coefficients must be nonnegative")
        if not np.array_equal(arr, arr.T):
            raise ValueError("K must be exactly symmetric")
        arr = arr.copy()
        np.fill_diagonal(arr, 0.0)
        arr.flags.writeable = False
        object.__setattr__(self, "K", arr)
        object.__setattr__(self, "n", arr.shape[0] - 1)

    @property
    def alpha(self) -> float:
        """Minimum off-diagonal coefficient."""
        off = self.K[~np.eye(self.n + 1, dtype=bool)]
        return float(off.min())

    def is_strictly_positive(self) -> bool:
        """True iff every off-diagonal coefficient is > 0."""
        return self.alpha > 0.0


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of an initial-data check; ``violations`` lists offending cells."""

    ok: bool
    violations: tuple

    def __bool__(self) -> bool:
        return self.ok


def validate_initial(cells) -> ValidationReport:
    """Check per-cell initial data against u_i >= 0 and sum(u) <= 1 (exact).

    Parameters
    ----------
    cells : array_like, shape (N, n)
        Volume fractions of the n tracked species in each cell.  The solvent
        fraction is derived, so only nonnegativity and the simplex bound are
        checked, with zero tolerance.

    Returns
    -------
    ValidationReport
        ``ok`` is True iff no cell violates a constraint; otherwise each
        violation is reported as ``(cell_index, reason)``.
    """
    arr = np.atleast_2d(np.asarray(cells, dtype=float))
    violations = []
    for k, row in enumerate(arr):
        bad = np.where(~np.isfinite(row))[0]
        for i in bad:
            violations.append((k, f"u_{i + 1} = {row[i]} is not finite"))
        if bad.size:
            continue
        bad = np.where(row < 0.0)[0]
        for i in bad:
            violations.append((k, f"u_{i + 1} = {row[i]} < 0"))
        if row.sum() > 1.0:
            violations.append((k, f"sum(u) = {row.sum()} > 1"))
    return ValidationReport(ok=not violations, violations=tuple(violations))


def sample_interior(n: int, seed, size: int | None = None):
    """Sample uniformly from the open simplex interior (Dirichlet(1, ..., 1)).

    Draws over n+1 parts and keeps the first n, giving the uniform law on the
    admissible set.  Deterministic for a given seed; samples too close to the
    boundary (within ``INTERIOR_TOL``) are redrawn.

    Parameters
    ----------
    n : int
        Number of tracked species, >= 1.
    seed : int or numpy.random.Generator
        Seed for the sampler, or a generator to draw from.
    size : int, optional
        If given, return an array of shape (size, n) instead of a single
        Composition.

    Returns
    -------
    Composition or numpy.ndarray
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    count = 1 if size is None else int(size)
    out = np.empty((count, n))
    filled = 0
    while filled < count:
        block = rng.dirichlet(np.ones(n + 1), size=count - filled)[:, :n]
        good = (block > INTERIOR_TOL).all(axis=1) & (block.sum(axis=1) < 1.0 - INTERIOR_TOL)
        kept = block[good]
        out[filled : filled + len(kept)] = kept
        filled += len(kept)
    if size is None:
        return Composition(out[0])
    return out
