"""Stochastic lattice oracle: multi-species exclusion dynamics in 1D.

Each of L sites holds exactly one label in {0, ..., n} (label 0 plays the
solvent).  Adjacent unlike labels (a, b) swap at rate K_ab * (L/length)^2;
boundaries are reflecting (no swaps across the ends).  The chain is simulated
by uniformization: candidate events arrive as a Poisson stream at the total
rate (L-1) * max(K) * (L/length)^2, each candidate picks a bond uniformly and
is accepted with probability K_ab / max(K).  That is statistically exact and
needs only integer draws per event, so the hot loop lives in a compiled
kernel with a pure-Python twin selected at import time.

Coarse-grained output: per-bin per-species empirical densities at requested
times, averaged over independent replicas.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..simplex import CoefficientMatrix
from ._rng import StateRNG, make_state, poisson

try:
    from . import _kernel as _compiled_kernel
except ImportError:  # extension not built; pure-Python twin takes over
    _compiled_kernel = None
from . import _kernel_py as _python_kernel

DEFAULT_BACKEND = "compiled" if _compiled_kernel is not None else "python"


def available_backends() -> tuple:
    if _compiled_kernel is not None:
        return ("compiled", "python")
    return ("python",)


def get_kernel(backend: str | None = None):
    """Resolve a backend name to its kernel module."""
    if backend is None:
        backend = DEFAULT_BACKEND
    if backend == "compiled":
        if _compiled_kernel is None:
            raise RuntimeError("compiled kernel is not available")
        return _compiled_kernel
    if backend == "python":
        return _python_kernel
    raise ValueError(f"unknown backend {backend!r}")


@dataclass(frozen=True)
class LatticeState:
    """One replica's initial configuration.

    ``sites`` holds L labels in {0, ..., n}; ``seed`` feeds the dynamics
    stream; ``length`` is the physical interval length, so site i occupies
    the cell ((i, i+1) * length / L).
    """

    sites: np.ndarray
    length: float
    seed: int

    def __post_init__(self):
        arr = np.ascontiguousarray(self.sites, dtype=np.uint8)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("sites must be a 1D array with at least 2 sites")
        if not (self.length > 0.0):
            raise ValueError("length must be positive")
        arr.setflags(write=False)
        object.__setattr__(self, "sites", arr)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def n_sites(self) -> int:
        return self.sites.size

    def label_counts(self, n_species: int) -> np.ndarray:
        return np.bincount(self.sites, minlength=n_species)


def _checked_probabilities(probabilities: np.ndarray) -> np.ndarray:
    p = np.asarray(probabilities, dtype=float)
    if p.ndim != 2:
        raise ValueError("probabilities must have shape (sites, species)")
    if np.any(p < 0.0) or not np.all(np.isfinite(p)):
        raise ValueError("probabilities must be finite and nonnegative")
    row_sums = p.sum(axis=1)
    if np.any(np.abs(row_sums - 1.0) > 1e-9):
        raise ValueError("probability rows must sum to 1")
    cum = np.cumsum(p / row_sums[:, None], axis=1)
    cum[:, -1] = 1.0
    return cum


def _sample_labels(cum: np.ndarray, rng) -> np.ndarray:
    draws = rng.random(cum.shape[0])
    return (draws[:, None] >= cum).sum(axis=1).astype(np.uint8)


def from_profile(probabilities: np.ndarray, length: float,
                 seed: int) -> LatticeState:
    """Sample one configuration from per-site label probabilities.

    ``probabilities`` has shape (L, n+1) with rows summing to 1; row i gives
    the distribution of the label at site i (product measure).
    """
    cum = _checked_probabilities(probabilities)
    labels = _sample_labels(cum, np.random.default_rng(seed))
    return LatticeState(labels, length, seed)


def sample_replicas(probabilities: np.ndarray, length: float, seed: int,
                    replicas: int) -> list:
    """Independent replica configurations from one base seed."""
    if replicas < 1:
        raise ValueError("need at least one replica")
    cum = _checked_probabilities(probabilities)
    states = []
    for r in range(replicas):
        ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(r,))
        labels = _sample_labels(cum, np.random.default_rng(ss))
        states.append(LatticeState(labels, length, seed))
    return states


@dataclass(frozen=True)
class LatticeTrajectory:
    """Replica-averaged coarse-grained densities at checkpoint times."""

    times: tuple
    bins: int
    n_species: int
    n_sites: int
    length: float
    replicas: int
    backend: str
    sites_per_bin: np.ndarray
    density_mean: np.ndarray   # (times, bins, species)
    density_std: np.ndarray    # replica sample std, same shape
    counts: np.ndarray         # integer counts summed over replicas

    @property
    def bin_centers(self) -> np.ndarray:
        return (np.arange(self.bins) + 0.5) * (self.length / self.bins)

    def species_totals(self) -> np.ndarray:
        """Per-species particle totals (all replicas) at each time."""
        return self.counts.sum(axis=1)


def _acceptance_tables(K: np.ndarray, r_max: float):
    """64-bit integer acceptance thresholds for K_ab / max(K).

    Exact rational quantization: acceptance probability is represented to
    one part in 2^64, and maximal-rate pairs take a no-draw fast path.  The
    diagonal is marked `always` so equal-label candidates can fall through
    to a harmless self-swap in the kernels without an extra branch (they
    consume no acceptance draw either way).
    """
    m = K.shape[0]
    thresh = np.zeros((m, m), dtype=np.uint64)
    always = np.eye(m, dtype=np.uint8)
    denom = Fraction(r_max)
    for a in range(m):
        for b in range(m):
            if a == b or K[a, b] == 0.0:
                continue
            ratio = Fraction(float(K[a, b])) / denom
            if ratio == 1:
                always[a, b] = 1
            else:
                thresh[a, b] = np.uint64(
                    (ratio.numerator << 64) // ratio.denominator)
    return thresh, always


def _bond_mask(n_bonds: int) -> int:
    bits = max(1, (n_bonds - 1).bit_length())
    return (1 << bits) - 1


def _bin_counts(sites, bin_idx, bins, n_species):
    return np.bincount(bin_idx * n_species + sites,
                       minlength=bins * n_species).reshape(bins, n_species)


def kmc_run(initial, K: CoefficientMatrix, t_end: float, *,
            output_times=None, bins: int = 32, backend: str | None = None,
            threads: int = 1) -> LatticeTrajectory:
    """Simulate replicas of the exclusion dynamics and coarse-grain.

    ``initial`` is a LatticeState or a sequence of them (one per replica);
    replica r runs on stream r of its state's seed.  Checkpoint times default
    to (t_end,); time 0 is always included in the output.
    """
    if isinstance(initial, LatticeState):
        states = [initial]
    else:
        states = list(initial)
    if not states:
        raise ValueError("need at least one replica")
    L = states[0].n_sites
    length = states[0].length
    if any(s.n_sites != L or s.length != length for s in states):
        raise ValueError("replicas must share lattice size and length")
    if not isinstance(K, CoefficientMatrix):
        K = CoefficientMatrix(K)
    n_species = K.K.shape[0]
    if any(int(s.sites.max()) >= n_species for s in states):
        raise ValueError("site labels exceed the species count of K")
    if not (0 < bins <= L):
        raise ValueError("bins must lie in 1..L")
    if not (t_end > 0.0):
        raise ValueError("t_end must be positive")

    if output_times is None:
        times = (float(t_end),)
    else:
        times = tuple(float(t) for t in output_times)
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ValueError("output times must be strictly increasing")
        if times and not (0.0 < times[0] and
                          times[-1] <= t_end * (1.0 + 1e-12)):
            raise ValueError("output times must lie in (0, t_end]")
        if not times or times[-1] < t_end * (1.0 - 1e-12):
            times = times + (float(t_end),)

    kernel = get_kernel(backend)
    r_max = float(K.K.max())
    n_bonds = L - 1
    mask = _bond_mask(n_bonds)
    total_rate = n_bonds * r_max * (L / length) ** 2
    if r_max > 0.0:
        thresh, always = _acceptance_tables(K.K, r_max)
    else:  # no positive rate: zero events will be drawn either way
        thresh = np.zeros((n_species, n_species), dtype=np.uint64)
        always = np.eye(n_species, dtype=np.uint8)

    bin_idx = (np.arange(L) * bins) // L
    sites_per_bin = np.bincount(bin_idx, minlength=bins)
    n_times = len(times) + 1

    def run_replica(r: int) -> np.ndarray:
        sites = states[r].sites.copy()
        state = make_state(states[r].seed, stream=r)
        rng = StateRNG(state)
        counts = np.zeros((n_times, bins, n_species), dtype=np.int64)
        counts[0] = _bin_counts(sites, bin_idx, bins, n_species)
        t_prev = 0.0
        for ti, t in enumerate(times, start=1):
            n_events = poisson(total_rate * (t - t_prev), rng)
            if n_events:
                kernel.run_events(sites, state, n_events, mask, n_bonds,
                                  thresh, always)
            counts[ti] = _bin_counts(sites, bin_idx, bins, n_species)
            t_prev = t
        return counts

    replica_ids = range(len(states))
    if threads > 1 and len(states) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            all_counts = list(pool.map(run_replica, replica_ids))
    else:
        all_counts = [run_replica(r) for r in replica_ids]

    stack = np.stack(all_counts)  # (replicas, times, bins, species)
    dens = stack / sites_per_bin[None, None, :, None]
    mean = dens.mean(axis=0)
    if len(states) > 1:
        std = dens.std(axis=0, ddof=1)
    else:
        std = np.zeros_like(mean)
    return LatticeTrajectory(
        times=(0.0,) + times, bins=bins, n_species=n_species, n_sites=L,
        length=length, replicas=len(states), backend=kernel.NAME,
        sites_per_bin=sites_per_bin, density_mean=mean, density_std=std,
        counts=stack.sum(axis=0))
