"""Mobility matrix of the reduced n-species system and its entropy structure.

Assembles A(u) together with the auxiliary matrices (Lambda, P, D, A-tilde, M)
that certify the degenerate-parabolicity inequality  H(u) A(u) >= alpha *
Lambda(u)  by numerical sampling.  All assemblers accept a single composition
or an array of them stacked along leading axes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from . import entropy
from .simplex import CoefficientMatrix, sample_interior


class StructureHypothesisError(ValueError):
    """Raised when a certificate is requested for coefficients that violate
    the strict-positivity hypothesis (a modelling failure, not a numerical one)."""


def _coupling(K: CoefficientMatrix):
    """Split K into the species-species coupling C_ij = K_ij - K_i0 (zero
    diagonal, indices 1..n) and the solvent column k0_i = K_i0."""
    k0 = K.K[1:, 0]
    C = K.K[1:, 1:] - k0[:, None]
    np.fill_diagonal(C, 0.0)
    return C, k0


def mobility(u, K: CoefficientMatrix):
    """Mobility matrix A(u) of the reduced system.

    A_ii = sum_{j != i} (K_ij - K_i0) u_j + K_i0,  A_ij = -(K_ij - K_i0) u_i.
    Collapses to K * Identity when all coefficients are equal.
    """
    arr = np.asarray(u, dtype=float)
    n = arr.shape[-1]
    if n != K.n:
        raise ValueError(f"composition has {n} species but K couples {K.n}")
    C, k0 = _coupling(K)
    A = -arr[..., :, None] * C
    idx = np.arange(n)
    A[..., idx, idx] = arr @ C.T + k0
    return A


def mobility_directional_jacobian(g, K: CoefficientMatrix):
    """Jacobian of u -> A(u) g for a fixed vector g (A is affine in u).

    Returns B with B[i, l] = d(A(u) g)_i / du_l; used to chain face fluxes
    through the state dependence of the mobility.
    """
    garr = np.asarray(g, dtype=float)
    C, _ = _coupling(K)
    B = garr[..., :, None] * C
    idx = np.arange(K.n)
    B[..., idx, idx] -= garr @ C.T
    return B


def lambda_matrix(u):
    """Degeneracy weight Lambda(u) = diag(1/u_i); interior input only."""
    arr = np.asarray(u, dtype=float)
    if np.any(arr <= 0.0):
        raise ValueError("Lambda(u) needs strictly positive fractions")
    n = arr.shape[-1]
    out = np.zeros(arr.shape + (n,))
    idx = np.arange(n)
    out[..., idx, idx] = 1.0 / arr
    return out


def p_matrix(u):
    """P(u) with P_ii = 1 - u_i and P_ij = -u_i; satisfies H(u) P(u) = Lambda(u)."""
    arr = np.asarray(u, dtype=float)
    n = arr.shape[-1]
    out = np.broadcast_to(-arr[..., :, None], arr.shape + (n,)).copy()
    idx = np.arange(n)
    out[..., idx, idx] += 1.0
    return out


def d_matrix(u):
    """Rank-one D(u) with constant rows D_ij = u_i."""
    arr = np.asarray(u, dtype=float)
    n = arr.shape[-1]
    return np.broadcast_to(arr[..., :, None], arr.shape + (n,)).copy()


def a_tilde(u, K: CoefficientMatrix, alpha: float | None = None):
    """Mobility assembled from the shifted coefficients K_ij - alpha."""
    if alpha is None:
        alpha = K.alpha
    shifted = K.K - alpha
    np.fill_diagonal(shifted, 0.0)
    return mobility(u, CoefficientMatrix(shifted))


def m_matrix(u, K: CoefficientMatrix, alpha: float | None = None):
    """M(u) = A-tilde(u) H(u)^{-1}: symmetric, diagonally dominant, PSD.

    M_ii = (K_i0 - alpha)(1 - rho) u_i + sum_{j != i} (K_ij - alpha) u_i u_j,
    M_ij = -(K_ij - alpha) u_i u_j.
    """
    arr = np.asarray(u, dtype=float)
    rho = np.asarray(arr.sum(axis=-1))
    if np.any(arr <= 0.0) or np.any(rho >= 1.0):
        raise ValueError("M(u) needs strictly interior input")
    if alpha is None:
        alpha = K.alpha
    koff = K.K[1:, 1:] - alpha
    np.fill_diagonal(koff, 0.0)
    k0 = K.K[1:, 0] - alpha
    outer = arr[..., :, None] * arr[..., None, :]
    M = -koff * outer
    idx = np.arange(K.n)
    M[..., idx, idx] = k0 * (1.0 - rho)[..., None] * arr + (arr @ koff.T) * arr
    return M


@dataclass(frozen=True)
class StructureCertificate:
    """Sampled numerical witness of the entropy-structure hypotheses.

    ``min_quadratic_residual`` is the most negative sampled value of
    z^T (H A - alpha Lambda) z / |z|^2, taken over random directions and over
    eigenvalues of the symmetric part.  The remaining fields aggregate the
    worst cases of the auxiliary identities.
    """

    n: int
    alpha: float
    alpha_star: float
    m: tuple
    samples: int
    min_quadratic_residual: float
    hp_identity_max_error: float
    hd_min_eigenvalue: float
    m_matrix_max_asymmetry: float
    m_matrix_min_dominance: float
    m_matrix_min_eigenvalue: float
    passed: bool

    PSD_TOL = -1e-10
    HP_TOL = 1e-10
    DOMINANCE_TOL = -1e-12

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def sample_structure_points(n: int, samples: int, rng: np.random.Generator) -> np.ndarray:
    """Interior sample set for structure checks, biased toward the boundary.

    80% uniform over the admissible set, 10% with one species fraction pushed
    into [5e-4, 1e-3), 10% with the solvent fraction pushed into the same
    band.  Every coordinate (including the solvent) is kept >= 5e-4 so that
    the 1/u_i scale of H stays within what float64 eigenvalue checks can
    resolve at the certificate tolerance.
    """
    floor = 5e-4
    n_species_bias = samples // 10
    n_solvent_bias = samples // 10
    n_bulk = samples - n_species_bias - n_solvent_bias

    out = np.empty((samples, n))
    filled = 0
    while filled < n_bulk:
        block = sample_interior(n, rng, size=n_bulk - filled)
        u0 = 1.0 - block.sum(axis=1)
        good = (block >= floor).all(axis=1) & (u0 >= floor)
        kept = block[good]
        out[filled : filled + len(kept)] = kept
        filled += len(kept)

    def _band(count):
        return np.exp(rng.uniform(np.log(floor), np.log(1e-3), size=count))

    # One species fraction in the degenerate band, the rest sharing 1 - s.
    s = _band(n_species_bias)
    which = rng.integers(0, n, size=n_species_bias)
    rest = rng.dirichlet(np.ones(n), size=n_species_bias)  # n-1 species + solvent
    for r in range(n_species_bias):
        row = np.empty(n)
        others = np.delete(np.arange(n), which[r])
        row[which[r]] = s[r]
        row[others] = rest[r, : n - 1] * (1.0 - s[r])
        if row.min() < floor or 1.0 - row.sum() < floor:
            row = np.full(n, (1.0 - s[r]) / (n + 1))
            row[which[r]] = s[r]
        out[n_bulk + r] = row

    # Solvent fraction in the band: rho close to 1.
    s0 = _band(n_solvent_bias)
    parts = rng.dirichlet(np.ones(n), size=n_solvent_bias) * (1.0 - s0)[:, None]
    low = parts.min(axis=1) < floor
    parts[low] = ((1.0 - s0[low]) / n)[:, None]
    out[n_bulk + n_species_bias :] = parts
    return out


def check_structure(
    K: CoefficientMatrix,
    samples: int = 1000,
    seed: int = 0,
    z_per_sample: int = 64,
) -> StructureCertificate:
    """Certify H A >= alpha Lambda and the auxiliary identities by sampling.

    Raises StructureHypothesisError unless every off-diagonal K_ij is
    strictly positive (the certificate's hypothesis, independent of any
    numerical outcome).
    """
    if not K.is_strictly_positive():
        raise StructureHypothesisError(
            "structure certificate requires strictly positive coefficients; "
            f"min off-diagonal entry is {K.alpha}"
        )
    if samples < 1:
        raise ValueError("samples must be >= 1")

    n = K.n
    alpha = K.alpha
    rng = np.random.default_rng(seed)
    u = sample_structure_points(n, samples, rng)

    H = entropy.hessian(u)
    A = mobility(u, K)
    lam = lambda_matrix(u)
    R = H @ A - alpha * lam
    sym = 0.5 * (R + np.swapaxes(R, -1, -2))
    min_eig = float(np.linalg.eigvalsh(sym)[:, 0].min())

    z = rng.normal(size=(z_per_sample, n))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    forms = np.einsum("zi,sij,zj->sz", z, R, z)
    min_form = float(forms.min())
    min_residual = min(min_eig, min_form)

    hp_err = float(np.abs(H @ p_matrix(u) - lam).max())

    HD = H @ d_matrix(u)
    hd_sym = 0.5 * (HD + np.swapaxes(HD, -1, -2))
    hd_min = float(np.linalg.eigvalsh(hd_sym)[:, 0].min())

    M = m_matrix(u, K, alpha)
    m_asym = float(np.abs(M - np.swapaxes(M, -1, -2)).max())
    dominance = M[:, np.arange(n), np.arange(n)] - (
        np.abs(M).sum(axis=-1) - np.abs(M[:, np.arange(n), np.arange(n)])
    )
    m_dom = float(dominance.min())
    m_min_eig = float(np.linalg.eigvalsh(0.5 * (M + np.swapaxes(M, -1, -2)))[:, 0].min())

    passed = (
        min_residual >= StructureCertificate.PSD_TOL
        and hp_err <= StructureCertificate.HP_TOL
        and hd_min >= StructureCertificate.PSD_TOL
        and m_asym == 0.0
        and m_dom >= StructureCertificate.DOMINANCE_TOL
        and m_min_eig >= StructureCertificate.PSD_TOL
    )
    return StructureCertificate(
        n=n,
        alpha=alpha,
        alpha_star=float(np.sqrt(alpha)),
        m=(0.5,) * n,
        samples=samples,
        min_quadratic_residual=min_residual,
        hp_identity_max_error=hp_err,
        hd_min_eigenvalue=hd_min,
        m_matrix_max_asymmetry=m_asym,
        m_matrix_min_dominance=m_dom,
        m_matrix_min_eigenvalue=m_min_eig,
        passed=passed,
    )
