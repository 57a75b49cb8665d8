"""Structured matrices and transforms: Toeplitz forms, difference-operator
covariances, the half-shifted cosine basis that diagonalizes them exactly,
and the whitening transform behind the eigenvalue form of the Fisher
information."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import cholesky, solve_triangular, toeplitz as _sp_toeplitz
from scipy.linalg import LinAlgError

from .model import CONVENTIONS, DELTA_DELTAT, DELTAT_DELTA, DomainError

NEG_EIG_TOL = 1e-8


class NotPositiveDefiniteError(RuntimeError):
    """Cholesky factorization failed; the matrix is not positive definite."""


def toeplitz(gamma) -> np.ndarray:
    """Symmetric Toeplitz matrix with entries gamma_|i-j|."""
    gamma = np.asarray(gamma, dtype=float)
    if gamma.ndim != 1 or gamma.size < 1:
        raise DomainError("need at least gamma_0")
    return _sp_toeplitz(gamma)


def diff_matrix(n: int) -> np.ndarray:
    """Backward difference operator (lower bidiagonal, zero initial value)."""
    return np.eye(n) - np.eye(n, k=-1)


def diff_cov(n: int, K: int, tau: float, convention: str = DELTA_DELTAT) -> np.ndarray:
    """Noise covariance tau^2 (D D^t)^K or tau^2 (D^t D)^K with exact
    integer combinatorial entries before the tau^2 scaling."""
    if convention not in CONVENTIONS:
        raise DomainError(f"convention must be one of {CONVENTIONS}")
    if K == 0:
        return tau ** 2 * np.eye(n)
    d = np.eye(n, dtype=np.int64) - np.eye(n, k=-1, dtype=np.int64)
    base = d @ d.T if convention == DELTA_DELTAT else d.T @ d
    return tau ** 2 * np.linalg.matrix_power(base, K).astype(float)


def dct_nodes(n: int) -> np.ndarray:
    """u_i = pi (2i - 1) / (2n + 1), i = 1..n."""
    return np.pi * (2.0 * np.arange(1, n + 1) - 1.0) / (2.0 * n + 1.0)


@lru_cache(maxsize=8)
def dct_basis(n: int) -> np.ndarray:
    """Orthonormal symmetric cosine basis C_ij = 2/sqrt(2n+1) cos((i-1/2) u_j).

    C diagonalizes D D^t exactly; the row-reversed basis E C diagonalizes
    D^t D, both with eigenvalues 4 sin^2(u_i / 2).
    """
    u = dct_nodes(n)
    i = np.arange(1, n + 1)[:, None]
    return 2.0 / np.sqrt(2.0 * n + 1.0) * np.cos((i - 0.5) * u[None, :])


def noise_eigenvalues(n: int, K: int, tau: float) -> np.ndarray:
    """Eigenvalues 4^K tau^2 sin^(2K)(u_i / 2) of the noise covariance."""
    u = dct_nodes(n)
    return 4.0 ** K * tau ** 2 * np.sin(u / 2.0) ** (2 * K)


def dct_diagonalize_noise(n: int, K: int, tau: float,
                          convention: str = DELTA_DELTAT):
    """Exact eigendecomposition of the noise covariance.

    Returns (eigenvalues, basis) with Cov = basis @ diag(eig) @ basis.T.
    """
    if convention not in CONVENTIONS:
        raise DomainError(f"convention must be one of {CONVENTIONS}")
    eig = noise_eigenvalues(n, K, tau)
    basis = dct_basis(n)
    if convention == DELTAT_DELTA:
        basis = basis[::-1, :]
    return eig, basis


def dn_matrix(g, n: int) -> np.ndarray:
    """C diag(g(u_1) .. g(u_n)) C for a symbol g on (0, pi]."""
    u = dct_nodes(n)
    vals = np.asarray(g(u), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise DomainError("symbol must be finite at every node u_i")
    c = dct_basis(n)
    return (c * vals[None, :]) @ c


@dataclass(frozen=True)
class WhitenedSystem:
    """Joint reduction of (Cov(x), Cov(y)): Cov(y) = A^t A with A upper
    triangular, and lam (descending) the eigenvalues of A^-t Cov(x) A^-1
    with orthogonal eigenbasis D.  The data map z -> (A^-1 D)^t z makes the
    transformed noise white and the transformed signal diagonal."""
    a_factor: np.ndarray
    basis: np.ndarray
    lam: np.ndarray

    @property
    def n(self) -> int:
        return self.lam.size

    def transform(self, z: np.ndarray) -> np.ndarray:
        """(A^-1 D)^t z via a triangular solve; no explicit inverse."""
        z = np.asarray(z, dtype=float)
        w = solve_triangular(self.a_factor, z, trans="T", lower=False)
        return self.basis.T @ w


def whiten(cov_x: np.ndarray, cov_y: np.ndarray) -> WhitenedSystem:
    """Whitening transform for a PSD signal covariance against a positive
    definite noise covariance."""
    try:
        a = cholesky(cov_y, lower=False)
    except LinAlgError as exc:
        raise NotPositiveDefiniteError("noise covariance is not positive definite") from exc
    s1 = solve_triangular(a, cov_x, trans="T", lower=False)
    m = solve_triangular(a, s1.T, trans="T", lower=False).T
    m = 0.5 * (m + m.T)
    lam, vec = np.linalg.eigh(m)
    lam = lam[::-1].copy()
    vec = vec[:, ::-1].copy()
    if lam[0] < 0:
        raise NotPositiveDefiniteError("whitened signal covariance is negative definite")
    if lam[-1] < -NEG_EIG_TOL * max(lam[0], 0.0):
        raise NotPositiveDefiniteError(
            f"whitened signal covariance has eigenvalue {lam[-1]:.3e} below "
            f"-{NEG_EIG_TOL:g} * lambda_1")
    np.clip(lam, 0.0, None, out=lam)
    return WhitenedSystem(a_factor=a, basis=vec, lam=lam)
