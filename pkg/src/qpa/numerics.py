"""Dense linear-algebra kernels: numerical rank, minimum-norm least squares,
Hermitian eigendecomposition, and PSD testing by attempted Cholesky.

Everything here stays dense and direct; the systems this package builds top
out around a few hundred rows and 256 columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteInput, NotHermitian
from .model import is_hermitian
from .tolerances import RANK_RTOL, TOL_HERM


@dataclass(frozen=True)
class RealLinearSystem:
    """Real linear system A t = b over the n**2 density-matrix parameters."""

    matrix: np.ndarray
    rhs: np.ndarray
    column_labels: tuple[str, ...]
    dimension: int

    def __post_init__(self):
        if self.matrix.shape[1] != self.dimension ** 2:
            raise ValueError(f"expected {self.dimension ** 2} columns, got {self.matrix.shape[1]}")
        if len(self.column_labels) != self.matrix.shape[1]:
            raise ValueError("one label per column required")


@dataclass(frozen=True)
class RankProfile:
    rank: int
    singular_values: np.ndarray
    threshold_used: float


@dataclass(frozen=True)
class LeastSquaresSolution:
    solution: np.ndarray
    residual_norm: float
    nullspace_dim: int
    nullspace_basis: np.ndarray  # columns orthonormal, shape (n**2, nullspace_dim)
    rank_profile: RankProfile


def _check_finite(a: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(a)):
        raise NonFiniteInput(f"{name} contains non-finite entries")


def numerical_rank(a) -> RankProfile:
    """Rank by singular-value thresholding at RANK_RTOL * sigma_max."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        raise NonFiniteInput("empty matrix")
    _check_finite(a, "matrix")
    s = np.linalg.svd(a, compute_uv=False)
    threshold = RANK_RTOL * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > threshold))
    return RankProfile(rank=rank, singular_values=s, threshold_used=float(threshold))


def least_squares_solve(system: RealLinearSystem) -> LeastSquaresSolution:
    """Minimum-norm least-squares solution with nullspace of the coefficient matrix."""
    a = np.asarray(system.matrix, dtype=float)
    b = np.asarray(system.rhs, dtype=float)
    _check_finite(a, "matrix")
    _check_finite(b, "rhs")
    u, s, vt = np.linalg.svd(a, full_matrices=True)
    threshold = RANK_RTOL * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > threshold))
    s_inv = np.zeros_like(s)
    s_inv[:rank] = 1.0 / s[:rank]
    solution = vt.T[:, : s.size] @ (s_inv * (u.T[: s.size, :] @ b))
    residual = float(np.linalg.norm(a @ solution - b))
    nullspace = vt[rank:].T
    profile = RankProfile(rank=rank, singular_values=s, threshold_used=float(threshold))
    return LeastSquaresSolution(
        solution=solution,
        residual_norm=residual,
        nullspace_dim=a.shape[1] - rank,
        nullspace_basis=nullspace,
        rank_profile=profile,
    )


def hermitian_eigen(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (nondecreasing) and orthonormal eigenvectors of a Hermitian matrix."""
    m = np.asarray(m, dtype=complex)
    if not is_hermitian(m, TOL_HERM):
        raise NotHermitian("matrix is not Hermitian")
    w, v = np.linalg.eigh(m)
    return w, v


@dataclass(frozen=True)
class PsdVerdict:
    is_psd: bool
    cholesky_factor: np.ndarray | None
    min_eigenvalue: float | None
    shift_used: float


def psd_check(m, shift_tol: float) -> PsdVerdict:
    """Decide positive semidefiniteness of a Hermitian matrix.

    Fast path: Cholesky of ``m + shift_tol * I``.  When that fails the
    spectrum decides: the verdict is IsPSD iff the minimum eigenvalue is at
    least ``-shift_tol``, and the quantitative margin is reported either way.
    """
    m = np.asarray(m, dtype=complex)
    if not is_hermitian(m, TOL_HERM):
        raise NotHermitian("matrix is not Hermitian")
    n = m.shape[0]
    shifted = m + shift_tol * np.eye(n)
    try:
        factor = np.linalg.cholesky(shifted)
        return PsdVerdict(is_psd=True, cholesky_factor=factor, min_eigenvalue=None, shift_used=shift_tol)
    except np.linalg.LinAlgError:
        pass
    w, _ = hermitian_eigen(m)
    lmin = float(w[0])
    if lmin >= -shift_tol:
        # borderline: produce a factor with the smallest shift that works
        bump = max(shift_tol, -lmin) + 16 * np.finfo(float).eps * max(1.0, float(np.abs(w).max()))
        factor = np.linalg.cholesky(m + bump * np.eye(n))
        return PsdVerdict(is_psd=True, cholesky_factor=factor, min_eigenvalue=lmin, shift_used=float(bump))
    return PsdVerdict(is_psd=False, cholesky_factor=None, min_eigenvalue=lmin, shift_used=shift_tol)
