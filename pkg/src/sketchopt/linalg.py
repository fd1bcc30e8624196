"""Dense linear algebra primitives shared by the sketching solvers.

Everything operates on row-major float64 numpy arrays.  Factorizations are
backed by LAPACK (via numpy/scipy); the functions here add the dimension,
symmetry and rank checks that the rest of the package relies on, plus the
prediction-seminorm error metric used to evaluate approximate solutions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

# Relative thresholds for rank / positive-definiteness decisions.
RANK_TOL = 1e-12
PIVOT_TOL = 1e-12
SYMMETRY_TOL = 1e-10


class NotPositiveDefinite(Exception):
    """Cholesky pivot at or below threshold: the matrix is numerically singular.

    Raised in particular when a sketched Gram matrix is rank deficient.
    """


def _as_matrix(M) -> np.ndarray:
    M = np.ascontiguousarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError(f"expected a 2-d array, got ndim={M.ndim}")
    return M


def _as_vector(v) -> np.ndarray:
    v = np.ascontiguousarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-d array, got ndim={v.ndim}")
    return v


def _check_symmetric(M: np.ndarray, name: str = "matrix") -> None:
    nrm = np.linalg.norm(M)
    skew = np.linalg.norm(M - M.T)
    if skew > SYMMETRY_TOL * max(nrm, np.finfo(np.float64).tiny):
        raise ValueError(f"{name} is not symmetric: ||M - M^T||_F = {skew:.3e}")


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular factor L with L @ L.T reconstructing the input."""

    dim: int
    lower: np.ndarray


@dataclass(frozen=True)
class LsProblem:
    """Least-squares instance: data matrix, observations and cached solution.

    Attributes
    ----------
    A : (n, d) ndarray, full column rank
    b : (n,) ndarray
    x_star : (d,) ndarray, minimizer of 0.5 * ||A x - b||^2
    opt_residual_sq : float, ||A x_star - b||^2
    """

    A: np.ndarray
    b: np.ndarray
    x_star: np.ndarray
    opt_residual_sq: float

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    @classmethod
    def from_data(cls, A, b) -> "LsProblem":
        """Build a problem, solving for x_star by Householder QR."""
        A = _as_matrix(A)
        b = _as_vector(b)
        if A.shape[0] != b.shape[0]:
            raise ValueError(f"A has {A.shape[0]} rows but b has length {b.shape[0]}")
        if not np.isfinite(A).all() or not np.isfinite(b).all():
            raise ValueError("A and b must be finite")
        x_star = qr_least_squares(A, b)
        r = A @ x_star - b
        return cls(A=A, b=b, x_star=x_star, opt_residual_sq=float(r @ r))


def matmul(M, N) -> np.ndarray:
    """Dense float64 matrix product M @ N with an explicit dimension check."""
    M = _as_matrix(M)
    N = _as_matrix(N)
    if M.shape[1] != N.shape[0]:
        raise ValueError(f"inner dimensions differ: {M.shape} @ {N.shape}")
    return M @ N


def qr_least_squares(A, b) -> np.ndarray:
    """Solve argmin_x ||A x - b|| for full-column-rank A via Householder QR.

    Raises
    ------
    ValueError
        If A is rank deficient: some |R_jj| <= RANK_TOL * max |R_jj|.
    """
    A = _as_matrix(A)
    b = _as_vector(b)
    n, d = A.shape
    if b.shape[0] != n:
        raise ValueError(f"A has {n} rows but b has length {b.shape[0]}")
    if n < d:
        raise ValueError(f"underdetermined system: {n} rows < {d} columns")
    Q, R = np.linalg.qr(A, mode="reduced")
    diag = np.abs(np.diag(R))
    if diag.min() <= RANK_TOL * diag.max():
        raise ValueError(
            f"rank-deficient matrix: min |R_jj| = {diag.min():.3e} vs max = {diag.max():.3e}"
        )
    return solve_triangular(R, Q.T @ b, lower=False)


def cholesky(M) -> CholeskyFactor:
    """Factor a symmetric positive definite matrix as L @ L.T.

    Raises
    ------
    NotPositiveDefinite
        If some pivot L_jj^2 <= PIVOT_TOL * max diagonal entry, which is the
        signature of a rank-deficient (too thin) sketch.
    """
    M = _as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got {M.shape}")
    _check_symmetric(M)
    max_diag = float(np.max(np.diag(M))) if M.shape[0] else 0.0
    if max_diag <= 0.0:
        raise NotPositiveDefinite("non-positive diagonal entry")
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    pivots = np.diag(L) ** 2
    if pivots.min() <= PIVOT_TOL * max_diag:
        raise NotPositiveDefinite(
            f"pivot {pivots.min():.3e} below threshold {PIVOT_TOL * max_diag:.3e}"
        )
    return CholeskyFactor(dim=M.shape[0], lower=L)


def cholesky_solve(F: CholeskyFactor, v) -> np.ndarray:
    """Solve (L @ L.T) y = v by forward and backward substitution."""
    v = np.ascontiguousarray(v, dtype=np.float64)
    if v.shape[0] != F.dim:
        raise ValueError(f"factor dimension {F.dim} but vector has length {v.shape[0]}")
    y = solve_triangular(F.lower, v, lower=True)
    return solve_triangular(F.lower.T, y, lower=False)


def sym_eigenvalues(M) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix (eigenvalues only)."""
    M = _as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got {M.shape}")
    _check_symmetric(M)
    return np.linalg.eigvalsh(M)


def prediction_error_sq(problem: LsProblem, x) -> float:
    """Squared prediction seminorm ||A (x - x_star)||^2, as ||A x - A x_star||^2."""
    x = _as_vector(x)
    if x.shape[0] != problem.d:
        raise ValueError(f"x has length {x.shape[0]}, expected {problem.d}")
    r = problem.A @ x - problem.A @ problem.x_star
    return float(r @ r)
