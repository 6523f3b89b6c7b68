"""Dense complex linear algebra with enforced residual contracts.

LAPACK (via numpy/scipy) does the factorizations; the wrappers here pin
down the error behavior the rest of the library relies on: explicit
singular-pivot detection for LU, a residual bound for the small dense
eigensolver, and deterministic outputs for identical inputs.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .errors import ConvergenceError, DomainError, SingularMatrixError

PIVOT_FLOOR = 1e-300
EIG_MAX_DIM = 512


class LUFactor:
    """Partial-pivoting LU of a square complex matrix, reusable for many solves."""

    def __init__(self, A: np.ndarray):
        A = np.ascontiguousarray(A, dtype=complex)
        n, m = A.shape
        if n != m:
            raise DomainError(f"matrix must be square, got {A.shape}")
        if not np.all(np.isfinite(A)):
            raise SingularMatrixError("matrix contains non-finite entries")
        self.n = n
        self._lu, self._piv = sla.lu_factor(A, check_finite=False)
        dmin = np.min(np.abs(np.diag(self._lu)))
        if not np.isfinite(dmin) or dmin < PIVOT_FLOOR:
            raise SingularMatrixError(f"numerically singular pivot (|pivot| = {dmin:.3e})")

    def solve(self, B: np.ndarray) -> np.ndarray:
        B = np.asarray(B, dtype=complex)
        if B.shape[0] != self.n:
            raise DomainError(f"rhs rows {B.shape[0]} != matrix dimension {self.n}")
        return sla.lu_solve((self._lu, self._piv), B, check_finite=False)


def lu_solve(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve A X = B by partial-pivoting LU; raises on singular pivots."""
    return LUFactor(A).solve(B)


def svd(A: np.ndarray):
    """Full SVD (U, s, V) with s descending and A = U @ diag(s) @ V^H."""
    A = np.asarray(A, dtype=complex)
    U, s, Vh = np.linalg.svd(A, full_matrices=True)
    return U, s, Vh.conj().T


def eig_small(A: np.ndarray):
    """Eigenvalues and right eigenvectors of a dense matrix, m <= 512.

    Every returned pair satisfies ||A v - lam v|| <= 1e-8 ||A|| ||v||; a
    ConvergenceError is raised otherwise (near-defective inputs surface
    through the residual, not through a crash).
    """
    A = np.asarray(A, dtype=complex)
    m = A.shape[0]
    if A.shape != (m, m):
        raise DomainError(f"matrix must be square, got {A.shape}")
    if m > EIG_MAX_DIM:
        raise DomainError(f"dimension {m} exceeds eig_small limit {EIG_MAX_DIM}")
    try:
        lam, V = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:  # QR iteration failure
        raise ConvergenceError(f"eigensolver did not converge: {exc}") from exc
    norm = np.linalg.norm(A, 2) if m else 0.0
    if m:
        res = np.linalg.norm(A @ V - V * lam[None, :], axis=0)
        bad = res > 1e-8 * max(norm, 1e-300) * np.linalg.norm(V, axis=0)
        if np.any(bad):
            raise ConvergenceError(
                f"{int(bad.sum())} eigenpairs exceed the residual contract")
    return lam, V
