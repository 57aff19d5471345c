"""Dense linear-algebra primitives used throughout the package.

Eigenvalue, Schur, SVD and Lyapunov computations delegate to LAPACK via
numpy/scipy. The continuous algebraic Riccati equation is solved here by
the Schur method on the associated Hamiltonian (ordered invariant
subspace), which is the only nontrivial routine in the module.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError, NumericError, SolvabilityError, ValidationError

__all__ = [
    "SchurForm",
    "eigenvalues",
    "schur_form",
    "solve_lyapunov",
    "solve_care",
    "singular_values",
    "is_hurwitz",
    "spectral_abscissa",
]


def as_matrix(M, name="matrix"):
    """Coerce to a finite 2-D float64 array."""
    A = np.asarray(M, dtype=np.float64)
    if A.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={A.ndim}")
    if not np.all(np.isfinite(A)):
        raise ValidationError(f"{name} contains non-finite entries")
    return A


def as_square(M, name="matrix"):
    A = as_matrix(M, name)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    return A


def _require_symmetric(M, name):
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.T)) > 1e-10 * scale:
        raise ValidationError(f"{name} must be symmetric")
    return 0.5 * (M + M.T)


def eigenvalues(A):
    """Eigenvalues of a square real matrix, as a complex array.

    Order follows LAPACK's return order; callers needing a canonical
    order should sort.
    """
    A = as_square(A, "A")
    return np.linalg.eigvals(A)


def spectral_abscissa(A):
    """max Re(lambda) over the spectrum of A."""
    return float(np.max(eigenvalues(A).real))


def is_hurwitz(A, tol=0.0):
    """True if every eigenvalue of A has real part < -tol."""
    return spectral_abscissa(A) < -tol


@dataclass(frozen=True)
class SchurForm:
    """Real Schur decomposition A = Z T Z^T.

    T is quasi-upper-triangular (1x1 and 2x2 diagonal blocks), Z is
    orthogonal, and ``eigenvalues`` lists the spectrum in T's block
    order.
    """

    T: np.ndarray
    Z: np.ndarray
    eigenvalues: np.ndarray


def schur_form(A):
    """Real Schur form of a square matrix."""
    A = as_square(A, "A")
    try:
        T, Z = scipy.linalg.schur(A, output="real")
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - rare
        raise NumericError(f"Schur iteration failed: {exc}") from exc
    return SchurForm(T=T, Z=Z, eigenvalues=scipy.linalg.eigvals(T))


def solve_lyapunov(A, Q):
    """Solve A^T X + X A + Q = 0 for symmetric X.

    Q must be symmetric. The solution is unique iff no two eigenvalues
    of A sum to zero; violations raise SolvabilityError.
    """
    A = as_square(A, "A")
    Q = as_square(Q, "Q")
    if A.shape != Q.shape:
        raise DimensionError(f"A and Q shapes differ: {A.shape} vs {Q.shape}")
    Q = _require_symmetric(Q, "Q")
    lam = np.linalg.eigvals(A)
    sums = lam[:, None] + lam[None, :]
    scale = max(1.0, float(np.max(np.abs(lam))))
    if np.min(np.abs(sums)) < 1e-10 * scale:
        raise SolvabilityError(
            "Lyapunov operator singular: eigenvalues of A sum to zero"
        )
    X = scipy.linalg.solve_lyapunov(A.T, -Q)
    return 0.5 * (X + X.T)


def solve_care(A, B, Q, R):
    """Stabilizing solution of A^T X + X A - X B R^-1 B^T X + Q = 0.

    Solved by the Schur method: the stable invariant subspace of the
    2n x 2n Hamiltonian [[A, -B R^-1 B^T], [-Q, -A^T]] is isolated by an
    ordered real Schur decomposition and X recovered from its basis.
    R must be symmetric positive definite; the returned X is symmetric
    and makes A - B R^-1 B^T X Hurwitz.
    """
    A = as_square(A, "A")
    B = as_matrix(B, "B")
    Q = as_square(Q, "Q")
    R = as_square(R, "R")
    n, m = B.shape
    if A.shape[0] != n:
        raise DimensionError(f"A is {A.shape}, B has {n} rows")
    if Q.shape != A.shape:
        raise DimensionError(f"Q shape {Q.shape} does not match A {A.shape}")
    if R.shape != (m, m):
        raise DimensionError(f"R shape {R.shape} does not match B columns {m}")
    Q = _require_symmetric(Q, "Q")
    R = _require_symmetric(R, "R")
    try:
        R_chol = scipy.linalg.cholesky(R, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise ValidationError("R must be positive definite") from exc

    BRiBt = B @ scipy.linalg.cho_solve((R_chol, True), B.T)
    H = np.block([[A, -BRiBt], [-Q, -A.T]])

    ham_eigs = np.linalg.eigvals(H)
    scale = max(1.0, float(np.max(np.abs(ham_eigs))))
    if np.min(np.abs(ham_eigs.real)) < 1e-9 * scale:
        raise SolvabilityError(
            "Hamiltonian has eigenvalues on the imaginary axis; "
            "no stabilizing solution exists"
        )

    try:
        _, Z, sdim = scipy.linalg.schur(
            H, output="real", sort=lambda re, im: re < 0.0
        )
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - rare
        raise NumericError(f"ordered Schur decomposition failed: {exc}") from exc
    if sdim != n:
        raise SolvabilityError(
            f"stable invariant subspace has dimension {sdim}, expected {n}"
        )
    U11 = Z[:n, :n]
    U21 = Z[n:, :n]
    try:
        X = np.linalg.solve(U11.T, U21.T).T
    except np.linalg.LinAlgError as exc:
        raise SolvabilityError(
            "stable subspace basis is singular; pair may not be stabilizable"
        ) from exc
    X = 0.5 * (X + X.T)

    closed = A - BRiBt @ X
    if not is_hurwitz(closed):
        raise SolvabilityError("recovered Riccati solution is not stabilizing")
    residual = A.T @ X + X @ A - X @ BRiBt @ X + Q
    res_scale = max(1.0, float(np.linalg.norm(X)))
    if np.linalg.norm(residual) > 1e-6 * res_scale * max(1.0, np.linalg.norm(A)):
        raise NumericError("Riccati residual too large; solution rejected")
    return X


def singular_values(A):
    """Singular values of a real matrix in descending order."""
    A = as_matrix(A, "A")
    return np.linalg.svd(A, compute_uv=False)
