"""Dense complex 4x4 linear algebra.

Matrices are plain ``numpy.ndarray`` objects of shape (4, 4) and dtype
complex128. Eigendecompositions use a cyclic complex Jacobi solver (compiled
when available) rather than LAPACK so that eigenvalue ordering and tie
handling are deterministic.
"""

from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import ContractViolation, DomainError, NumericFailure

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class EigenDecomposition4:
    eigenvalues: np.ndarray  # (4,) ascending
    eigenvectors: np.ndarray  # (4, 4), column k pairs with eigenvalue k

    def reconstruct(self):
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.conj().T


def as_matrix(M):
    A = np.asarray(M, dtype=np.complex128)
    if A.shape != (4, 4):
        raise ContractViolation(f"expected a 4x4 matrix, got shape {A.shape}")
    return A


def hermiticity_error(M):
    A = np.asarray(M)
    return float(np.max(np.abs(A - A.conj().T)))


def check_hermitian(M, tol=HERMITIAN_TOL):
    A = as_matrix(M)
    err = hermiticity_error(A)
    if not err <= tol:
        raise ContractViolation(f"matrix is not Hermitian (max |M - M^H| = {err:.3e})")
    return A


def check_density(rho, tol=1e-10):
    """Validate a density matrix: Hermitian, unit trace, no negative eigenvalue."""
    A = check_hermitian(rho, tol)
    tr = np.trace(A)
    if abs(tr.imag) > tol or abs(tr.real - 1.0) > tol:
        raise ContractViolation(f"density matrix trace is {tr}, expected 1")
    lo = hermitian_eigen(0.5 * (A + A.conj().T)).eigenvalues[0]
    if lo < -tol:
        raise ContractViolation(f"density matrix has negative eigenvalue {lo:.3e}")
    return A


def hermitian_eigen(M):
    """Eigenvalues (ascending) and unitary eigenvectors of a Hermitian 4x4 matrix.

    Ties keep the order the Jacobi sweeps left them in. Raises
    :class:`NumericFailure` carrying the off-diagonal residual if the sweep
    cap is reached.
    """
    A = check_hermitian(M)
    w, V, sweeps, off = _backend.jacobi_eigh(A)
    if sweeps < 0:
        raise NumericFailure("Jacobi eigensolver did not converge in 100 sweeps", residual=off)
    return EigenDecomposition4(np.asarray(w), np.asarray(V))


def matrix_function(M, f):
    """Apply a scalar map to a Hermitian matrix through its eigenvalues."""
    eig = hermitian_eigen(M)
    with np.errstate(all="ignore"):
        fw = np.array([f(x) for x in eig.eigenvalues], dtype=float)
    bad = ~np.isfinite(fw)
    if bad.any():
        x = eig.eigenvalues[np.argmax(bad)]
        raise DomainError(f"function undefined at eigenvalue {x!r}")
    V = eig.eigenvectors
    out = (V * fw) @ V.conj().T
    return 0.5 * (out + out.conj().T)


def unitary_step(H, dt):
    """exp(-i H dt) for Hermitian H."""
    if not np.isfinite(dt):
        raise ContractViolation(f"time step must be finite, got {dt}")
    eig = hermitian_eigen(H)
    V = eig.eigenvectors
    return (V * np.exp(-1j * eig.eigenvalues * dt)) @ V.conj().T


def trace_product(A, B):
    """tr(AB) without forming the product."""
    return complex(np.sum(np.asarray(A) * np.asarray(B).T))
