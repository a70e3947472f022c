"""Dense complex linear algebra for small Hermitian positive definite systems.

Everything in this package runs through a handful of primitives: a complex
Cholesky factorization with an explicit rank-deficiency threshold, triangular
solves against the factor, real-valued Hermitian quadratic forms, and the
Sherman-Morrison update for rank-one covariance perturbations.  Matrices are
plain ``numpy`` arrays of ``complex128``; the only wrapper type is
:class:`CholeskyFactor`, which is reused both for solving and for sampling
circular Gaussian vectors with a prescribed covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import (
    DimensionMismatch,
    DomainError,
    NonPositiveQuadraticForm,
    NotPositiveDefinite,
)

__all__ = [
    "CholeskyFactor",
    "as_vector",
    "hermitian_matrix",
    "cholesky",
    "solve_chol",
    "solve_hpd",
    "quadratic_form",
    "rank1_update_inverse",
]

# Conjugate-symmetry tolerance (absolute) accepted at construction time.
HERMITIAN_ATOL = 1e-12

# Relative magnitude allowed for the imaginary residue of a quadratic form.
_QF_IMAG_RTOL = 1e-10


def as_vector(v) -> np.ndarray:
    """Coerce ``v`` to a 1-D complex128 vector of positive length."""
    v = np.asarray(v, dtype=np.complex128)
    if v.ndim != 1 or v.size == 0:
        raise DimensionMismatch(f"expected a non-empty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DomainError("vector contains non-finite entries")
    return v


def hermitian_matrix(elements, posdef_hint: bool = False) -> np.ndarray:
    """Validate and return an M x M Hermitian matrix.

    Conjugate symmetry must hold within ``1e-12`` absolute; the residue is
    then removed exactly by averaging with the conjugate transpose.  With
    ``posdef_hint`` the diagonal must additionally be strictly positive.
    """
    a = np.asarray(elements, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix contains non-finite entries")
    asym = np.abs(a - a.conj().T).max()
    if asym > HERMITIAN_ATOL:
        raise DomainError(
            f"matrix is not conjugate-symmetric: max |A - A^H| = {asym:.3e}"
        )
    a = 0.5 * (a + a.conj().T)
    if posdef_hint and np.any(a.real.diagonal() <= 0.0):
        raise NotPositiveDefinite(
            "positive definite hint violated: non-positive diagonal entry",
            pivot_index=int(np.argmin(a.real.diagonal())),
        )
    return a


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular factor ``L`` with ``L L^H = A`` and real positive diagonal."""

    lower: np.ndarray

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def log_det(self) -> float:
        """log |A| of the factored matrix."""
        return float(2.0 * np.sum(np.log(self.lower.real.diagonal())))


def cholesky(a: np.ndarray) -> CholeskyFactor:
    """Factor a Hermitian positive definite matrix as ``L L^H``.

    A pivot is rejected when it falls at or below ``M * eps * max(diag)``,
    which flags both indefinite matrices and numerically singular ones such
    as sample covariances formed from ``T <= M`` snapshots.

    Raises
    ------
    NotPositiveDefinite
        Reporting the index of the failing pivot.
    """
    a = np.asarray(a, dtype=np.complex128)
    m = a.shape[0]
    if a.ndim != 2 or a.shape[1] != m:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    max_diag = float(np.max(a.real.diagonal(), initial=0.0))
    tol = m * np.finfo(np.float64).eps * max_diag
    lower = np.zeros_like(a)
    for j in range(m):
        col = a[j:, j] - lower[j:, :j] @ lower[j, :j].conj()
        pivot = col[0].real
        if pivot <= tol:
            raise NotPositiveDefinite(
                f"pivot {pivot:.3e} at index {j} is <= tolerance {tol:.3e}",
                pivot_index=j,
            )
        d = np.sqrt(pivot)
        lower[j, j] = d
        lower[j + 1 :, j] = col[1:] / d
    return CholeskyFactor(lower)


def solve_chol(factor: CholeskyFactor, b: np.ndarray) -> np.ndarray:
    """Solve ``A y = b`` given the Cholesky factor of ``A``."""
    b = np.asarray(b, dtype=np.complex128)
    if b.shape[0] != factor.dim:
        raise DimensionMismatch(
            f"rhs has leading dimension {b.shape[0]}, factor is {factor.dim}"
        )
    y = solve_triangular(factor.lower, b, lower=True, check_finite=False)
    return solve_triangular(
        factor.lower.conj().T, y, lower=False, check_finite=False
    )


def solve_hpd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``A y = b`` for Hermitian positive definite ``A``."""
    return solve_chol(cholesky(a), b)


def quadratic_form(a: np.ndarray, v: np.ndarray) -> float:
    """Real value of the Hermitian quadratic form ``v^H A v``.

    The imaginary residue of the raw product must be negligible
    (``<= 1e-10`` relative); it is asserted and discarded.
    """
    a = np.asarray(a, dtype=np.complex128)
    v = np.asarray(v, dtype=np.complex128)
    if a.ndim != 2 or v.ndim != 1 or a.shape != (v.size, v.size):
        raise DimensionMismatch(
            f"quadratic form shape mismatch: A {a.shape}, v {v.shape}"
        )
    raw = np.vdot(v, a @ v)
    if abs(raw.imag) > _QF_IMAG_RTOL * max(abs(raw), 1e-300):
        raise DomainError(
            f"quadratic form has non-negligible imaginary part {raw.imag:.3e} "
            f"(|value| = {abs(raw):.3e}); matrix is not Hermitian enough"
        )
    return float(raw.real)


def rank1_update_inverse(
    qinv_a: np.ndarray, ah_qinv_a: float, gamma: float
) -> tuple[np.ndarray, float]:
    """Sherman-Morrison update of ``Q^{-1} a`` for ``M = Q + gamma a a^H``.

    Given ``Q^{-1} a`` and the scalar ``a^H Q^{-1} a``, returns
    ``M^{-1} a = Q^{-1} a / (1 + gamma a^H Q^{-1} a)`` and the matching
    scalar ``a^H M^{-1} a``, without forming ``M``.
    """
    if gamma < 0.0:
        raise DomainError(f"gamma must be >= 0, got {gamma}")
    if ah_qinv_a <= 0.0:
        raise NonPositiveQuadraticForm(
            f"a^H Q^{{-1}} a must be positive, got {ah_qinv_a}"
        )
    denom = 1.0 + gamma * ah_qinv_a
    return np.asarray(qinv_a, dtype=np.complex128) / denom, ah_qinv_a / denom
