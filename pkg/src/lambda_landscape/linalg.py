"""Dense complex-matrix kernel: Hermitian eigendecompositions and exact
unitary exponentials of Hermitian generators.

Everything here operates on small dense matrices (the driven three-level
system needs 3x3; anything up to a few dozen levels is fine). Exponentials
go through the eigendecomposition so the result is unitary to roundoff,
which the propagation layer relies on.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "NotHermitianError",
    "HERMITIAN_TOL",
    "UNITARY_TOL",
    "hermiticity_defect",
    "unitarity_defect",
    "herm_eig",
    "expm_unitary",
]

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10


class NotHermitianError(ValueError):
    """Raised when a matrix fails the Hermiticity tolerance."""


def _as_square_complex(matrix) -> np.ndarray:
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def hermiticity_defect(matrix) -> float:
    """Return max|M - M^dag|, the worst-case deviation from Hermiticity."""
    m = _as_square_complex(matrix)
    return float(np.max(np.abs(m - m.conj().T)))


def unitarity_defect(matrix) -> float:
    """Return max|U^dag U - I|, the worst-case deviation from unitarity."""
    u = _as_square_complex(matrix)
    eye = np.eye(u.shape[0])
    return float(np.max(np.abs(u.conj().T @ u - eye)))


def herm_eig(matrix) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecompose a Hermitian matrix.

    Parameters
    ----------
    matrix : array_like
        Square Hermitian matrix (validated against ``HERMITIAN_TOL``).

    Returns
    -------
    (eigenvalues, eigenvectors)
        Real eigenvalues in ascending order and a unitary matrix whose
        columns are the matching eigenvectors. Degenerate eigenvalues get
        an arbitrary orthonormal basis of the eigenspace.

    Raises
    ------
    NotHermitianError
        If ``max|M - M^dag|`` exceeds ``HERMITIAN_TOL``.
    """
    m = _as_square_complex(matrix)
    if hermiticity_defect(m) > HERMITIAN_TOL:
        raise NotHermitianError(
            f"matrix is not Hermitian within {HERMITIAN_TOL:g} "
            f"(defect {hermiticity_defect(m):.3e})"
        )
    off_diag = m - np.diag(np.diag(m))
    if not off_diag.any():
        # Exactly diagonal input: return exact unit eigenvectors so that
        # downstream exponentials of diagonal generators stay exactly
        # diagonal (the zero-control propagator must not pick up noise).
        values = np.real(np.diag(m))
        order = np.argsort(values, kind="stable")
        vectors = np.eye(m.shape[0], dtype=complex)[:, order]
        return values[order], vectors
    values, vectors = np.linalg.eigh(m)
    return values, vectors


def expm_unitary(hamiltonian, t: float) -> np.ndarray:
    """Return ``exp(-i * H * t)`` for Hermitian ``H`` via eigendecomposition.

    The result is ``W diag(exp(-i w t)) W^dag`` with ``(w, W)`` from
    :func:`herm_eig`, hence unitary up to roundoff for any finite ``t``.
    """
    t = float(t)
    if not np.isfinite(t):
        raise ValueError("duration must be finite")
    values, vectors = herm_eig(hamiltonian)
    phases = np.exp(-1j * values * t)
    return (vectors * phases) @ vectors.conj().T
