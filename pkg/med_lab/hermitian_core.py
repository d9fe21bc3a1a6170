"""Dense complex Hermitian kernel: spectral decomposition and PSD primitives.

All functions take and return plain ``numpy`` arrays and never mutate their
inputs, so they can be called from any number of threads.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .config import (
    HERMITIAN_REJECT_TOL,
    PSD_TOL,
    RANK_TOL,
    RECONSTRUCTION_TOL,
    SQRT_CLAMP_TOL,
)
from .errors import DimensionMismatchError, EigenSolverError, PreconditionError

logger = logging.getLogger(__name__)


# ---------------------------
# MATRIX HELPERS
# ---------------------------
def dagger(matrix):
    return np.conj(np.swapaxes(matrix, -1, -2))


def max_abs(matrix):
    """Entry-wise max norm ||A||_max."""
    matrix = np.asarray(matrix)
    return float(np.max(np.abs(matrix))) if matrix.size else 0.0


def hermitian_defect(matrix):
    return max_abs(matrix - dagger(matrix))


def symmetrize(matrix):
    return 0.5 * (matrix + dagger(matrix))


def as_complex_matrix(matrix, name="matrix"):
    """Return ``matrix`` as a 2-D complex array, rejecting other shapes."""
    array = np.array(matrix, dtype=complex)
    if array.ndim != 2:
        raise DimensionMismatchError(f"{name} must be two-dimensional, got shape {array.shape}")
    return array


def as_hermitian(matrix, reject_tol=HERMITIAN_REJECT_TOL, name="matrix"):
    """Validate a square matrix and return its exactly Hermitian part.

    Inputs within ``reject_tol`` of Hermitian (relative to max(1, ||H||_max))
    are symmetrized; anything further away is rejected.
    """
    array = as_complex_matrix(matrix, name)
    if array.shape[0] != array.shape[1] or array.shape[0] == 0:
        raise DimensionMismatchError(f"{name} must be square and non-empty, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise PreconditionError(f"{name} has non-finite entries")
    defect = hermitian_defect(array)
    if defect > reject_tol * max(1.0, max_abs(array)):
        raise PreconditionError(f"{name} is not Hermitian (defect {defect:.3e})")
    return symmetrize(array)


# ---------------------------
# SPECTRAL DECOMPOSITION
# ---------------------------
@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenvalues in ascending order; column k of ``eigenvectors`` pairs with eigenvalue k."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self):
        return len(self.eigenvalues)

    @property
    def min(self):
        return float(self.eigenvalues[0])

    @property
    def max(self):
        return float(self.eigenvalues[-1])

    def apply(self, func):
        """Spectral calculus: V f(diag(lambda)) V^dagger."""
        values = func(self.eigenvalues)
        return (self.eigenvectors * values) @ dagger(self.eigenvectors)

    def reconstruct(self):
        return self.apply(lambda values: values)


def eigh(matrix):
    """Hermitian eigendecomposition with ascending eigenvalues."""
    hermitian = as_hermitian(matrix)
    try:
        values, vectors = scipy.linalg.eigh(hermitian)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise EigenSolverError(
            f"eigendecomposition failed for dim={hermitian.shape[0]}, "
            f"||H||_max={max_abs(hermitian):.3e}: {e}"
        ) from e
    spectrum = SpectralDecomposition(values.astype(float), vectors)
    error = max_abs(spectrum.reconstruct() - hermitian)
    if error > RECONSTRUCTION_TOL * max(1.0, max_abs(hermitian)):
        raise EigenSolverError(
            f"eigendecomposition inaccurate for dim={hermitian.shape[0]}, "
            f"||H||_max={max_abs(hermitian):.3e}: reconstruction error {error:.3e}"
        )
    return spectrum


# ---------------------------
# PSD PRIMITIVES
# ---------------------------
class PsdCheck(NamedTuple):
    passed: bool
    min_eigenvalue: float


def is_psd(matrix, tol=PSD_TOL):
    if tol < 0:
        raise PreconditionError(f"tol must be non-negative, got {tol}")
    lowest = eigh(matrix).min
    return PsdCheck(lowest >= -tol, lowest)


def sqrt_psd(matrix):
    spectrum = eigh(matrix)
    if spectrum.min < -SQRT_CLAMP_TOL:
        raise PreconditionError(
            f"sqrt_psd needs a PSD matrix, min eigenvalue is {spectrum.min:.3e}"
        )
    if spectrum.min < 0.0:
        logger.debug("sqrt_psd: clamping eigenvalue %.3e to 0", spectrum.min)
    return spectrum.apply(lambda values: np.sqrt(np.clip(values, 0.0, None)))


def _support_mask(values, rank_tol):
    top = float(np.max(values)) if len(values) else 0.0
    if top <= 0.0:
        return np.zeros(len(values), dtype=bool)
    return values > rank_tol * top


def pinv_psd(matrix, rank_tol=RANK_TOL):
    """Inverse on the support; eigenvalues <= rank_tol * lambda_max map to 0."""
    spectrum = eigh(matrix)
    keep = _support_mask(spectrum.eigenvalues, rank_tol)
    safe = np.where(keep, spectrum.eigenvalues, 1.0)
    return spectrum.apply(lambda values: np.where(keep, 1.0 / safe, 0.0))


def pinv_sqrt_psd(matrix, rank_tol=RANK_TOL):
    """pinv(sqrt(H)) computed from a single eigendecomposition."""
    spectrum = eigh(matrix)
    # the cutoff is applied to sqrt(lambda), matching pinv_psd(sqrt_psd(H), rank_tol)
    roots = np.sqrt(np.clip(spectrum.eigenvalues, 0.0, None))
    keep = _support_mask(roots, rank_tol)
    safe = np.where(keep, roots, 1.0)
    return spectrum.apply(lambda values: np.where(keep, 1.0 / safe, 0.0))


def trace_norm(matrix):
    return float(np.sum(np.abs(eigh(matrix).eigenvalues)))


def expi_hermitian(matrix, angle):
    """exp(i * angle * H) for Hermitian H, by spectral calculus."""
    return eigh(matrix).apply(lambda values: np.exp(1j * angle * values))


def projector_onto(spectrum, indices):
    vectors = spectrum.eigenvectors[:, list(indices)]
    return vectors @ dagger(vectors)


# ---------------------------
# RANDOM DRAWS
# ---------------------------
def random_unitary(rng, dim):
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    ginibre = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(ginibre)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_hermitian(rng, dim, scale=1.0):
    raw = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * symmetrize(raw)


def random_density_matrix(rng, dim, rank=None):
    """Random state rho = G G^dagger / Tr with G of shape (dim, rank)."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ dagger(g)
    return symmetrize(rho / np.trace(rho).real)
