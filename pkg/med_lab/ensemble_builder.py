"""Construction and validation of the ensembles to discriminate.

Covers explicit state lists, similarity-transformed orbits of a unitary
generating set, spin-j rotation orbits and common-latitude Bloch qubits.
The on-disk format lives in :mod:`med_lab.ensemble_io`.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .config import (
    CLOSURE_TOL,
    COMMUTANT_RCOND,
    ORBIT_TOL,
    PRIOR_SUM_TOL,
    PSD_TOL,
    TRACE_TOL,
    UNITARY_TOL,
)
from .errors import DimensionMismatchError, PreconditionError
from .hermitian_core import (
    as_hermitian,
    dagger,
    eigh,
    expi_hermitian,
    max_abs,
)

logger = logging.getLogger(__name__)


def _frozen(array):
    array = np.array(array)
    array.setflags(write=False)
    return array


# ---------------------------
# STATES
# ---------------------------
def density_matrix(matrix, tol=PSD_TOL, trace_tol=TRACE_TOL, name="state"):
    """Validate a density matrix (Hermitian, PSD within tol, unit trace) and return it."""
    rho = as_hermitian(matrix, name=name)
    trace = float(np.trace(rho).real)
    if abs(trace - 1.0) > trace_tol:
        raise PreconditionError(f"{name} has trace {trace:.12g}, expected 1")
    lowest = eigh(rho).min
    if lowest < -tol:
        raise PreconditionError(f"{name} is not PSD (min eigenvalue {lowest:.3e})")
    return _frozen(rho)


def pauli_matrices():
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    return sx, sy, sz


def bloch_vector(a, theta, phi):
    return a * np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])


def bloch_state(vector):
    """Qubit state (I + r.sigma)/2 for a Bloch vector with |r| <= 1."""
    vector = np.asarray(vector, dtype=float)
    if vector.shape != (3,):
        raise DimensionMismatchError(f"Bloch vector must have 3 components, got {vector.shape}")
    if np.linalg.norm(vector) > 1.0 + 1e-12:
        raise PreconditionError(f"Bloch vector length {np.linalg.norm(vector):.6g} exceeds 1")
    sx, sy, sz = pauli_matrices()
    rho = 0.5 * (np.eye(2) + vector[0] * sx + vector[1] * sy + vector[2] * sz)
    return density_matrix(rho, name="bloch state")


# ---------------------------
# SPIN OPERATORS
# ---------------------------
def spin_operators(two_j):
    """Angular-momentum matrices (Jx, Jy, Jz) for spin j = two_j / 2, basis m = j, j-1, ..., -j."""
    if isinstance(two_j, bool) or not isinstance(two_j, (int, np.integer)) or two_j < 1:
        raise PreconditionError(f"two_j must be a positive integer, got {two_j!r}")
    j = two_j / 2.0
    m = j - np.arange(two_j + 1)
    jz = np.diag(m).astype(complex)
    # <m+1|J+|m> = sqrt(j(j+1) - m(m+1)); row k holds m_k, so J+ sits on the superdiagonal
    raising = np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1))
    j_plus = np.diag(raising, k=1).astype(complex)
    j_minus = dagger(j_plus)
    jx = 0.5 * (j_plus + j_minus)
    jy = (j_plus - j_minus) / 2j
    return jx, jy, jz


def z_rotation(two_j, angle):
    """exp(-i * angle * Jz), a rotation by ``angle`` about z."""
    _, _, jz = spin_operators(two_j)
    return expi_hermitian(jz, -angle)


# ---------------------------
# UNITARY SETS
# ---------------------------
@dataclass(frozen=True, eq=False)
class UnitarySet:
    """Ordered generators U_1 = I, U_2, ..., U_N."""

    unitaries: np.ndarray

    def __post_init__(self):
        stack = np.array(self.unitaries, dtype=complex)
        if stack.ndim != 3 or stack.shape[1] != stack.shape[2] or stack.shape[0] == 0:
            raise DimensionMismatchError(f"unitaries must be a non-empty stack of square matrices, got {stack.shape}")
        dim = stack.shape[1]
        identity = np.eye(dim)
        if max_abs(stack[0] - identity) > 1e-10:
            raise PreconditionError("the first generator must be the identity")
        for i, u in enumerate(stack):
            defect = max_abs(dagger(u) @ u - identity)
            if defect > UNITARY_TOL:
                raise PreconditionError(f"generator {i + 1} is not unitary (defect {defect:.3e})")
        object.__setattr__(self, "unitaries", _frozen(stack))

    @property
    def dim(self):
        return self.unitaries.shape[1]

    @property
    def count(self):
        return self.unitaries.shape[0]

    def conjugate(self, matrix):
        """Stack of U_i X U_i^dagger."""
        return self.unitaries @ matrix @ dagger(self.unitaries)

    def is_diagonal(self, tol=UNITARY_TOL):
        off = self.unitaries * (1 - np.eye(self.dim))
        return max_abs(off) <= tol


def commutant_dimension(unitaries, rcond=COMMUTANT_RCOND):
    """dim {X : X U_i = U_i X for all i}; equals 1 iff the generated representation is irreducible."""
    stack = unitaries.unitaries if isinstance(unitaries, UnitarySet) else np.asarray(unitaries, dtype=complex)
    dim = stack.shape[1]
    identity = np.eye(dim)
    # row-major vec: vec(U X - X U) = (U kron I - I kron U^T) vec(X)
    blocks = [np.kron(u, identity) - np.kron(identity, u.T) for u in stack]
    system = np.vstack(blocks)
    return int(scipy.linalg.null_space(system, rcond=rcond).shape[1])


def group_closure_table(unitaries, tol=CLOSURE_TOL):
    """table[i, k] = index of U_i U_k in the list, or None if the list is not closed."""
    stack = unitaries.unitaries if isinstance(unitaries, UnitarySet) else np.asarray(unitaries, dtype=complex)
    count = len(stack)
    table = np.full((count, count), -1, dtype=int)
    for i in range(count):
        products = stack[i] @ stack
        for k, product in enumerate(products):
            distances = np.max(np.abs(stack - product), axis=(1, 2))
            match = int(np.argmin(distances))
            if distances[match] > tol:
                logger.debug("U_%d U_%d is not in the list (distance %.3e)", i, k, distances[match])
                return None
            table[i, k] = match
    return table


# ---------------------------
# ENSEMBLES
# ---------------------------
def normalize_priors(priors, count):
    if isinstance(priors, str):
        if priors != "equal":
            raise PreconditionError(f"priors must be a vector or 'equal', got {priors!r}")
        return np.full(count, 1.0 / count)
    vector = np.asarray(priors, dtype=float)
    if vector.shape != (count,):
        raise DimensionMismatchError(f"expected {count} priors, got shape {vector.shape}")
    if np.any(vector < 0) or not np.all(np.isfinite(vector)):
        raise PreconditionError("priors must be finite and non-negative")
    if abs(vector.sum() - 1.0) > PRIOR_SUM_TOL:
        raise PreconditionError(f"priors sum to {vector.sum():.12g}, expected 1")
    return vector


@dataclass(frozen=True, eq=False)
class Ensemble:
    priors: np.ndarray
    states: np.ndarray
    generators: UnitarySet | None = None

    def __post_init__(self):
        states = [density_matrix(rho, name=f"states[{i}]") for i, rho in enumerate(self.states)]
        if not states:
            raise PreconditionError("an ensemble needs at least one state")
        dims = {rho.shape[0] for rho in states}
        if len(dims) != 1:
            raise DimensionMismatchError(f"states have mixed dimensions {sorted(dims)}")
        stack = np.stack(states)
        priors = normalize_priors(self.priors, len(stack))
        if self.generators is not None:
            if self.generators.count != len(stack) or self.generators.dim != stack.shape[1]:
                raise DimensionMismatchError(
                    f"{self.generators.count} generators of dim {self.generators.dim} "
                    f"for {len(stack)} states of dim {stack.shape[1]}"
                )
            orbit = self.generators.conjugate(stack[0])
            defect = max_abs(orbit - stack)
            if defect > ORBIT_TOL:
                raise PreconditionError(f"states are not the generator orbit of states[0] (defect {defect:.3e})")
        object.__setattr__(self, "states", _frozen(stack))
        object.__setattr__(self, "priors", _frozen(priors))

    @property
    def dim(self):
        return self.states.shape[1]

    @property
    def count(self):
        return self.states.shape[0]

    def has_equal_priors(self, tol=PRIOR_SUM_TOL):
        return bool(np.all(np.abs(self.priors - 1.0 / self.count) <= tol))

    def weighted_states(self):
        return self.priors[:, None, None] * self.states

    def average_state(self):
        return self.weighted_states().sum(axis=0)

    def conjugated_by(self, unitary):
        """The same ensemble with every state (and generator) conjugated by one fixed unitary."""
        w = np.asarray(unitary, dtype=complex)
        generators = None
        if self.generators is not None:
            generators = UnitarySet(w @ self.generators.unitaries @ dagger(w))
        return Ensemble(self.priors, w @ self.states @ dagger(w), generators)


def similarity_ensemble(seed, unitaries, priors="equal"):
    """States rho_i = U_i rho_1 U_i^dagger with the generators kept on the ensemble."""
    rho = density_matrix(seed, name="seed")
    if not isinstance(unitaries, UnitarySet):
        unitaries = UnitarySet(unitaries)
    if unitaries.dim != rho.shape[0]:
        raise DimensionMismatchError(f"seed has dim {rho.shape[0]}, generators have dim {unitaries.dim}")
    return Ensemble(priors, unitaries.conjugate(rho), unitaries)


@dataclass(frozen=True)
class SpinLatitudeParams:
    """rho_1 = (I + 2a n.J)/d rotated N times about z; spin j = two_j / 2."""

    two_j: int
    a: float
    theta: float
    phi: float
    n: int

    def __post_init__(self):
        if isinstance(self.two_j, bool) or not isinstance(self.two_j, (int, np.integer)) or self.two_j < 1:
            raise PreconditionError(f"two_j must be a positive integer, got {self.two_j!r}")
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or self.n < 2:
            raise PreconditionError(f"n must be an integer >= 2, got {self.n!r}")
        if not 0.0 <= self.a <= 1.0 / self.two_j + 1e-12:
            raise PreconditionError(f"a must lie in [0, 1/(2j)] = [0, {1.0 / self.two_j:.6g}], got {self.a}")

    @property
    def j(self):
        return self.two_j / 2.0

    @property
    def dim(self):
        return self.two_j + 1

    @property
    def axis(self):
        return bloch_vector(1.0, self.theta, self.phi)

    def formula_p_opt(self):
        """(1/N)[1 + a (d - 1) sin(theta)]."""
        return (1.0 + self.a * self.two_j * math.sin(self.theta)) / self.n


def spin_seed(two_j, a, axis):
    jx, jy, jz = spin_operators(two_j)
    d = two_j + 1
    n_dot_j = axis[0] * jx + axis[1] * jy + axis[2] * jz
    return (np.eye(d) + 2.0 * a * n_dot_j) / d


def cyclic_spin_ensemble(params):
    """Equiprobable orbit rho_k = U_k rho_1 U_k^dagger with U_k = exp(2 pi i (k-1) Jz / N)."""
    _, _, jz = spin_operators(params.two_j)
    seed = spin_seed(params.two_j, params.a, params.axis)
    unitaries = [expi_hermitian(jz, 2.0 * math.pi * k / params.n) for k in range(params.n)]
    return similarity_ensemble(seed, unitaries, "equal")


def bloch_latitude_ensemble(a, theta, phis):
    """Equiprobable qubits with Bloch vectors (a sin t cos phi_j, a sin t sin phi_j, a cos t)."""
    if not 0.0 <= a <= 1.0:
        raise PreconditionError(f"a must lie in [0, 1], got {a}")
    phis = [float(phi) for phi in phis]
    if not phis:
        raise PreconditionError("phis must not be empty")
    if abs(phis[0]) > 1e-12:
        raise PreconditionError(f"phis[0] must be 0, got {phis[0]}")
    wrapped = np.mod(phis, 2.0 * math.pi)
    for i in range(len(wrapped)):
        for k in range(i):
            gap = abs(wrapped[i] - wrapped[k])
            if min(gap, 2.0 * math.pi - gap) < 1e-12:
                raise PreconditionError(f"phis[{k}] and phis[{i}] coincide modulo 2 pi")
    seed = bloch_state(bloch_vector(a, theta, 0.0))
    # exp(-i phi sigma_z / 2) = diag(e^{-i phi/2}, e^{i phi/2})
    unitaries = [np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)]) for phi in phis]
    return similarity_ensemble(seed, unitaries, "equal")


def pauli_orbit_ensemble(seed, count):
    """Orbit of a qubit seed under the first ``count`` of {I, X, Z, Y}; irreducible for count >= 3."""
    if count not in (2, 3, 4):
        raise PreconditionError(f"count must be 2, 3 or 4, got {count}")
    sx, sy, sz = pauli_matrices()
    unitaries = [np.eye(2, dtype=complex), sx, sz, sy][:count]
    return similarity_ensemble(seed, unitaries, "equal")
