import math

import numpy as np
import pytest

from med_lab.ensemble_builder import (
    Ensemble,
    bloch_latitude_ensemble,
    bloch_state,
    bloch_vector,
    similarity_ensemble,
)
from med_lab.med_certify import Povm

TRINE_PHIS = [0.0, 2 * math.pi / 3, 4 * math.pi / 3]


def equally_spaced(n):
    return [2 * math.pi * k / n for k in range(n)]


def dihedral_unitaries():
    """Real 2x2 rep of S3: rotations by 0, 120, 240 degrees then three reflections. Closed and irreducible."""
    rotations = []
    for k in range(3):
        t = 2 * math.pi * k / 3
        rotations.append(np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]], dtype=complex))
    flip = np.array([[1, 0], [0, -1]], dtype=complex)
    return np.stack(rotations + [r @ flip for r in rotations])


def quaternion_unitaries():
    """{+-I, +-iX, +-iY, +-iZ}, the quaternion group Q8 in SU(2)."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    eye = np.eye(2, dtype=complex)
    base = [eye, 1j * sx, 1j * sy, 1j * sz]
    return np.stack(base + [-u for u in base])


@pytest.fixture
def trine():
    return bloch_latitude_ensemble(1.0, math.pi / 2, TRINE_PHIS)


@pytest.fixture
def orthogonal_pair():
    states = np.stack([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]).astype(complex)
    return Ensemble([0.5, 0.5], states)


@pytest.fixture
def projective_povm():
    return Povm(np.stack([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]))


@pytest.fixture
def equatorial_pair():
    return bloch_latitude_ensemble(0.6, math.pi / 2, [0.0, math.pi])


@pytest.fixture
def dihedral_pure():
    return similarity_ensemble(np.diag([1.0, 0.0]), dihedral_unitaries())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def mixed_qubit(a, theta, phi):
    return bloch_state(bloch_vector(a, theta, phi))


def adapted_qutrit_generators(seed):
    """[I, V S V^dagger, V S^2 D V^dagger] with V the eigenbasis of seed, top eigenvector first.

    The generated set is irreducible (D has distinct phases) and maps the top
    eigenvector onto an orthonormal basis, so the irreducible closed form is feasible.
    """
    _, vectors = np.linalg.eigh(seed)
    v = vectors[:, ::-1]
    shift = np.roll(np.eye(3), 1, axis=0).astype(complex)
    phases = np.diag([1.0, 1j, -1.0])
    return np.stack([np.eye(3, dtype=complex), v @ shift @ v.conj().T, v @ shift @ shift @ phases @ v.conj().T])
