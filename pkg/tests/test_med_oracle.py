import logging
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import mixed_qubit
from med_lab.ensemble_builder import Ensemble
from med_lab.errors import PreconditionError
from med_lab.med_certify import certify_optimal, success_probability
from med_lab.med_oracle import (
    fixed_point_solve,
    helstrom_two_state,
    random_ensemble,
    random_povm,
    srm,
    srm_gap,
)


# ---------------------------
# FIXED-POINT ITERATION
# ---------------------------
def test_oracle_orthogonal_pair(orthogonal_pair):
    result = fixed_point_solve(orthogonal_pair)
    assert result.converged
    assert result.p == pytest.approx(1.0, abs=1e-10)
    assert_allclose(result.povm.elements, orthogonal_pair.states, atol=1e-9)


def test_oracle_trine_is_certified(trine):
    result = fixed_point_solve(trine)
    assert result.converged
    assert result.p == pytest.approx(2 / 3, abs=1e-9)
    assert certify_optimal(trine, result.povm).passed


@pytest.mark.parametrize("p1", [0.3, 0.5, 0.6])
def test_oracle_matches_helstrom_for_two_mixed_qubits(p1):
    rho1, rho2 = mixed_qubit(0.7, 0.4, 0.0), mixed_qubit(0.5, 2.0, 1.0)
    ensemble = Ensemble([p1, 1 - p1], np.stack([rho1, rho2]))
    result = fixed_point_solve(ensemble)
    assert result.p == pytest.approx(helstrom_two_state(p1, rho1, 1 - p1, rho2), abs=1e-6)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_oracle_beats_random_povms(seed):
    ensemble = random_ensemble(2 + seed % 2, 3, seed)
    result = fixed_point_solve(ensemble)
    assert result.p >= ensemble.priors.max() - 1e-6
    for draw in range(50):
        assert success_probability(ensemble, random_povm(ensemble.dim, ensemble.count, draw)) <= result.p + 1e-6


def test_oracle_is_deterministic(equatorial_pair):
    first = fixed_point_solve(equatorial_pair, seed=3)
    second = fixed_point_solve(equatorial_pair, seed=3)
    assert_allclose(first.povm.elements, second.povm.elements, atol=0)
    assert first.to_dict() == second.to_dict()


def test_oracle_reports_non_convergence(equatorial_pair, caplog):
    with caplog.at_level(logging.WARNING, logger="med_lab.med_oracle"):
        result = fixed_point_solve(equatorial_pair, max_iter=1, restarts=2)
    assert not result.converged
    assert result.iterations == 1
    assert 0 <= result.restarts_used <= 2
    assert "did not converge" in caplog.text
    assert result.povm.is_valid()


def test_oracle_rejects_bad_max_iter(trine):
    with pytest.raises(PreconditionError):
        fixed_point_solve(trine, max_iter=0)


# ---------------------------
# SRM AND HELSTROM
# ---------------------------
def test_srm_orthogonal_and_trine(orthogonal_pair, trine):
    assert_allclose(srm(orthogonal_pair).elements, orthogonal_pair.states, atol=1e-12)
    assert_allclose(srm(trine).elements, 2 / 3 * np.asarray(trine.states), atol=1e-12)
    assert srm_gap(trine, 2 / 3) == pytest.approx(0.0, abs=1e-12)


def test_srm_completes_singular_average():
    pure = np.diag([1.0, 0.0])
    ensemble = Ensemble("equal", np.stack([pure, pure]))
    povm = srm(ensemble)
    assert povm.is_valid()
    assert_allclose(povm.elements.sum(axis=0), np.eye(2), atol=1e-12)
    assert success_probability(ensemble, povm) == pytest.approx(0.5)


def test_srm_is_suboptimal_for_mixed_pair(equatorial_pair):
    assert srm_gap(equatorial_pair, 0.8) > 0.05


def test_helstrom_examples():
    rho = mixed_qubit(0.4, 1.0, 0.5)
    assert helstrom_two_state(0.7, rho, 0.3, rho) == pytest.approx(0.7)
    assert helstrom_two_state(0.5, np.diag([1.0, 0.0]), 0.5, np.diag([0.0, 1.0])) == pytest.approx(1.0)
    plus, minus = mixed_qubit(0.6, math.pi / 2, 0.0), mixed_qubit(0.6, math.pi / 2, math.pi)
    assert helstrom_two_state(0.5, plus, 0.5, minus) == pytest.approx(0.8)


def test_helstrom_rejects_bad_priors():
    rho = np.eye(2) / 2
    with pytest.raises(PreconditionError):
        helstrom_two_state(0.7, rho, 0.4, rho)
    with pytest.raises(PreconditionError):
        helstrom_two_state(-0.1, rho, 1.1, rho)


# ---------------------------
# RANDOM DRAWS
# ---------------------------
def test_random_povm_single_element_is_identity():
    assert_allclose(random_povm(3, 1, seed=5).elements[0], np.eye(3), atol=1e-12)


@pytest.mark.parametrize("dim,count", [(2, 2), (2, 5), (4, 3)])
def test_random_povm_valid_and_deterministic(dim, count):
    povm = random_povm(dim, count, seed=11)
    assert povm.count == count and povm.dim == dim
    assert povm.is_valid()
    assert_allclose(povm.elements, random_povm(dim, count, seed=11).elements, atol=0)
    assert not np.allclose(povm.elements, random_povm(dim, count, seed=12).elements)


def test_random_povm_rejects_empty():
    with pytest.raises(PreconditionError):
        random_povm(2, 0, seed=1)


def test_random_ensemble_is_valid():
    ensemble = random_ensemble(3, 4, seed=9)
    assert ensemble.count == 4 and ensemble.dim == 3
    assert ensemble.priors.sum() == pytest.approx(1.0, abs=1e-12)
    assert_allclose(random_ensemble(3, 4, seed=9).states, ensemble.states, atol=0)
