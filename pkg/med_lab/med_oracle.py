"""Numerical solvers independent of the closed forms.

``fixed_point_solve`` iterates Pi_j <- T+ (p_j rho_j Pi_j rho_j p_j) T+ with
T = sqrt(sum_k p_k^2 rho_k Pi_k rho_k), a scheme whose fixed points satisfy the
optimality conditions. The square-root measurement, the two-state Helstrom
value and random POVM draws serve as cross-checks and fuzz inputs.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .config import (
    COMPLETENESS_REPROJECT_TOL,
    DEFAULT_SEED,
    MONOTONE_SLACK,
    ORACLE_MAX_ITER,
    ORACLE_RANK_TOL,
    ORACLE_RESTART_MIX,
    ORACLE_RESTARTS,
    ORACLE_STEP_TOL,
    PRIOR_SUM_TOL,
    RANDOM_POVM_RETRIES,
    RANK_TOL,
)
from .ensemble_builder import Ensemble, density_matrix
from .errors import PreconditionError, SingularDrawError
from .hermitian_core import (
    dagger,
    eigh,
    max_abs,
    pinv_sqrt_psd,
    random_density_matrix,
    symmetrize,
    trace_norm,
)
from .med_certify import Povm, success_probability

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class OracleResult:
    povm: Povm
    p: float
    iterations: int
    converged: bool
    final_step_norm: float
    restarts_used: int = 0

    def to_dict(self):
        return {
            "p": self.p,
            "iterations": self.iterations,
            "converged": self.converged,
            "final_step_norm": self.final_step_norm,
            "restarts_used": self.restarts_used,
        }


def _complete(elements):
    """Add (I - sum Pi)/N to every element when the identity defect exceeds the reprojection tolerance."""
    count, dim = elements.shape[0], elements.shape[1]
    defect = np.eye(dim) - elements.sum(axis=0)
    if max_abs(defect) > COMPLETENESS_REPROJECT_TOL:
        elements = elements + defect / count
    return elements


def _value(weighted, elements):
    return float(np.einsum("ijk,ikj->", weighted, elements).real)


# ---------------------------
# FIXED-POINT ITERATION
# ---------------------------
def _iterate(ensemble, start, max_iter, step_tol):
    weighted = ensemble.weighted_states()
    elements = start
    previous = _value(weighted, elements)
    step = float("inf")
    for iteration in range(1, max_iter + 1):
        numerators = weighted @ elements @ weighted
        t_plus = pinv_sqrt_psd(numerators.sum(axis=0), ORACLE_RANK_TOL)
        updated = _complete(symmetrize(t_plus @ numerators @ t_plus))
        step = max_abs(updated - elements)
        elements = updated

        value = _value(weighted, elements)
        if value < previous - MONOTONE_SLACK:
            logger.warning("success probability decreased at iteration %d: %.12g -> %.12g", iteration, previous, value)
        previous = value
        if step <= step_tol:
            return elements, iteration, True, step
    return elements, max_iter, False, step


def fixed_point_solve(ensemble, max_iter=ORACLE_MAX_ITER, step_tol=ORACLE_STEP_TOL, seed=DEFAULT_SEED,
                      restarts=ORACLE_RESTARTS):
    """Iterate from Pi_j = I/N; on non-convergence retry from seeded random interior points."""
    if max_iter < 1:
        raise PreconditionError(f"max_iter must be >= 1, got {max_iter}")
    count, dim = ensemble.count, ensemble.dim
    uniform = np.broadcast_to(np.eye(dim, dtype=complex) / count, (count, dim, dim)).copy()
    rng = np.random.default_rng(seed)

    elements, iterations, converged, step = _iterate(ensemble, uniform, max_iter, step_tol)
    best = (elements, iterations, converged, step, 0)
    attempt = 0
    while not best[2] and attempt < restarts:
        attempt += 1
        logger.warning("oracle not converged after %d iterations (step %.3e); restart %d/%d",
                       best[1], best[3], attempt, restarts)
        draw = random_povm(dim, count, int(rng.integers(2**31)))
        start = (1.0 - ORACLE_RESTART_MIX) * uniform + ORACLE_RESTART_MIX * draw.elements
        elements, iterations, converged, step = _iterate(ensemble, start, max_iter, step_tol)
        weighted = ensemble.weighted_states()
        if converged or _value(weighted, elements) > _value(weighted, best[0]):
            best = (elements, iterations, converged, step, attempt)

    elements, iterations, converged, step, used = best
    if not converged:
        logger.warning("oracle did not converge; reporting best found (step %.3e)", step)
    povm = Povm(elements)
    return OracleResult(povm, success_probability(ensemble, povm), iterations, converged, step, used)


# ---------------------------
# SQUARE-ROOT MEASUREMENT
# ---------------------------
def srm(ensemble):
    """Pi_i = rho_bar^{-1/2} p_i rho_i rho_bar^{-1/2}, completed on the kernel of rho_bar."""
    root = pinv_sqrt_psd(ensemble.average_state(), ORACLE_RANK_TOL)
    elements = symmetrize(root @ ensemble.weighted_states() @ root)
    completed = _complete(elements)
    if completed is not elements:
        logger.debug("srm: average state is singular; identity defect spread over %d elements", ensemble.count)
    return Povm(completed)


def srm_gap(ensemble, p_opt):
    """p_opt minus the SRM success probability."""
    return p_opt - success_probability(ensemble, srm(ensemble))


def helstrom_two_state(p1, rho1, p2, rho2):
    """(1 + ||p1 rho1 - p2 rho2||_1) / 2."""
    if p1 < 0 or p2 < 0 or abs(p1 + p2 - 1.0) > PRIOR_SUM_TOL:
        raise PreconditionError(f"priors must be non-negative and sum to 1, got {p1} and {p2}")
    rho1 = density_matrix(rho1, name="rho1")
    rho2 = density_matrix(rho2, name="rho2")
    return 0.5 * (1.0 + trace_norm(p1 * rho1 - p2 * rho2))


# ---------------------------
# RANDOM DRAWS
# ---------------------------
def random_povm(dim, count, seed):
    """S^{-1/2} A_i S^{-1/2} with A_i = G_i^dagger G_i Gaussian; deterministic per seed."""
    if count < 1 or dim < 1:
        raise PreconditionError(f"dim and count must be positive, got dim={dim} count={count}")
    rng = np.random.default_rng(seed)
    for _ in range(RANDOM_POVM_RETRIES):
        g = rng.normal(size=(count, dim, dim)) + 1j * rng.normal(size=(count, dim, dim))
        a = symmetrize(dagger(g) @ g)
        total = a.sum(axis=0)
        spectrum = eigh(total)
        if spectrum.min <= RANK_TOL * spectrum.max:
            continue
        root = pinv_sqrt_psd(total)
        return Povm(symmetrize(root @ a @ root))
    raise SingularDrawError(f"random POVM draw singular after {RANDOM_POVM_RETRIES} attempts (seed {seed})")


def random_ensemble(dim, count, seed):
    """Random priors (Dirichlet) and states of random rank; used by the soundness fuzz."""
    rng = np.random.default_rng(seed)
    priors = rng.dirichlet(np.ones(count))
    priors = priors / priors.sum()
    states = [random_density_matrix(rng, dim, int(rng.integers(1, dim + 1))) for _ in range(count)]
    return Ensemble(priors, np.stack(states))
