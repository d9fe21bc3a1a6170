"""Closed-form optimal measurements for similarity-transformed, equiprobable ensembles.

Every solver builds a seed measurement operator Pi'_1 (trace d) orthogonal to
the seed conjugate state tau_1, rotates it with the generators, finds convex
weights lambda with sum_i lambda_i U_i Pi'_1 U_i^dagger = I, and re-certifies
the assembled POVM before labelling the result ``exact``.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
import scipy.linalg
import scipy.optimize

from .config import (
    CERTIFY_TOL,
    CLOSURE_TOL,
    COMPLETENESS_TOL,
    DEGENERACY_GUARD,
    EIGENSPACE_TOL,
    FEASIBILITY_TOL,
    LATITUDE_FIT_TOL,
    PSD_TOL,
)
from .ensemble_builder import (
    commutant_dimension,
    cyclic_spin_ensemble,
    group_closure_table,
    spin_operators,
)
from .ensemble_io import encode_matrix
from .errors import AssemblyError, DimensionMismatchError, PreconditionError
from .hermitian_core import as_hermitian, eigh, max_abs, projector_onto, symmetrize
from .med_certify import HelstromFamily, Povm, certify_optimal

logger = logging.getLogger(__name__)


class Applicability(str, enum.Enum):
    EXACT = "exact"
    INAPPLICABLE = "inapplicable"
    DEGENERATE_UNIFORM = "degenerate_uniform"


@dataclass(frozen=True, eq=False)
class ClosedFormSolution:
    """Result of a closed-form solve.

    ``p_opt`` is the formula value; for ``inapplicable`` results it is an upper
    bound candidate (or None when no formula applies) and ``povm`` is None.
    """

    p_opt: float | None
    pi_prime_1: np.ndarray | None
    tau_1: np.ndarray | None
    lambdas: np.ndarray | None
    povm: Povm | None
    applicability: Applicability
    note: str = ""

    @property
    def is_solved(self):
        return self.applicability is not Applicability.INAPPLICABLE

    @classmethod
    def inapplicable(cls, note, p_opt=None, tau_1=None, pi_prime_1=None, lambdas=None):
        return cls(p_opt, pi_prime_1, tau_1, lambdas, None, Applicability.INAPPLICABLE, note)

    def to_dict(self):
        return {
            "p_opt": None if self.p_opt is None else float(self.p_opt),
            "applicability": self.applicability.value,
            "lambdas": None if self.lambdas is None else [float(x) for x in self.lambdas],
            "pi_prime_1": None if self.pi_prime_1 is None else encode_matrix(self.pi_prime_1),
            "tau_1": None if self.tau_1 is None else encode_matrix(self.tau_1),
            "povm": None if self.povm is None else [encode_matrix(e) for e in self.povm.elements],
            "note": self.note,
        }


# ---------------------------
# FEASIBILITY AND ASSEMBLY
# ---------------------------
class Feasibility(NamedTuple):
    lambdas: np.ndarray
    residual: float
    feasible: bool


def _realify(matrix):
    """The d^2 real coordinates of a Hermitian matrix: diagonal, then Re/Im of the upper triangle."""
    rows, cols = np.triu_indices(matrix.shape[0], k=1)
    upper = matrix[rows, cols]
    return np.concatenate([np.diag(matrix).real, upper.real, upper.imag])


def _minimum_norm(system, target, start, bound):
    """Shortest lambda >= 0 with system @ lambda = target, or None when SLSQP loses accuracy."""
    # SLSQP needs independent equality rows
    basis = scipy.linalg.orth(system)
    reduced, reduced_target = basis.T @ system, basis.T @ target
    result = scipy.optimize.minimize(
        lambda x: x @ x, start, jac=lambda x: 2.0 * x, method="SLSQP",
        bounds=[(0.0, None)] * len(start),
        constraints=[{"type": "eq", "fun": lambda x: reduced @ x - reduced_target, "jac": lambda x: reduced}],
        options={"ftol": 1e-15, "maxiter": 500},
    )
    lambdas = np.clip(result.x, 0.0, None)
    residual = float(np.linalg.norm(system @ lambdas - target))
    if not result.success or residual > bound:
        logger.debug("minimum-norm refinement rejected (%s, residual %.3e)", result.message, residual)
        return None
    return lambdas, residual


def nnls_feasibility(pi_primes, tol=FEASIBILITY_TOL):
    """Solve sum_i lambda_i Pi'_i = I, sum_i lambda_i = 1, lambda >= 0.

    NNLS decides feasibility. A feasible active-set point is then moved to the
    minimum-norm solution; if that refinement fails the basic NNLS point is kept.
    """
    matrices = [as_hermitian(m, name=f"pi_primes[{i}]") for i, m in enumerate(pi_primes)]
    if not matrices:
        raise PreconditionError("nnls_feasibility needs at least one matrix")
    dim = matrices[0].shape[0]
    if any(m.shape != (dim, dim) for m in matrices):
        raise DimensionMismatchError("pi_primes have mixed dimensions")

    system = np.column_stack([np.append(_realify(m), 1.0) for m in matrices])
    target = np.append(_realify(np.eye(dim, dtype=complex)), 1.0)
    lambdas, residual = scipy.optimize.nnls(system, target)
    bound = tol * math.sqrt(dim * dim + 1)
    feasible = residual <= bound
    if feasible and len(matrices) > 1:
        refined = _minimum_norm(system, target, lambdas, max(10.0 * residual, 1e-10))
        if refined is not None:
            lambdas, residual = refined
    logger.debug("nnls feasibility: residual=%.3e feasible=%s", residual, feasible)
    return Feasibility(lambdas, float(residual), bool(feasible))


def assemble_povm(pi_prime_1, generators, lambdas, tol=COMPLETENESS_TOL):
    """Pi_i = lambda_i U_i Pi'_1 U_i^dagger."""
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.shape != (generators.count,):
        raise DimensionMismatchError(f"{len(lambdas)} weights for {generators.count} generators")
    elements = symmetrize(lambdas[:, None, None] * generators.conjugate(pi_prime_1))
    povm = Povm(elements)
    defect = povm.completeness_defect()
    if defect > tol:
        raise AssemblyError(f"assembled POVM misses the identity by {defect:.3e}; weights are stale")
    return povm


def _self_certified(ensemble, solution, tol=CERTIFY_TOL):
    """Downgrade a solved result to inapplicable unless its POVM certifies and reproduces p_opt."""
    if not solution.is_solved:
        return solution
    certificate = certify_optimal(ensemble, solution.povm, tol)
    gap = abs(certificate.success_probability - solution.p_opt)
    if certificate.passed and gap <= FEASIBILITY_TOL:
        return solution
    note = f"constructed POVM failed certification (margin_min={certificate.margin_min:.3e}, value gap={gap:.3e})"
    logger.info("closed form downgraded to inapplicable: %s", note)
    return replace(solution, povm=None, applicability=Applicability.INAPPLICABLE, note=note)


def _uniform_solution(ensemble, note):
    count = ensemble.count
    povm = Povm(np.broadcast_to(np.eye(ensemble.dim) / count, (count, ensemble.dim, ensemble.dim)))
    return ClosedFormSolution(
        p_opt=1.0 / count,
        pi_prime_1=np.eye(ensemble.dim, dtype=complex),
        tau_1=None,
        lambdas=np.full(count, 1.0 / count),
        povm=povm,
        applicability=Applicability.DEGENERATE_UNIFORM,
        note=note,
    )


def _require_equiprobable_orbit(ensemble):
    if ensemble.generators is None:
        raise PreconditionError("the ensemble has no generators")
    if not ensemble.has_equal_priors():
        raise PreconditionError("closed forms need equal priors")


# ---------------------------
# IRREDUCIBLE GENERATORS
# ---------------------------
def _irreducible_seed(ensemble, alphas=None):
    """(p_opt, tau_1, Pi'_1) from the spectrum of rho_1, or None for a maximally mixed seed."""
    d, count = ensemble.dim, ensemble.count
    spectrum = eigh(ensemble.states[0])
    a_max = spectrum.max
    denominator = d * a_max - 1.0
    if denominator <= DEGENERACY_GUARD:
        return None
    # b_i = (a_max - a_i) / (d a_max - 1); zero on the max eigenspace
    weights = (a_max - spectrum.eigenvalues) / denominator
    tau_1 = symmetrize(spectrum.apply(lambda _: weights))

    top = [i for i, value in enumerate(spectrum.eigenvalues) if value >= a_max - EIGENSPACE_TOL]
    if alphas is None:
        alphas = np.full(len(top), d / len(top))
    else:
        alphas = np.asarray(alphas, dtype=float)
        if alphas.shape != (len(top),):
            raise DimensionMismatchError(f"expected {len(top)} alphas for the max eigenspace, got {alphas.shape}")
        if np.any(alphas < 0) or abs(alphas.sum() - d) > FEASIBILITY_TOL:
            raise PreconditionError(f"alphas must be non-negative and sum to d={d}")
    vectors = spectrum.eigenvectors[:, top]
    pi_prime_1 = symmetrize((vectors * alphas) @ vectors.conj().T)
    return d * a_max / count, tau_1, pi_prime_1


def _require_irreducible(ensemble):
    _require_equiprobable_orbit(ensemble)
    dimension = commutant_dimension(ensemble.generators)
    if dimension != 1:
        raise PreconditionError(f"generators are reducible (commutant dimension {dimension})")


def solve_irreducible(ensemble, alphas=None):
    """p_opt = (d/N) a_max for an equiprobable orbit of an irreducible generating set."""
    _require_irreducible(ensemble)
    seed = _irreducible_seed(ensemble, alphas)
    if seed is None:
        return _self_certified(ensemble, _uniform_solution(ensemble, "maximally mixed seed"))
    p_opt, tau_1, pi_prime_1 = seed

    feasibility = nnls_feasibility(ensemble.generators.conjugate(pi_prime_1))
    if not feasibility.feasible:
        return ClosedFormSolution.inapplicable(
            f"identity is not in the convex hull of the rotated seed measurements (residual {feasibility.residual:.3e})",
            p_opt=p_opt, tau_1=tau_1, pi_prime_1=pi_prime_1, lambdas=feasibility.lambdas,
        )
    povm = assemble_povm(pi_prime_1, ensemble.generators, feasibility.lambdas)
    solution = ClosedFormSolution(p_opt, pi_prime_1, tau_1, feasibility.lambdas, povm, Applicability.EXACT)
    return _self_certified(ensemble, solution)


def solve_group_covariant(ensemble, alphas=None):
    """Uniform weights lambda_g = 1/|G| for an orbit of a closed irreducible group."""
    _require_irreducible(ensemble)
    if group_closure_table(ensemble.generators, CLOSURE_TOL) is None:
        raise PreconditionError("generators are not closed under products")
    seed = _irreducible_seed(ensemble, alphas)
    if seed is None:
        return _self_certified(ensemble, _uniform_solution(ensemble, "maximally mixed seed"))
    p_opt, tau_1, pi_prime_1 = seed

    count = ensemble.count
    lambdas = np.full(count, 1.0 / count)
    average = ensemble.generators.conjugate(pi_prime_1).sum(axis=0) / count
    defect = max_abs(average - np.eye(ensemble.dim))
    if defect > COMPLETENESS_TOL:
        raise AssemblyError(f"group average of Pi'_1 misses the identity by {defect:.3e}")
    povm = assemble_povm(pi_prime_1, ensemble.generators, lambdas)
    solution = ClosedFormSolution(p_opt, pi_prime_1, tau_1, lambdas, povm, Applicability.EXACT)
    return _self_certified(ensemble, solution)


# ---------------------------
# SPIN LATITUDE ORBITS
# ---------------------------
def _latitude_solution(ensemble, two_j, a, theta, phi):
    d, count = two_j + 1, ensemble.count
    sin_theta = math.sin(theta)
    if a * abs(sin_theta) <= DEGENERACY_GUARD:
        return _self_certified(ensemble, _uniform_solution(ensemble, "seed commutes with Jz; all states coincide"))
    if sin_theta < 0:
        # same axis written with theta in [0, pi]
        sin_theta, phi = -sin_theta, phi + math.pi

    p_opt = (1.0 + a * two_j * sin_theta) / count
    jx, jy, _ = spin_operators(two_j)
    # conjugate axis theta' = pi/2, phi' = pi + phi; b = 1/(2j) puts a zero in the spectrum
    tau_1 = (np.eye(d) - (2.0 / two_j) * (math.cos(phi) * jx + math.sin(phi) * jy)) / d
    spectrum = eigh(tau_1)
    null = [i for i, value in enumerate(spectrum.eigenvalues) if value <= EIGENSPACE_TOL]
    pi_prime_1 = symmetrize(d / len(null) * projector_onto(spectrum, null))

    feasibility = nnls_feasibility(ensemble.generators.conjugate(pi_prime_1))
    if not feasibility.feasible:
        return ClosedFormSolution.inapplicable(
            f"identity is not in the convex hull of the rotated seed measurements (residual {feasibility.residual:.3e})",
            p_opt=p_opt, tau_1=tau_1, pi_prime_1=pi_prime_1, lambdas=feasibility.lambdas,
        )
    povm = assemble_povm(pi_prime_1, ensemble.generators, feasibility.lambdas)
    solution = ClosedFormSolution(p_opt, pi_prime_1, tau_1, feasibility.lambdas, povm, Applicability.EXACT)
    return _self_certified(ensemble, solution)


def solve_spin_latitude(params):
    """p_opt = (1/N)[1 + a (d - 1) sin(theta)] for the cyclic spin-j latitude orbit."""
    ensemble = cyclic_spin_ensemble(params)
    return _latitude_solution(ensemble, params.two_j, params.a, params.theta, params.phi)


def latitude_parameters(seed, two_j, tol=LATITUDE_FIT_TOL):
    """Recover (a, theta, phi) from a seed of the form (I + 2a n.J)/d."""
    operators = spin_operators(two_j)
    j = two_j / 2.0
    d = two_j + 1
    # Tr(J_k J_l) = delta_kl j(j+1)(2j+1)/3
    components = np.array([3.0 * np.trace(seed @ op).real / (2.0 * j * (j + 1)) for op in operators])
    rebuilt = (np.eye(d) + 2.0 * sum(c * op for c, op in zip(components, operators))) / d
    misfit = max_abs(rebuilt - seed)
    if misfit > tol:
        raise PreconditionError(f"seed is not of the form (I + 2a n.J)/d (misfit {misfit:.3e})")
    a = float(np.linalg.norm(components))
    if a <= DEGENERACY_GUARD:
        return 0.0, 0.0, 0.0
    theta = math.acos(max(-1.0, min(1.0, components[2] / a)))
    phi = math.atan2(components[1], components[0])
    return a, theta, phi


def solve_latitude_ensemble(ensemble):
    """Latitude solve for any equiprobable orbit under (not necessarily cyclic) z-rotations."""
    _require_equiprobable_orbit(ensemble)
    if not ensemble.generators.is_diagonal():
        raise PreconditionError("latitude solve needs generators that are rotations about z")
    two_j = ensemble.dim - 1
    if two_j < 1:
        raise PreconditionError("latitude solve needs dim >= 2")
    a, theta, phi = latitude_parameters(ensemble.states[0], two_j)
    return _latitude_solution(ensemble, two_j, a, theta, phi)


# ---------------------------
# FAMILY AND DISPATCH
# ---------------------------
def closed_form_family(solution, ensemble, tol=CERTIFY_TOL):
    """Weak Helstrom family (p_opt, U_i tau_1 U_i^dagger) implied by a closed form."""
    if ensemble.generators is None:
        raise PreconditionError("the ensemble has no generators")
    if solution.p_opt is None or solution.tau_1 is None:
        raise PreconditionError("the solution carries no conjugate state")
    lowest = eigh(solution.tau_1).min
    trace = float(np.trace(solution.tau_1).real)
    if lowest < -PSD_TOL or abs(trace - 1.0) > PSD_TOL:
        raise PreconditionError(f"tau_1 is not a state (min eigenvalue {lowest:.3e}, trace {trace:.12g})")
    conjugates = symmetrize(ensemble.generators.conjugate(solution.tau_1))
    flags = tuple(bool(solution.p_opt - p_j <= tol) for p_j in ensemble.priors)
    taus = tuple(None if flag else tau for flag, tau in zip(flags, conjugates))
    return HelstromFamily(solution.p_opt, taus, flags, ensemble.priors)


def solve_closed_form(ensemble):
    """Pick the applicable closed form; inapplicable (never an exception) when none fits."""
    if ensemble.generators is None:
        return ClosedFormSolution.inapplicable("ensemble has no generators")
    if not ensemble.has_equal_priors():
        return ClosedFormSolution.inapplicable("priors are not equal")
    if commutant_dimension(ensemble.generators) == 1:
        if group_closure_table(ensemble.generators, CLOSURE_TOL) is not None:
            return solve_group_covariant(ensemble)
        return solve_irreducible(ensemble)
    if ensemble.generators.is_diagonal() and ensemble.dim >= 2:
        try:
            return solve_latitude_ensemble(ensemble)
        except PreconditionError as e:
            return ClosedFormSolution.inapplicable(str(e))
    return ClosedFormSolution.inapplicable("reducible generators without latitude structure")
