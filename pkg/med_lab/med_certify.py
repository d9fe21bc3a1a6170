"""Optimality machinery for minimum-error discrimination.

For an ensemble {p_i, rho_i} and POVM {Pi_i} the Lagrange operator is
M = sum_i p_i rho_i Pi_i. The POVM is optimal iff M is Hermitian and
M - p_j rho_j is PSD for every j. At the optimum M = p_j rho_j + (p - p_j) tau_j
defines the conjugate states tau_j of a Helstrom family with ratio p equal to the
optimal success probability.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .config import (
    CERTIFY_TOL,
    COMPLETENESS_TOL,
    PROBABILITY_SLACK,
    PSD_TOL,
    RATIO_BOUND_SLACK,
)
from .errors import CertificationError, DimensionMismatchError, ExtractionError
from .hermitian_core import dagger, eigh, hermitian_defect, max_abs, symmetrize

logger = logging.getLogger(__name__)


# ---------------------------
# POVM
# ---------------------------
@dataclass(frozen=True, eq=False)
class Povm:
    """Measurement elements Pi_1..Pi_N.

    Construction only checks shape; validity (PSD, completeness) is a property
    queried with :meth:`is_valid`, so invalid POVMs can still be certified (and fail).
    """

    elements: np.ndarray

    def __post_init__(self):
        stack = np.array(self.elements, dtype=complex)
        if stack.ndim != 3 or stack.shape[1] != stack.shape[2] or stack.shape[0] == 0:
            raise DimensionMismatchError(f"POVM elements must be a non-empty stack of square matrices, got {stack.shape}")
        stack.setflags(write=False)
        object.__setattr__(self, "elements", stack)

    @property
    def dim(self):
        return self.elements.shape[1]

    @property
    def count(self):
        return self.elements.shape[0]

    def completeness_defect(self):
        return max_abs(self.elements.sum(axis=0) - np.eye(self.dim))

    def min_eigenvalue(self):
        return min(eigh(symmetrize(e)).min for e in self.elements)

    def is_valid(self, psd_tol=PSD_TOL, completeness_tol=COMPLETENESS_TOL):
        return self.min_eigenvalue() >= -psd_tol and self.completeness_defect() <= completeness_tol

    def conjugated_by(self, unitary):
        w = np.asarray(unitary, dtype=complex)
        return Povm(w @ self.elements @ dagger(w))


def _check_sizes(ensemble, povm):
    if povm.dim != ensemble.dim:
        raise DimensionMismatchError(f"POVM has dim {povm.dim}, ensemble has dim {ensemble.dim}")
    if povm.count != ensemble.count:
        raise DimensionMismatchError(f"POVM has {povm.count} elements, ensemble has {ensemble.count} states")


def success_probability(ensemble, povm):
    """sum_i p_i Tr(rho_i Pi_i)."""
    _check_sizes(ensemble, povm)
    value = float(np.einsum("i,ijk,ikj->", ensemble.priors, ensemble.states, povm.elements).real)
    if not -PROBABILITY_SLACK <= value <= 1.0 + PROBABILITY_SLACK:
        logger.warning("success probability %.12g outside [0, 1]; clamping (is the POVM valid?)", value)
        value = min(max(value, 0.0), 1.0)
    return value


# ---------------------------
# LAGRANGE OPERATOR
# ---------------------------
@dataclass(frozen=True, eq=False)
class LagrangeOperator:
    matrix: np.ndarray
    hermiticity_defect: float

    @property
    def symmetric(self):
        return symmetrize(self.matrix)

    @property
    def trace(self):
        return float(np.trace(self.matrix).real)

    def commutation_defect(self, unitaries):
        """max_i ||M U_i - U_i M||_max."""
        stack = unitaries.unitaries if hasattr(unitaries, "unitaries") else np.asarray(unitaries)
        return max(max_abs(self.matrix @ u - u @ self.matrix) for u in stack)


def lagrange_operator(ensemble, povm):
    _check_sizes(ensemble, povm)
    matrix = np.einsum("i,ijk,ikl->jl", ensemble.priors, ensemble.states, povm.elements)
    return LagrangeOperator(matrix, hermitian_defect(matrix))


# ---------------------------
# HELSTROM FAMILY
# ---------------------------
@dataclass(frozen=True, eq=False)
class HelstromFamily:
    """Helstrom ratio p and conjugate states; ``conjugates[j]`` is None where p == p_j."""

    ratio: float
    conjugates: tuple
    degenerate_flags: tuple
    priors: np.ndarray = field(repr=False)
    outcome_weights: tuple | None = None

    @property
    def binary_weights(self):
        """p~_i = p_i / p, the binary discrimination weights of the family."""
        return self.priors / self.ratio

    def min_eigenvalues(self):
        return [None if tau is None else eigh(tau).min for tau in self.conjugates]

    def rank_deficiency_required(self, tol=CERTIFY_TOL):
        """Complementarity pins a zero eigenvalue of tau_j only where Tr Pi_j > tol."""
        if self.outcome_weights is None:
            return [tau is not None for tau in self.conjugates]
        return [tau is not None and w > tol for tau, w in zip(self.conjugates, self.outcome_weights)]

    def summary(self):
        return {
            "ratio": float(self.ratio),
            "tau_min_eigenvalues": [None if v is None else float(v) for v in self.min_eigenvalues()],
            "degenerate": [bool(flag) for flag in self.degenerate_flags],
            "outcome_weights": None if self.outcome_weights is None else [float(w) for w in self.outcome_weights],
        }


# ---------------------------
# CERTIFICATE
# ---------------------------
@dataclass(frozen=True)
class Certificate:
    success_probability: float
    trace_m: float
    hermiticity_defect: float
    psd_margins: tuple
    completeness_defect: float
    povm_min_eigenvalue: float
    complementarity: tuple | None
    verdict: str
    tol: float

    @property
    def passed(self):
        return self.verdict == "pass"

    @property
    def margin_min(self):
        return float(min(self.psd_margins))

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "p": self.success_probability,
            "trace_m": self.trace_m,
            "hermiticity_defect": self.hermiticity_defect,
            "psd_margins": list(self.psd_margins),
            "completeness_defect": self.completeness_defect,
            "povm_min_eigenvalue": self.povm_min_eigenvalue,
            "complementarity": None if self.complementarity is None else list(self.complementarity),
            "tol": self.tol,
        }


def complementarity_traces(family, povm):
    """Tr(tau_j Pi_j) for every non-degenerate j (0.0 where tau_j is omitted)."""
    return tuple(
        0.0 if tau is None else float(np.trace(tau @ element).real)
        for tau, element in zip(family.conjugates, povm.elements)
    )


def certify_optimal(ensemble, povm, tol=CERTIFY_TOL, family=None):
    """Check POVM validity, Hermiticity of M and min-eig(M_sym - p_j rho_j) >= -tol for all j."""
    _check_sizes(ensemble, povm)
    completeness = povm.completeness_defect()
    povm_min = povm.min_eigenvalue()
    lagrange = lagrange_operator(ensemble, povm)
    m_sym = lagrange.symmetric
    margins = tuple(eigh(m_sym - w).min for w in ensemble.weighted_states())
    complementarity = None if family is None else complementarity_traces(family, povm)

    passed = (
        povm_min >= -tol
        and completeness <= tol
        and lagrange.hermiticity_defect <= tol
        and min(margins) >= -tol
    )
    certificate = Certificate(
        success_probability=success_probability(ensemble, povm),
        trace_m=lagrange.trace,
        hermiticity_defect=lagrange.hermiticity_defect,
        psd_margins=margins,
        completeness_defect=completeness,
        povm_min_eigenvalue=povm_min,
        complementarity=complementarity,
        verdict="pass" if passed else "fail",
        tol=tol,
    )
    logger.debug("certificate: %s margin_min=%.3e", certificate.verdict, certificate.margin_min)
    return certificate


def extract_helstrom_family(ensemble, povm, tol=CERTIFY_TOL):
    """Conjugate states tau_j = (M_sym - p_j rho_j) / (p - p_j) of a certified POVM."""
    certificate = certify_optimal(ensemble, povm, tol)
    if not certificate.passed:
        raise CertificationError(
            f"POVM is not certified optimal at tol={tol:g} (margin_min={certificate.margin_min:.3e}, "
            f"hermiticity_defect={certificate.hermiticity_defect:.3e})"
        )
    p = certificate.success_probability
    m_sym = lagrange_operator(ensemble, povm).symmetric
    conjugates, flags = [], []
    for j, (p_j, rho_j) in enumerate(zip(ensemble.priors, ensemble.states)):
        alpha = p - p_j
        if alpha <= tol:
            conjugates.append(None)
            flags.append(True)
            continue
        tau = symmetrize((m_sym - p_j * rho_j) / alpha)
        spectrum = eigh(tau)
        trace = float(np.trace(tau).real)
        if alpha * spectrum.min < -10 * tol or abs(trace - 1.0) > 10 * tol:
            raise ExtractionError(
                f"tau_{j + 1} is not a state (min eigenvalue {spectrum.min:.3e}, trace {trace:.12g}); "
                "the POVM is not truly optimal"
            )
        # Tr(tau_j Pi_j) = 0 forces a zero eigenvalue only where outcome j is used
        if spectrum.min > 10 * tol:
            logger.debug("tau_%d is full rank (min eigenvalue %.3e, Tr Pi_%d = %.3e)",
                         j + 1, spectrum.min, j + 1, float(np.trace(povm.elements[j]).real))
        tau.setflags(write=False)
        conjugates.append(tau)
        flags.append(False)
    weights = tuple(float(np.trace(element).real) for element in povm.elements)
    return HelstromFamily(p, tuple(conjugates), tuple(flags), ensemble.priors, weights)


def family_operators(ensemble, family):
    """M_j = p_j rho_j + (p - p_j) tau_j for every non-degenerate j."""
    return [
        p_j * rho_j + (family.ratio - p_j) * tau
        for p_j, rho_j, tau in zip(ensemble.priors, ensemble.states, family.conjugates)
        if tau is not None
    ]


def verify_helstrom_family(ensemble, family, tol=CERTIFY_TOL):
    """Pairwise identity p_i rho_i + (p - p_i) tau_i = p_j rho_j + (p - p_j) tau_j."""
    if len(family.conjugates) != ensemble.count:
        raise DimensionMismatchError(f"family has {len(family.conjugates)} conjugates for {ensemble.count} states")
    operators = family_operators(ensemble, family)
    defect = 0.0
    for i in range(len(operators)):
        for k in range(i):
            defect = max(defect, max_abs(operators[i] - operators[k]))
    return defect <= tol, defect


def family_trace_identity(ensemble, family, povm):
    """|Tr M + sum_j (p - p_j) Tr(tau_j Pi_j) - p|, zero for any weak family and any POVM."""
    traces = complementarity_traces(family, povm)
    lhs = lagrange_operator(ensemble, povm).trace + sum(
        (family.ratio - p_j) * t for p_j, t in zip(ensemble.priors, traces)
    )
    return abs(lhs - family.ratio)


def ratio_upper_bound_check(ensemble, family, povm_any, slack=RATIO_BOUND_SLACK):
    """Any POVM scores at most the Helstrom ratio."""
    return success_probability(ensemble, povm_any) <= family.ratio + slack
