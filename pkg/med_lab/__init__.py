"""Minimum-error discrimination of quantum-state ensembles."""
from .ensemble_builder import (
    Ensemble,
    SpinLatitudeParams,
    UnitarySet,
    bloch_latitude_ensemble,
    cyclic_spin_ensemble,
    similarity_ensemble,
)
from .ensemble_io import load_ensemble, parse_ensemble_file, parse_povm_file
from .med_certify import Povm, certify_optimal, extract_helstrom_family, success_probability
from .med_closed_form import solve_closed_form
from .med_oracle import fixed_point_solve, srm

__version__ = "0.1.0"

__all__ = [
    "Ensemble",
    "Povm",
    "SpinLatitudeParams",
    "UnitarySet",
    "bloch_latitude_ensemble",
    "certify_optimal",
    "cyclic_spin_ensemble",
    "extract_helstrom_family",
    "fixed_point_solve",
    "load_ensemble",
    "parse_ensemble_file",
    "parse_povm_file",
    "similarity_ensemble",
    "solve_closed_form",
    "srm",
    "success_probability",
]
