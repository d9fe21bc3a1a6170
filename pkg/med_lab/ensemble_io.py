"""JSON ensemble and POVM documents.

Ensemble document::

    {"dim": 2, "priors": "equal" | [p1, ...], "states": [STATE, ...],
     "generators": [MATRIX, ...]}            # generators optional

where STATE is ``{"matrix": MATRIX}`` or one constructor object
(``bloch``, ``bloch_latitude``, ``spin_orbit``, ``orbit``) and MATRIX is
row-major ``[[[re, im], ...], ...]``. POVM document: ``{"dim": d, "elements": [MATRIX, ...]}``.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math

import numpy as np

from .ensemble_builder import (
    Ensemble,
    SpinLatitudeParams,
    UnitarySet,
    bloch_latitude_ensemble,
    bloch_state,
    bloch_vector,
    cyclic_spin_ensemble,
    density_matrix,
    normalize_priors,
    similarity_ensemble,
)
from .errors import DimensionMismatchError, EnsembleFormatError, MedError
from .med_certify import Povm

logger = logging.getLogger(__name__)

ENSEMBLE_KEYS = {"dim", "priors", "states", "generators"}
CONSTRUCTOR_KEYS = {
    "bloch": {"a", "theta", "phi"},
    "bloch_latitude": {"a", "theta", "phis"},
    "spin_orbit": {"two_j", "a", "theta", "phi", "n"},
    "orbit": {"seed", "unitaries"},
}


# ---------------------------
# FIELD HELPERS
# ---------------------------
def _require_object(value, path, allowed, required=None):
    if not isinstance(value, dict):
        raise EnsembleFormatError(path, f"expected an object, got {type(value).__name__}")
    unknown = sorted(set(value) - set(allowed))
    if unknown:
        raise EnsembleFormatError(path, f"unknown keys {unknown}")
    missing = sorted(set(required if required is not None else allowed) - set(value))
    if missing:
        raise EnsembleFormatError(path, f"missing keys {missing}")
    return value


def _real(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise EnsembleFormatError(path, f"expected a finite number, got {value!r}")
    return float(value)


def _integer(value, path):
    if isinstance(value, bool) or not isinstance(value, int):
        raise EnsembleFormatError(path, f"expected an integer, got {value!r}")
    return value


def decode_matrix(value, path, dim=None):
    if not isinstance(value, list) or not value:
        raise EnsembleFormatError(path, "expected a non-empty list of rows")
    rows = []
    for r, row in enumerate(value):
        if not isinstance(row, list) or len(row) != len(value):
            raise EnsembleFormatError(f"{path}[{r}]", f"expected a row of {len(value)} entries")
        entries = []
        for c, entry in enumerate(row):
            if not isinstance(entry, list) or len(entry) != 2:
                raise EnsembleFormatError(f"{path}[{r}][{c}]", "expected [re, im]")
            entries.append(complex(_real(entry[0], f"{path}[{r}][{c}][0]"), _real(entry[1], f"{path}[{r}][{c}][1]")))
        rows.append(entries)
    matrix = np.array(rows, dtype=complex)
    if dim is not None and matrix.shape != (dim, dim):
        raise EnsembleFormatError(path, f"expected a {dim}x{dim} matrix, got {matrix.shape[0]}x{matrix.shape[1]}")
    return matrix


def encode_matrix(matrix):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(matrix, dtype=complex)]


# ---------------------------
# PARSING
# ---------------------------
def _parse_state_entry(entry, path, dim):
    """Return (states, generators-or-None) for one entry of the ``states`` list."""
    if not isinstance(entry, dict) or len(entry) != 1:
        keys = sorted(entry) if isinstance(entry, dict) else type(entry).__name__
        raise EnsembleFormatError(path, f"a state is exactly one of 'matrix' or a constructor, got {keys}")
    (kind, body), = entry.items()
    sub = f"{path}.{kind}"
    try:
        if kind == "matrix":
            return [density_matrix(decode_matrix(body, sub, dim), name=sub)], None
        if kind not in CONSTRUCTOR_KEYS:
            raise EnsembleFormatError(path, f"unknown state kind {kind!r}")
        _require_object(body, sub, CONSTRUCTOR_KEYS[kind])
        if kind == "bloch":
            vector = bloch_vector(_real(body["a"], f"{sub}.a"), _real(body["theta"], f"{sub}.theta"),
                                  _real(body["phi"], f"{sub}.phi"))
            return [bloch_state(vector)], None
        if kind == "bloch_latitude":
            if not isinstance(body["phis"], list):
                raise EnsembleFormatError(f"{sub}.phis", "expected a list of angles")
            phis = [_real(phi, f"{sub}.phis[{i}]") for i, phi in enumerate(body["phis"])]
            built = bloch_latitude_ensemble(_real(body["a"], f"{sub}.a"), _real(body["theta"], f"{sub}.theta"), phis)
        elif kind == "spin_orbit":
            built = cyclic_spin_ensemble(parse_spin_params(body, sub))
        else:
            seed_states, _ = _parse_state_entry(body["seed"], f"{sub}.seed", dim)
            if len(seed_states) != 1:
                raise EnsembleFormatError(f"{sub}.seed", "the orbit seed must be a single state")
            if not isinstance(body["unitaries"], list):
                raise EnsembleFormatError(f"{sub}.unitaries", "expected a list of matrices")
            unitaries = [decode_matrix(u, f"{sub}.unitaries[{i}]", dim) for i, u in enumerate(body["unitaries"])]
            built = similarity_ensemble(seed_states[0], unitaries)
        return list(built.states), built.generators
    except EnsembleFormatError:
        raise
    except MedError as e:
        raise EnsembleFormatError(sub, str(e)) from e


def parse_spin_params(body, path="spin_orbit"):
    _require_object(body, path, CONSTRUCTOR_KEYS["spin_orbit"])
    try:
        return SpinLatitudeParams(
            two_j=_integer(body["two_j"], f"{path}.two_j"),
            a=_real(body["a"], f"{path}.a"),
            theta=_real(body["theta"], f"{path}.theta"),
            phi=_real(body["phi"], f"{path}.phi"),
            n=_integer(body["n"], f"{path}.n"),
        )
    except EnsembleFormatError:
        raise
    except MedError as e:
        raise EnsembleFormatError(path, str(e)) from e


def ensemble_from_document(document):
    _require_object(document, "$", ENSEMBLE_KEYS, required={"dim", "priors", "states"})
    dim = _integer(document["dim"], "dim")
    if dim < 1:
        raise EnsembleFormatError("dim", f"must be positive, got {dim}")
    if not isinstance(document["states"], list) or not document["states"]:
        raise EnsembleFormatError("states", "expected a non-empty list")

    states, built_generators = [], []
    for i, entry in enumerate(document["states"]):
        entry_states, entry_generators = _parse_state_entry(entry, f"states[{i}]", dim)
        for k, rho in enumerate(entry_states):
            if rho.shape != (dim, dim):
                raise EnsembleFormatError(f"states[{i}]", f"state {k} has dim {rho.shape[0]}, document dim is {dim}")
        states.extend(entry_states)
        built_generators.append(entry_generators)

    generators = None
    if len(built_generators) == 1 and built_generators[0] is not None:
        generators = built_generators[0]
    if "generators" in document:
        if generators is not None:
            raise EnsembleFormatError("generators", "generators are given both explicitly and by a constructor")
        if not isinstance(document["generators"], list):
            raise EnsembleFormatError("generators", "expected a list of matrices")
        matrices = [decode_matrix(u, f"generators[{i}]", dim) for i, u in enumerate(document["generators"])]
        try:
            generators = UnitarySet(matrices)
        except MedError as e:
            raise EnsembleFormatError("generators", str(e)) from e

    priors = document["priors"]
    if isinstance(priors, list):
        priors = [_real(p, f"priors[{i}]") for i, p in enumerate(priors)]
    elif priors != "equal":
        raise EnsembleFormatError("priors", f"expected a list or 'equal', got {priors!r}")
    try:
        priors = normalize_priors(priors, len(states))
    except MedError as e:
        raise EnsembleFormatError("priors", str(e)) from e
    logger.debug("parsed %d states of dim %d (generators: %s)", len(states), dim, generators is not None)
    try:
        return Ensemble(priors, np.stack(states), generators)
    except MedError as e:
        raise EnsembleFormatError("generators", str(e)) from e


def parse_ensemble_file(text):
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise EnsembleFormatError("$", f"invalid JSON: {e}") from e
    return ensemble_from_document(document)


def load_ensemble(path):
    with open(path, "r", encoding="utf-8") as f:
        return parse_ensemble_file(f.read())


# ---------------------------
# SERIALIZATION
# ---------------------------
def ensemble_to_document(ensemble):
    document = {
        "dim": int(ensemble.dim),
        "priors": [float(p) for p in ensemble.priors],
        "states": [{"matrix": encode_matrix(rho)} for rho in ensemble.states],
    }
    if ensemble.generators is not None:
        document["generators"] = [encode_matrix(u) for u in ensemble.generators.unitaries]
    return document


def serialize_ensemble(ensemble):
    """Canonical text: sorted keys, explicit matrices, repr-exact floats."""
    return json.dumps(ensemble_to_document(ensemble), sort_keys=True, indent=2)


def ensemble_digest(ensemble):
    return hashlib.sha256(serialize_ensemble(ensemble).encode("utf-8")).hexdigest()


def parse_povm_file(text, dim=None):
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise EnsembleFormatError("$", f"invalid JSON: {e}") from e
    _require_object(document, "$", {"dim", "elements"})
    file_dim = _integer(document["dim"], "dim")
    if dim is not None and file_dim != dim:
        raise DimensionMismatchError(f"POVM has dim {file_dim}, ensemble has dim {dim}")
    if not isinstance(document["elements"], list) or not document["elements"]:
        raise EnsembleFormatError("elements", "expected a non-empty list of matrices")
    elements = [decode_matrix(m, f"elements[{i}]", file_dim) for i, m in enumerate(document["elements"])]
    try:
        return Povm(np.stack(elements))
    except MedError as e:
        raise EnsembleFormatError("elements", str(e)) from e


def serialize_povm(povm):
    document = {"dim": int(povm.dim), "elements": [encode_matrix(e) for e in povm.elements]}
    return json.dumps(document, sort_keys=True, indent=2)
