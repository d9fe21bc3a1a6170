"""Exceptions raised by med_lab.

Certificate failures are values, not exceptions; everything here signals input
that cannot be processed at all.
"""


class MedError(Exception):
    """Base class for all med_lab errors."""


class PreconditionError(MedError, ValueError):
    pass


class DimensionMismatchError(MedError, ValueError):
    pass


class EnsembleFormatError(MedError, ValueError):
    """Malformed ensemble or POVM document; ``field_path`` locates the offending field."""

    def __init__(self, field_path, message):
        self.field_path = field_path
        self.message = message
        super().__init__(f"{field_path}: {message}")


class EigenSolverError(MedError, ArithmeticError):
    pass


class CertificationError(MedError):
    pass


class ExtractionError(MedError):
    pass


class AssemblyError(MedError):
    pass


class SingularDrawError(MedError):
    pass


class UsageError(MedError):
    """Bad command-line arguments."""
