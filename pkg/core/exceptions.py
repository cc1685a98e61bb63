"""
Custom exceptions for the application.
"""

import json
from typing import Any, Dict, Optional


class AppException(Exception):
    """Base application exception."""

    def __init__(
        self,
        message: str,
        exit_code: int = 1,
        details: Optional[Dict[str, Any]] = None,
    ):
        self.message = message
        self.exit_code = exit_code
        self.details = details or {}
        super().__init__(self.message)


class IdentityFailure(AppException):
    """Certificate does not expand to the target polynomial."""

    def __init__(
        self,
        message: str = "Certificate identity failed",
        details: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(message, 1, details)


class StructuralFailure(AppException):
    """Malformed certificate: negative weight, non-manifest multiplier, bad file."""

    def __init__(
        self,
        message: str = "Certificate is structurally invalid",
        details: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(message, 2, details)


class PolynomialError(AppException):
    """Polynomial construction and arithmetic errors."""

    def __init__(
        self,
        message: str = "Polynomial error",
        details: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(message, 3, details)


class ParseError(PolynomialError):
    """Polynomial text does not follow the grammar."""

    def __init__(self, message: str, position: int, text: str = ""):
        super().__init__(
            f"{message} at position {position}",
            {"position": position, "text": text},
        )
        self.position = position


class UnknownVariableError(PolynomialError):
    """Identifier not in the variable context."""

    def __init__(self, name: str, variables: tuple, position: Optional[int] = None):
        super().__init__(
            f"Unknown variable {name!r}; expected one of {list(variables)}",
            {"name": name, "variables": list(variables), "position": position},
        )


class VariableMismatchError(PolynomialError):
    """Operands live in different variable contexts."""

    def __init__(self, left: tuple, right: tuple):
        super().__init__(
            "Variable contexts differ",
            {"left": list(left), "right": list(right)},
        )


class MissingValueError(PolynomialError):
    """Evaluation point lacks a value for some variable."""

    def __init__(self, missing: list):
        super().__init__(
            f"No value given for {missing}",
            {"missing": missing},
        )


class ResidualDenominatorError(PolynomialError):
    """Clearing factor leaves a denominator behind."""

    def __init__(self, residual: str, details: Optional[Dict[str, Any]] = None):
        details = dict(details or {})
        details["residual"] = residual
        super().__init__("Clearing factor is insufficient", details)


class NotSOSCandidate(AppException):
    """Polynomial cannot be a sum of squares for structural reasons."""

    def __init__(
        self,
        message: str = "Polynomial is not a sum-of-squares candidate",
        details: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(message, 4, details)


class InfeasibleBasis(AppException):
    """Gram constraints cannot be met over the chosen basis."""

    def __init__(
        self,
        message: str = "Gram constraints are infeasible over the basis",
        details: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(message, 5, details)


class SymmetryError(AppException):
    """Symmetry data is invalid or does not fix the target."""

    def __init__(
        self,
        message: str = "Symmetry precondition violated",
        details: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(message, 6, details)


class SolverError(AppException):
    """SDP solver did not produce a usable point."""

    def __init__(
        self,
        message: str = "SDP solver failed",
        details: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(message, 7, details)


class MaxIterError(SolverError):
    """Iteration cap reached before the tolerances."""

    def __init__(self, details: Optional[Dict[str, Any]] = None):
        super().__init__("SDP solver hit the iteration cap", details)


class NumericalFailure(SolverError):
    """Solver broke down on an ill-conditioned system."""

    def __init__(self, details: Optional[Dict[str, Any]] = None):
        super().__init__("SDP solver reported a numerical failure", details)


class SdpInfeasible(AppException):
    """No positive semidefinite Gram matrix within tolerance."""

    def __init__(
        self,
        message: str = "No PSD Gram matrix within tolerance",
        details: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(message, 8, details)


class RationalizationError(AppException):
    """Rounding to an exact rational certificate failed."""

    def __init__(
        self,
        message: str = "Rationalization failed",
        details: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(message, 9, details)


class RetryWithLargerDenominator(RationalizationError):
    """Projection moved the rounded matrix too far."""

    def __init__(self, shift: float, bound: int):
        super().__init__(
            "Rounding too coarse; retry with a larger denominator",
            {"shift": shift, "denominator_bound": bound},
        )
        self.shift = shift
        self.bound = bound


class FaceReductionError(RationalizationError):
    """Numerical kernel could not be recovered exactly."""

    def __init__(
        self,
        message: str = "Could not recover an exact kernel",
        details: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(message, details)


class CertificateError(RationalizationError):
    """Extracted certificate failed its own exact check."""

    def __init__(
        self,
        message: str = "Extracted certificate does not verify",
        details: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(message, details)


class ReconstructionCheckFailure(AppException):
    """An exact identity of the packing-polynomial reconstruction failed."""

    def __init__(
        self,
        message: str = "Reconstruction identity check failed",
        details: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(message, 10, details)


class TranscriptionMismatch(ReconstructionCheckFailure):
    """The two transcribed forms of a polynomial differ."""

    def __init__(self, difference: str):
        super().__init__(
            "Transcribed forms disagree",
            {"difference": difference},
        )


class DimensionLimitExceeded(AppException):
    """Requested problem is larger than the configured guard."""

    def __init__(self, dimension: int, limit: int):
        super().__init__(
            f"Gram dimension {dimension} exceeds the limit {limit}",
            11,
            {"dimension": dimension, "limit": limit},
        )


class InvalidOption(AppException):
    """Command-line option rejected by the settings validators."""

    def __init__(self, message: str = "Invalid option", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, 12, details)


def create_error_report(exc: AppException) -> Dict[str, Any]:
    """Convert AppException to the error object of a report."""
    return {
        "error": type(exc).__name__,
        "message": exc.message,
        "exit_code": exc.exit_code,
        "details": json.loads(json.dumps(exc.details, default=str)),
    }
