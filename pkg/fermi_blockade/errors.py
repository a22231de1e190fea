from typing import Any, Dict, Optional


class DomainError(ValueError):
    """Input outside the domain where an operation is defined."""


class NumericalError(ArithmeticError):
    """A numerical procedure failed to reach its target accuracy.

    Args:
        message: Human readable description
        diagnostics: Solver state useful for reproducing the failure

    """
    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class EfficiencyError(NumericalError):
    pass


class ResolutionError(NumericalError):
    pass


class EnvelopeError(AssertionError):
    """Rejection envelope fails to dominate the sampled distribution."""
