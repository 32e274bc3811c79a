"""
Exception types raised by the witness toolkit.
"""
from typing import Optional


class WitnessError(Exception):
    """Base class for domain failures."""


class RepresentationError(WitnessError):
    """Ordering parameter outside the regular range of a state or POVM symbol."""

    def __init__(self, message: str, largest_regular_s: Optional[float] = None) -> None:
        super().__init__(message)
        self.largest_regular_s = largest_regular_s


class DivergenceError(WitnessError):
    """The left-hand-side series of a witness diverges."""

    def __init__(self, message: str, critical_t: float) -> None:
        super().__init__(message)
        self.critical_t = critical_t


class ConvergenceError(WitnessError):
    """A quadrature or truncation missed its tolerance."""

    def __init__(self, message: str, estimate: Optional[float] = None,
                 error: Optional[float] = None) -> None:
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class FormulaIntegrityError(WitnessError):
    """A closed form disagrees with its quadrature oracle."""


class ConfigError(WitnessError):
    """Experiment configuration does not match the schema."""

    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = path


class LPFormulationError(WitnessError):
    """The LP solver reported an unbounded or failed problem."""
