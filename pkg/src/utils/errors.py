"""Exception hierarchy shared by the library and the CLI."""

from typing import Optional


class CrbLpmError(Exception):
    """Base class for all library errors."""


class ConfigError(CrbLpmError):
    """Invalid or conflicting configuration (CLI usage error)."""


class ScenarioError(CrbLpmError, ValueError):
    """Radar scenario parameters violate their invariants."""


class InvalidDimensionError(ScenarioError):
    """An antenna or block count is not a positive integer."""


class UnsupportedDimensionError(CrbLpmError):
    """Operation only defined for a specific array size."""


class DegenerateInputError(CrbLpmError, ValueError):
    """Input carries no information (e.g. an all-zero beamformer)."""


class SingularFimError(CrbLpmError):
    """Fisher information matrix is singular or indefinite.

    Signals that at least one parameter is unobservable for the given
    scenario and beamformer (for example a single transmit antenna).
    """

    def __init__(self, min_eigenvalue: float, message: Optional[str] = None):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(
            message or f"Singular FIM (min eigenvalue {min_eigenvalue:.3e})"
        )


class PenaltyTooSmallError(CrbLpmError):
    """Proximal penalty does not make Q^k positive definite."""

    def __init__(self, min_eigenvalue: float, rho: float):
        self.min_eigenvalue = min_eigenvalue
        self.rho = rho
        super().__init__(
            f"Q matrix not positive definite for rho={rho:g} "
            f"(min eigenvalue {min_eigenvalue:.3e})"
        )


class NumericalFailureError(CrbLpmError):
    """A factorization or closed-form update produced an invalid value."""


class InsufficientDataError(CrbLpmError):
    """Not enough recorded iterates for a diagnostic."""


class ResultWriteError(CrbLpmError, OSError):
    """Result file could not be written."""

    def __init__(self, path: str, reason: str):
        self.path = path
        super().__init__(f"Cannot write results to {path}: {reason}")
