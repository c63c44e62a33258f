"""Exception hierarchy for localqft.

Every error carries the process exit code the command line front end reports for it.
"""

import typing as t


class LocalQFTError(Exception):
    """Base class for all errors raised by localqft."""

    #: Exit code reported by the command line front end.
    exit_code: int = 2


class InvalidParameterError(LocalQFTError, ValueError):
    """A physical or numerical parameter is outside its admissible range."""


class ResolutionError(LocalQFTError):
    """More eigenpairs were requested than the grid resolves reliably."""


class ConfinementError(LocalQFTError):
    """A tabulated potential does not confine the requested eigenvalues."""


class GeometryError(LocalQFTError, ValueError):
    """Lapse or metric samples are not positive, or a probe escapes its enclosing box."""


class DomainError(LocalQFTError, ValueError):
    """An event lies outside the region where a representation is defined."""


class QuadratureError(LocalQFTError):
    """An adaptive quadrature failed to reach its tolerance."""


class IntegratorError(LocalQFTError):
    """The covariance integrator violated the uncertainty relation beyond its drift tolerance."""


class ConsistencyError(LocalQFTError):
    """The direct and momentum-space evaluation paths disagree."""

    exit_code = 3

    def __init__(self, message: str, direct: float = float("nan"), momentum: float = float("nan")):
        super().__init__(message)
        self.direct = direct
        self.momentum = momentum


class EquivalenceError(LocalQFTError):
    """The exact toy-universe state does not match the perturbative state to fourth order."""

    exit_code = 4

    def __init__(self, message: str, report: t.Any = None):
        super().__init__(message)
        self.report = report


class ScenarioError(LocalQFTError, ValueError):
    """A scenario file or command line request is malformed."""

    exit_code = 64
