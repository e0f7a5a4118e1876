"""Exception hierarchy."""


class PumpedBHError(Exception):
    """Base class for all package errors."""


class DomainError(PumpedBHError, ValueError):
    """An argument lies outside the domain of the operation."""


class DimensionError(PumpedBHError, ValueError):
    """Input arrays are too short for the requested truncation order."""


class SingularChainError(PumpedBHError, ArithmeticError):
    """The steady-state moment chain is numerically singular."""


class UnboundedOccupationError(PumpedBHError, ArithmeticError):
    """No normalisable steady state exists (net gain without two-photon loss)."""


class EigenSolverError(PumpedBHError, ArithmeticError):
    """The eigenvalue solver failed; carries a condition estimate."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class ConfigError(PumpedBHError, ValueError):
    """Invalid sweep configuration; ``field`` names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field
