"""Exception hierarchy.

Each class carries the process exit code the CLI maps it to.
"""


class QpufSimError(Exception):
    """Base class for all errors raised by qpufsim."""

    exit_code = 1


class ConfigError(QpufSimError, ValueError):
    """Invalid parameters, scenario keys or values."""

    exit_code = 2


class DimensionError(ConfigError):
    """Operands have incompatible Hilbert-space dimensions."""


class QueryBudgetExceeded(QpufSimError):
    """A device was queried more often than its query budget allows."""

    exit_code = 3


class NumericError(QpufSimError, ArithmeticError):
    """A numerical routine failed (eigensolver, QR breakdown, ...)."""

    exit_code = 4


class RefusalError(QpufSimError):
    """Request is outside the supported scale (oracle sizes, budgets)."""

    exit_code = 5
