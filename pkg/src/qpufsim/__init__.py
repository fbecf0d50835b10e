"""Simulation toolkit for quantum physical unclonable functions.

Dense state-vector primitives, equality tests, device models, security games,
identification protocols and eigenphase statistics.
"""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    ConfigError,
    DimensionError,
    NumericError,
    QpufSimError,
    QueryBudgetExceeded,
    RefusalError,
)
from .eqtest import TestKind, TestPolicy, gswap_accept_prob, swap_accept_prob  # noqa: E402
from .qpuf import Family, QpufDevice, QpufParams, diamond_distance_unitaries, qeval, qgen  # noqa: E402
from .sampling import RngStream, haar_state, haar_unitary  # noqa: E402

__all__ = [
    "__version__",
    "ConfigError",
    "DimensionError",
    "NumericError",
    "QpufSimError",
    "QueryBudgetExceeded",
    "RefusalError",
    "TestKind",
    "TestPolicy",
    "gswap_accept_prob",
    "swap_accept_prob",
    "Family",
    "QpufDevice",
    "QpufParams",
    "diamond_distance_unitaries",
    "qeval",
    "qgen",
    "RngStream",
    "haar_state",
    "haar_unitary",
]
