"""Input validation helpers in the spirit of ``sklearn.utils.check_array``.

States, density matrices and unitaries are plain numpy arrays throughout the
package; these helpers coerce and check them at API boundaries.
"""
from __future__ import annotations

import numpy as np

from .exceptions import ConfigError, DimensionError

STATE_ATOL = 1e-10
UNITARY_ATOL = 1e-8


def check_state(psi, *, atol: float = STATE_ATOL, name: str = "state") -> np.ndarray:
    """Return ``psi`` as a 1-D complex array after checking dimension and norm."""
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ConfigError(f"{name} must be a 1-D amplitude vector, got shape {psi.shape}")
    if psi.shape[0] < 2:
        raise ConfigError(f"{name} must have dimension >= 2, got {psi.shape[0]}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > atol:
        raise ConfigError(f"{name} is not normalised (norm={norm!r})")
    return psi


def check_density_matrix(rho, *, atol: float = STATE_ATOL, validate_spectrum: bool = False,
                         name: str = "density matrix") -> np.ndarray:
    """Return ``rho`` as a square complex array after checking Hermiticity and trace.

    Positivity costs an eigendecomposition and is only checked when
    ``validate_spectrum`` is set.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ConfigError(f"{name} must be square, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > atol:
        raise ConfigError(f"{name} is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > atol:
        raise ConfigError(f"{name} does not have unit trace (trace={tr!r})")
    if validate_spectrum and np.min(np.linalg.eigvalsh(rho)) < -atol:
        raise ConfigError(f"{name} is not positive semidefinite")
    return rho


def check_unitary(u, *, atol: float = UNITARY_ATOL, name: str = "unitary") -> np.ndarray:
    """Return ``u`` as a square complex array with ``max|U^dag U - I| <= atol``."""
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ConfigError(f"{name} must be square, got shape {u.shape}")
    dev = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
    if dev > atol:
        raise ConfigError(f"{name} is not unitary (max deviation {dev:.3e})")
    return u


def check_same_dim(a: np.ndarray, b: np.ndarray) -> int:
    if a.shape[0] != b.shape[0]:
        raise DimensionError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return a.shape[0]


def as_density(x) -> np.ndarray:
    """Promote a pure state vector to its projector; pass matrices through."""
    x = np.asarray(x, dtype=complex)
    if x.ndim == 1:
        return np.outer(x, x.conj())
    return x


def is_pure(x) -> bool:
    return np.ndim(x) == 1
