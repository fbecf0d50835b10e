"""Dense complex linear algebra on pure states, density matrices and unitaries.

Conventions: a pure state is a 1-D complex array of length ``d``; a density
matrix or unitary is a ``(d, d)`` complex array.  Global phases are never
canonicalised, every comparison goes through overlaps.
"""
from __future__ import annotations

import itertools
import math
from functools import reduce

import numpy as np

from .exceptions import NumericError, RefusalError
from .validation import check_same_dim

TWO_PI = 2.0 * np.pi

# Largest register product the permutation-average projector will build.
_SYMMETRIC_MAX_DIM = 4096


def overlap_sq(rho, psi) -> float:
    """Return ``<psi|rho|psi>``, where ``rho`` may be a state vector or a matrix."""
    rho = np.asarray(rho)
    psi = np.asarray(psi)
    check_same_dim(rho, psi)
    if rho.ndim == 1:
        return float(abs(np.vdot(psi, rho)) ** 2)
    return float(np.real(np.vdot(psi, rho @ psi)))


def fidelity(rho, psi) -> float:
    """Fidelity ``sqrt(<psi|rho|psi>)`` between a state and a pure reference.

    Parameters
    ----------
    rho : array_like
        Density matrix ``(d, d)`` or pure state ``(d,)``.
    psi : array_like
        Pure reference state ``(d,)``.

    Returns
    -------
    float in [0, 1]
    """
    return math.sqrt(min(1.0, max(0.0, overlap_sq(rho, psi))))


def apply_unitary(u, s) -> np.ndarray:
    """Apply ``u`` to a pure state (``U s``) or a density matrix (``U s U^dag``)."""
    u = np.asarray(u, dtype=complex)
    s = np.asarray(s, dtype=complex)
    check_same_dim(u, s)
    if s.ndim == 1:
        return u @ s
    return u @ s @ u.conj().T


def tensor(*operands) -> np.ndarray:
    """Kronecker product of states or operators of the same kind."""
    if not operands:
        raise ValueError("tensor() needs at least one operand")
    ndims = {np.ndim(op) for op in operands}
    if len(ndims) != 1:
        raise ValueError("tensor() operands must all be vectors or all be matrices")
    return reduce(np.kron, (np.asarray(op, dtype=complex) for op in operands))


def eigenphases(u) -> np.ndarray:
    """Arguments of the eigenvalues of a unitary, mapped into ``[0, 2*pi)``."""
    try:
        lam = np.linalg.eigvals(np.asarray(u, dtype=complex))
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver did not converge: {exc}") from exc
    phases = np.mod(np.angle(lam), TWO_PI)
    # mod can round a tiny negative angle up to exactly 2*pi
    phases[phases >= TWO_PI] = 0.0
    return phases


def permutation_operator(d: int, perm) -> np.ndarray:
    """Operator on ``(C^d)^{(x)m}`` sending register ``k`` to position ``perm[k]``."""
    m = len(perm)
    dim = d ** m
    ident = np.eye(dim, dtype=complex).reshape((d,) * m + (dim,))
    # output slot perm[k] receives input register k
    axes = [0] * m
    for k, p in enumerate(perm):
        axes[p] = k
    return ident.transpose(axes + [m]).reshape(dim, dim)


def symmetric_projector(d: int, m: int) -> np.ndarray:
    """Orthogonal projector onto the symmetric subspace of ``(C^d)^{(x)m}``.

    Built as the average of all ``m!`` register permutations, which is only
    sensible at oracle scale; ``m`` is limited to 4.
    """
    if d < 2 or not 1 <= m <= 4 or d ** m > _SYMMETRIC_MAX_DIM:
        raise RefusalError(f"symmetric_projector limited to d>=2, 1<=m<=4, d**m<={_SYMMETRIC_MAX_DIM}; "
                           f"got d={d}, m={m}")
    perms = list(itertools.permutations(range(m)))
    proj = sum(permutation_operator(d, p) for p in perms)
    return proj / len(perms)


def symmetric_dimension(d: int, m: int) -> int:
    return math.comb(d + m - 1, m)


def basis_state(d: int, index: int) -> np.ndarray:
    e = np.zeros(d, dtype=complex)
    e[index] = 1.0
    return e
