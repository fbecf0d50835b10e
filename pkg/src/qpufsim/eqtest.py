"""SWAP and GSWAP equality tests.

Acceptance probabilities are available in closed form, as explicit circuit or
projector oracles, and as sampled outcomes.  Sampling draws once from the
exact analytic distribution instead of simulating measurement collapse.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, RefusalError
from .qmath import overlap_sq, permutation_operator, symmetric_projector, tensor
from .sampling import check_random_state
from .validation import as_density, check_same_dim

_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)


class TestKind(str, enum.Enum):
    SWAP = "swap"
    GSWAP = "gswap"

    __test__ = False


@dataclass(frozen=True)
class TestPolicy:
    """How a state is checked against a reference.

    ``copies_m`` is the repetition count for SWAP and the number of reference
    copies for GSWAP.
    """

    kind: TestKind = TestKind.SWAP
    copies_m: int = 1

    __test__ = False

    def __post_init__(self):
        object.__setattr__(self, "kind", TestKind(self.kind))
        if self.copies_m < 1:
            raise ConfigError(f"copies_m must be >= 1, got {self.copies_m}")


@dataclass(frozen=True)
class TestOutcome:
    accepted: int
    p_accept: float

    __test__ = False


def swap_accept_prob(rho, sigma) -> float:
    """``1/2 + Tr(rho sigma)/2``; either argument may be a pure state vector."""
    rho = np.asarray(rho)
    sigma = np.asarray(sigma)
    check_same_dim(rho, sigma)
    if rho.ndim == 1 or sigma.ndim == 1:
        pure, other = (rho, sigma) if rho.ndim == 1 else (sigma, rho)
        tr = overlap_sq(other, pure)
    else:
        tr = float(np.real(np.sum(rho * sigma.T)))
    return 0.5 + 0.5 * tr


def swap_circuit_oracle(rho, psi) -> float:
    """Accept probability from the explicit H / controlled-SWAP / H circuit.

    Builds ``|0><0| (x) rho (x) |psi><psi|`` as a dense matrix, so it is
    restricted to ``d <= 16``.
    """
    rho = as_density(rho)
    psi = np.asarray(psi, dtype=complex)
    d = check_same_dim(rho, psi)
    if d > 16:
        raise RefusalError(f"swap_circuit_oracle limited to d <= 16, got {d}")
    swap = permutation_operator(d, (1, 0))
    eye = np.eye(d * d)
    cswap = np.block([[eye, np.zeros_like(eye)], [np.zeros_like(eye), swap]])
    h = np.kron(_HADAMARD, eye)
    circuit = h @ cswap @ h
    state = tensor(np.diag([1.0, 0.0]).astype(complex), rho, np.outer(psi, psi.conj()))
    out = circuit @ state @ circuit.conj().T
    return float(np.real(np.trace(out[: d * d, : d * d])))


def gswap_accept_prob(rho, psi, m: int) -> float:
    """``1/(m+1) + m/(m+1) <psi|rho|psi>`` for ``m`` reference copies of ``psi``."""
    if m < 1:
        raise ConfigError(f"GSWAP needs m >= 1 reference copies, got {m}")
    return (1.0 + m * overlap_sq(rho, psi)) / (m + 1)


def gswap_projector_oracle(rho, psi, m: int) -> float:
    """``Tr(Pi_sym (rho (x) psi^{(x)m}))`` over ``m + 1`` registers."""
    rho = as_density(rho)
    psi = np.asarray(psi, dtype=complex)
    d = check_same_dim(rho, psi)
    if d > 4 or not 1 <= m <= 3:
        raise RefusalError(f"gswap_projector_oracle limited to d <= 4, 1 <= m <= 3; got d={d}, m={m}")
    proj = symmetric_projector(d, m + 1)
    ref = np.outer(psi, psi.conj())
    joint = tensor(rho, *([ref] * m))
    return float(np.real(np.sum(proj * joint.T)))


def compound_accept_prob(policy: TestPolicy, rho, psi) -> float:
    """Probability that ``policy`` accepts ``rho`` against reference ``psi``."""
    if policy.kind is TestKind.SWAP:
        return swap_accept_prob(rho, psi) ** policy.copies_m
    return gswap_accept_prob(rho, psi, policy.copies_m)


def run_test(policy: TestPolicy, rho, psi, rng=None) -> TestOutcome:
    """One sampled run of the test; SWAP accepts only if all repetitions accept."""
    p = compound_accept_prob(policy, rho, psi)
    accepted = int(check_random_state(rng).random() < p)
    return TestOutcome(accepted, p)


def sample_tests(policy: TestPolicy, rho, psi, n_trials: int, rng=None) -> np.ndarray:
    """Vectorised :func:`run_test`: ``n_trials`` independent accept bits."""
    p = compound_accept_prob(policy, rho, psi)
    return (check_random_state(rng).random(n_trials) < p).astype(np.int8)
