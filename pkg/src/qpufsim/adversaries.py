"""Forging adversaries as scikit-learn style estimators.

The learning phase maps onto ``fit``: the adversary chooses its queries with
:meth:`learning_queries`, the challenger answers them, and ``fit(X, y)``
receives the challenge/response pairs.  The guess phase is ``predict``,
which maps challenge states to forgeries.

Samples are rows of complex arrays: ``X`` has shape ``(n_samples, dim)``.
"""
from __future__ import annotations

import enum

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import ConfigError
from .qmath import basis_state
from .qpuf import CrpDatabase, CrpRecord
from .sampling import check_random_state, haar_state


class AdversaryKind(str, enum.Enum):
    RANDOM_STATE = "random_state"
    REPLAY_NEAREST = "replay_nearest"
    SUBSPACE_EMULATION = "subspace_emulation"


def _check_states(X, name="X") -> np.ndarray:
    X = np.asarray(X, dtype=complex)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ConfigError(f"{name} must be a 2-D array of state rows, got shape {X.shape}")
    return X


class BaseForger(BaseEstimator):
    """Common plumbing; subclasses choose queries and implement ``_forge``."""

    def __init__(self, n_queries: int = 0, random_state=None):
        self.n_queries = n_queries
        self.random_state = random_state

    def learning_queries(self, dim: int) -> np.ndarray:
        return np.empty((0, dim), dtype=complex)

    def fit(self, X, y):
        X = _check_states(X)
        y = _check_states(y, "y")
        if X.shape != y.shape:
            raise ConfigError(f"X and y shapes differ: {X.shape} vs {y.shape}")
        if X.shape[0] > self.n_queries:
            raise ConfigError(f"{X.shape[0]} learning pairs exceed n_queries={self.n_queries}")
        self.challenges_ = X
        self.responses_ = y
        self.dim_ = X.shape[1]
        return self

    @property
    def rng_(self) -> np.random.Generator:
        # created once so query selection and forging share one stream
        if getattr(self, "_rng", None) is None:
            self._rng = check_random_state(self.random_state)
        return self._rng

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "challenges_")
        X = _check_states(X)
        return np.array([self._forge(x) for x in X])

    @property
    def database_(self) -> CrpDatabase:
        return CrpDatabase([CrpRecord(c, r) for c, r in zip(self.challenges_, self.responses_)])

    @property
    def learned_span_dim(self) -> int:
        """Dimension of the subspace spanned by the learning queries."""
        if self.challenges_.shape[0] == 0:
            return 0
        return int(np.linalg.matrix_rank(self.challenges_))

    def _forge(self, challenge: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class RandomStateForger(BaseForger):
    """Ignores everything it learned and outputs a fresh Haar-random state."""

    def _forge(self, challenge):
        return haar_state(challenge.shape[0], self.rng_)


class ReplayNearestForger(BaseForger):
    """Learns on random states and replays the response of the closest stored challenge."""

    def learning_queries(self, dim):
        return np.array([haar_state(dim, self.rng_) for _ in range(self.n_queries)]).reshape(-1, dim)

    def _forge(self, challenge):
        if self.challenges_.shape[0] == 0:
            return haar_state(challenge.shape[0], self.rng_)
        overlaps = np.abs(self.challenges_.conj() @ challenge)
        return self.responses_[int(np.argmax(overlaps))]


class SubspaceEmulationForger(BaseForger):
    """Emulates the device on the span of its queries.

    Queries are the first ``n_queries`` computational basis states.  The forgery
    for ``psi`` is the learned linear extension applied to the projection of
    ``psi`` onto that span, normalised; if the projection vanishes the output is
    Haar random.
    """

    def learning_queries(self, dim):
        if self.n_queries > dim:
            raise ConfigError(f"subspace emulation needs n_queries <= dim, got {self.n_queries} > {dim}")
        return np.array([basis_state(dim, i) for i in range(self.n_queries)]).reshape(-1, dim)

    def _forge(self, challenge):
        d = challenge.shape[0]
        if self.challenges_.shape[0] == 0:
            return haar_state(d, self.rng_)
        # coefficients of the projection of challenge onto span(challenges_)
        coef, *_ = np.linalg.lstsq(self.challenges_.T, challenge, rcond=None)
        projected = self.challenges_.T @ coef
        norm = np.linalg.norm(projected)
        if norm <= 1e-12:
            return haar_state(d, self.rng_)
        return (self.responses_.T @ coef) / norm


_FORGERS = {
    AdversaryKind.RANDOM_STATE: RandomStateForger,
    AdversaryKind.REPLAY_NEAREST: ReplayNearestForger,
    AdversaryKind.SUBSPACE_EMULATION: SubspaceEmulationForger,
}


def make_adversary(kind, n_queries: int = 0, random_state=None) -> BaseForger:
    return _FORGERS[AdversaryKind(kind)](n_queries=n_queries, random_state=random_state)
