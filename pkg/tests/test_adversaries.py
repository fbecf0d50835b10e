import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from qpufsim.adversaries import (
    AdversaryKind,
    RandomStateForger,
    ReplayNearestForger,
    SubspaceEmulationForger,
    make_adversary,
)
from qpufsim.exceptions import ConfigError
from qpufsim.qmath import overlap_sq
from qpufsim.qpuf import QpufParams, qgen
from qpufsim.sampling import haar_state


def _learn(forger, device):
    q = forger.learning_queries(device.dim)
    return forger.fit(q, np.array([device.evaluate(x) for x in q]).reshape(-1, device.dim))


def test_make_adversary_and_sklearn_params():
    adv = make_adversary("subspace_emulation", 3, random_state=1)
    assert isinstance(adv, SubspaceEmulationForger)
    assert adv.get_params() == {"n_queries": 3, "random_state": 1}
    twin = clone(adv)
    assert twin.get_params() == adv.get_params() and twin is not adv
    assert isinstance(make_adversary(AdversaryKind.REPLAY_NEAREST), ReplayNearestForger)


def test_predict_before_fit_raises():
    with pytest.raises(NotFittedError):
        RandomStateForger().predict(haar_state(4, 0))


def test_fit_validates_shapes_and_budget():
    x = np.eye(4, dtype=complex)[:2]
    with pytest.raises(ConfigError):
        SubspaceEmulationForger(n_queries=1).fit(x, x)
    with pytest.raises(ConfigError):
        SubspaceEmulationForger(n_queries=2).fit(x, x[:1])


def test_subspace_forger_is_exact_on_its_span_and_zero_off_it():
    dev = qgen(QpufParams(dim=6), 2)
    forger = _learn(SubspaceEmulationForger(n_queries=3, random_state=0), dev)
    assert forger.learned_span_dim == 3
    inside = np.array([0.6, 0.8j, 0, 0, 0, 0])
    np.testing.assert_allclose(forger.predict(inside)[0], dev.unitary @ inside, atol=1e-12)
    # partially inside: F^2 equals the weight of the projection
    psi = haar_state(6, 7)
    weight = float(np.sum(np.abs(psi[:3]) ** 2))
    assert overlap_sq(forger.predict(psi)[0], dev.unitary @ psi) == pytest.approx(weight, abs=1e-12)


def test_subspace_forger_rejects_more_queries_than_dim():
    with pytest.raises(ConfigError):
        SubspaceEmulationForger(n_queries=5).learning_queries(4)


def test_replay_forger_returns_a_stored_response():
    dev = qgen(QpufParams(dim=4), 3)
    forger = _learn(ReplayNearestForger(n_queries=4, random_state=5), dev)
    c = forger.challenges_[2]
    np.testing.assert_allclose(forger.predict(c)[0], forger.responses_[2])
    assert len(forger.database_) == 4


def test_forgers_are_reproducible():
    a = RandomStateForger(random_state=4).fit(np.empty((0, 3)), np.empty((0, 3))).predict(np.eye(3))
    b = RandomStateForger(random_state=4).fit(np.empty((0, 3)), np.empty((0, 3))).predict(np.eye(3))
    np.testing.assert_array_equal(a, b)
