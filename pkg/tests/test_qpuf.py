import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_state
from qpufsim.exceptions import ConfigError, QueryBudgetExceeded
from qpufsim.qmath import basis_state
from qpufsim.qpuf import (
    CrpDatabase,
    Family,
    QpufParams,
    build_crp_database,
    diamond_distance_unitaries,
    numerical_range_distance,
    qeval,
    qgen,
    sampled_diamond_lower_bound,
    uniqueness_test,
)
from qpufsim.sampling import haar_unitary


def arc_spread_diamond(u, v):
    """Independent oracle: 2 sin(theta/2) for the shortest arc theta holding the spectrum of U^dag V."""
    ph = np.angle(np.linalg.eigvals(u.conj().T @ v))
    best = 2 * math.pi
    for start in ph:
        best = min(best, float(np.max(np.mod(ph - start, 2 * math.pi))))
    if best >= math.pi:
        return 2.0
    return 2.0 * math.sin(best / 2)


def test_params_validation():
    with pytest.raises(ConfigError):
        QpufParams(dim=1)
    with pytest.raises(ConfigError):
        QpufParams(dim=6, family=Family.PRU)
    with pytest.raises(ConfigError):
        QpufParams(dim=2, family=Family.FIXED)
    with pytest.raises(ConfigError):
        QpufParams(dim=2, family=Family.FIXED, fixed_unitary=np.ones((2, 2)))
    with pytest.raises(ConfigError):
        QpufParams(dim=2, epsilon_noise=1.5)


def test_qgen_is_reproducible_from_seed():
    a, b = qgen(QpufParams(dim=4), 9), qgen(QpufParams(dim=4), 9)
    assert a.id == b.id
    np.testing.assert_array_equal(a.unitary, b.unitary)


def test_fixed_and_pru_families():
    u = haar_unitary(4, 1)
    dev = qgen(QpufParams(dim=4, family="fixed", fixed_unitary=u))
    np.testing.assert_array_equal(dev.unitary, u)
    pru = qgen(QpufParams(dim=8, family="pru", pru_depth=3), 2)
    np.testing.assert_allclose(pru.unitary.conj().T @ pru.unitary, np.eye(8), atol=1e-10)


def test_noiseless_evaluation_is_unitary_action():
    dev = qgen(QpufParams(dim=4), 3)
    psi = random_state(4, np.random.default_rng(0))
    np.testing.assert_allclose(qeval(dev, psi), dev.unitary @ psi)
    assert dev.query_count == 1


def test_noisy_channel_is_trace_preserving_mixture():
    eps = 0.2
    dev = qgen(QpufParams(dim=3, epsilon_noise=eps), 4)
    psi = basis_state(3, 1)
    out = qeval(dev, psi)
    expected = (1 - eps) * np.outer(dev.unitary @ psi, (dev.unitary @ psi).conj())
    expected[0, 0] += eps
    np.testing.assert_allclose(out, expected, atol=1e-14)
    assert np.trace(out).real == pytest.approx(1.0)


def test_query_budget_enforced():
    dev = qgen(QpufParams(dim=2, query_budget=2), 0)
    qeval(dev, basis_state(2, 0))
    qeval(dev, basis_state(2, 0))
    with pytest.raises(QueryBudgetExceeded):
        qeval(dev, basis_state(2, 0))
    assert dev.query_count == 2


def test_channel_does_not_count():
    dev = qgen(QpufParams(dim=2), 0)
    dev.channel(basis_state(2, 0))
    assert dev.query_count == 0


def test_crp_database():
    dev = qgen(QpufParams(dim=4), 5)
    ch = [basis_state(4, i) for i in range(3)]
    db = build_crp_database(dev, ch, copies_m=2)
    assert isinstance(db, CrpDatabase) and len(db) == 3
    assert dev.query_count == 6
    np.testing.assert_allclose(db.responses, dev.unitary[:, :3].T)
    np.testing.assert_array_equal(db[1].challenge, ch[1])


def test_numerical_range_distance_cases():
    assert numerical_range_distance([1, -1]) == pytest.approx(0.0, abs=1e-15)
    assert numerical_range_distance([1, 1j]) == pytest.approx(math.sqrt(0.5), abs=1e-15)
    assert numerical_range_distance([1, 1]) == pytest.approx(1.0)
    assert numerical_range_distance(np.exp(1j * np.array([0, 2.0, 4.0]))) == 0.0


def test_diamond_known_values():
    assert diamond_distance_unitaries(np.eye(2), np.diag([1, -1])) == pytest.approx(2.0, abs=1e-9)
    assert diamond_distance_unitaries(np.eye(2), np.diag([1, 1j])) == pytest.approx(math.sqrt(2), abs=1e-9)
    assert diamond_distance_unitaries(np.eye(3), np.eye(3)) == 0.0


@settings(max_examples=40, deadline=None)
@given(d=st.integers(2, 6), seed=st.integers(0, 2**32 - 1), scale=st.floats(0.01, 1.0))
def test_diamond_matches_arc_oracle_and_symmetries(d, seed, scale):
    rng = np.random.default_rng(seed)
    u = haar_unitary(d, rng)
    # shrink the relative spectrum so both the hull-inside and hull-outside branches occur
    h = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    w, vecs = np.linalg.eigh(h + h.conj().T)
    v = u @ (vecs @ np.diag(np.exp(1j * scale * w / np.abs(w).max() * 3)) @ vecs.conj().T)
    dist = diamond_distance_unitaries(u, v)
    assert 0.0 <= dist <= 2.0
    assert dist == pytest.approx(arc_spread_diamond(u, v), abs=1e-9)
    assert dist == pytest.approx(diamond_distance_unitaries(v, u), abs=1e-9)
    assert dist == pytest.approx(diamond_distance_unitaries(u, np.exp(0.7j) * v), abs=1e-9)


def test_sampled_bound_never_exceeds_closed_form():
    rng = np.random.default_rng(6)
    for _ in range(5):
        u, v = haar_unitary(3, rng), haar_unitary(3, rng)
        assert sampled_diamond_lower_bound(u, v, 2000, rng) <= diamond_distance_unitaries(u, v) + 1e-9


def test_uniqueness_test_reports_pairs():
    rep = uniqueness_test(QpufParams(dim=8), 5, 0)
    assert len(rep.distances) == 10
    assert 0 <= rep.fraction_above <= 1
    assert rep.min_distance <= rep.mean_distance
    with pytest.raises(ConfigError):
        uniqueness_test(QpufParams(dim=8), 1, 0)
    fixed = QpufParams(dim=2, family="fixed", fixed_unitary=np.eye(2))
    assert uniqueness_test(fixed, 3, 0).fraction_above == 0.0
