import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpufsim.exceptions import ConfigError, RefusalError
from qpufsim.sampling import (
    PrsKey,
    PruKey,
    RngStream,
    brickwork_pairs,
    check_random_state,
    haar_state,
    haar_unitary,
    keyed_phase_function,
    prs_phase_state,
    pru_unitary,
    trap_state,
)


def test_rng_stream_is_deterministic_and_streams_differ():
    a = RngStream(7, 3).generator().random(4)
    b = RngStream(7, 3).generator().random(4)
    c = RngStream(7, 4).generator().random(4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_rng_stream_rejects_out_of_range_seed():
    with pytest.raises(ConfigError):
        RngStream(-1)
    with pytest.raises(ConfigError):
        RngStream(0, 2**64)


def test_check_random_state_accepts_common_forms():
    g = np.random.default_rng(0)
    assert check_random_state(g) is g
    assert isinstance(check_random_state(None), np.random.Generator)
    np.testing.assert_array_equal(check_random_state(5).random(2), check_random_state(5).random(2))
    np.testing.assert_array_equal(check_random_state(RngStream(5, 1)).random(2),
                                  RngStream(5, 1).generator().random(2))


@settings(max_examples=30, deadline=None)
@given(d=st.integers(1, 12), seed=st.integers(0, 2**32 - 1))
def test_haar_unitary_is_unitary(d, seed):
    u = haar_unitary(d, seed)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(d), atol=1e-12)


def test_haar_state_is_normalised():
    assert np.linalg.norm(haar_state(9, 1)) == pytest.approx(1.0, abs=1e-14)


def test_haar_unitary_first_moment_vanishes_and_overlap_moment():
    # E|U_00|^2 = 1/d for the Haar measure
    rng = np.random.default_rng(11)
    d = 4
    vals = np.array([abs(haar_unitary(d, rng)[0, 0]) ** 2 for _ in range(4000)])
    assert vals.mean() == pytest.approx(1 / d, abs=4 * vals.std() / math.sqrt(vals.size))


def test_haar_unitary_phase_of_trace_is_uniform():
    # without the diag(R) phase correction the spectrum is biased; E[tr U] = 0 for Haar
    rng = np.random.default_rng(12)
    tr = np.array([np.trace(haar_unitary(3, rng)) for _ in range(4000)])
    se = math.sqrt(np.mean(np.abs(tr) ** 2) / tr.size)
    assert abs(tr.mean()) < 4 * se


def test_prs_state_has_flat_amplitudes_and_is_keyed():
    key = PrsKey(b"k" * 16, 8)
    psi = prs_phase_state(key)
    np.testing.assert_allclose(np.abs(psi), np.full(8, 1 / math.sqrt(8)), atol=1e-15)
    np.testing.assert_array_equal(psi, prs_phase_state(PrsKey(b"k" * 16, 8)))
    assert not np.array_equal(psi, prs_phase_state(PrsKey(b"j" * 16, 8)))


def test_keyed_phase_function_matches_blake2b_directly():
    import hashlib

    key = PrsKey(bytes(range(16)), 4)
    expected = [int.from_bytes(hashlib.blake2b(bytes([x]), key=bytes(range(16)), digest_size=16).digest(),
                               "big") % 4 for x in range(4)]
    np.testing.assert_array_equal(keyed_phase_function(key), expected)


def test_prs_rejects_non_power_of_two():
    with pytest.raises(ConfigError):
        PrsKey(b"k", 6)


def test_brickwork_pairs_alternate():
    assert brickwork_pairs(5, 0) == [(0, 1), (2, 3)]
    assert brickwork_pairs(5, 1) == [(1, 2), (3, 4)]


def test_pru_unitary_matches_kron_construction():
    key = PruKey(b"\x01\x02", 3, 2)
    rng = np.random.default_rng(np.random.SeedSequence(int.from_bytes(key.key_bytes, "big")))
    g1 = haar_unitary(4, rng)  # layer 0 on qubits (0, 1)
    g2 = haar_unitary(4, rng)  # layer 1 on qubits (1, 2)
    expected = np.kron(np.eye(2), g2) @ np.kron(g1, np.eye(2))
    np.testing.assert_allclose(pru_unitary(key), expected, atol=1e-12)


def test_pru_unitary_is_deterministic_unitary_and_bounded():
    key = PruKey.random(4, rng=3)
    assert key.depth == 16
    u = pru_unitary(key)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(16), atol=1e-10)
    np.testing.assert_array_equal(u, pru_unitary(key))
    with pytest.raises(RefusalError):
        pru_unitary(PruKey(b"x", 9, 1))


@settings(max_examples=30, deadline=None)
@given(d=st.integers(2, 10), seed=st.integers(0, 2**32 - 1))
def test_trap_state_is_orthogonal_unit_vector(d, seed):
    rng = np.random.default_rng(seed)
    c = haar_state(d, rng)
    t = trap_state(c, rng)
    assert abs(np.vdot(c, t)) < 1e-12
    assert np.linalg.norm(t) == pytest.approx(1.0, abs=1e-12)
