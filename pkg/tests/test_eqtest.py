import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_density, random_state
from qpufsim.eqtest import (
    TestKind,
    TestPolicy,
    compound_accept_prob,
    gswap_accept_prob,
    gswap_projector_oracle,
    run_test,
    sample_tests,
    swap_accept_prob,
    swap_circuit_oracle,
)
from qpufsim.exceptions import ConfigError, DimensionError, RefusalError
from qpufsim.qmath import basis_state


def test_swap_orthogonal_and_identical():
    a, b = basis_state(4, 0), basis_state(4, 3)
    assert swap_accept_prob(a, b) == 0.5
    assert swap_accept_prob(a, a) == 1.0


def test_swap_on_two_density_matrices_matches_trace():
    rng = np.random.default_rng(3)
    rho, sigma = random_density(3, rng), random_density(3, rng)
    assert swap_accept_prob(rho, sigma) == pytest.approx(0.5 + 0.5 * np.trace(rho @ sigma).real, abs=1e-14)


def test_swap_circuit_oracle_on_maximally_mixed():
    d = 4
    assert swap_circuit_oracle(np.eye(d) / d, basis_state(d, 2)) == pytest.approx(0.5 + 0.5 / d, abs=1e-14)


def test_dimension_mismatch_raises():
    with pytest.raises(DimensionError):
        swap_accept_prob(basis_state(2, 0), basis_state(3, 0))


def test_gswap_limits():
    psi = basis_state(3, 0)
    assert gswap_accept_prob(psi, psi, 5) == pytest.approx(1.0)
    assert gswap_accept_prob(basis_state(3, 1), psi, 5) == pytest.approx(1 / 6)
    with pytest.raises(ConfigError):
        gswap_accept_prob(psi, psi, 0)


def test_oracles_refuse_out_of_range():
    with pytest.raises(RefusalError):
        swap_circuit_oracle(basis_state(32, 0), basis_state(32, 1))
    with pytest.raises(RefusalError):
        gswap_projector_oracle(basis_state(8, 0), basis_state(8, 1), 2)


def test_compound_policy():
    a, b = basis_state(2, 0), basis_state(2, 1)
    assert compound_accept_prob(TestPolicy(TestKind.SWAP, 10), a, b) == 2.0 ** -10
    assert compound_accept_prob(TestPolicy(TestKind.GSWAP, 9), a, b) == pytest.approx(0.1)
    with pytest.raises(ConfigError):
        TestPolicy(TestKind.SWAP, 0)


def test_run_test_is_seed_deterministic():
    rng_a, rng_b = np.random.default_rng(5), np.random.default_rng(5)
    a, b = basis_state(2, 0), np.array([1, 1]) / np.sqrt(2)
    pol = TestPolicy(TestKind.SWAP, 2)
    outs = [run_test(pol, a, b, rng_a) for _ in range(20)]
    assert outs == [run_test(pol, a, b, rng_b) for _ in range(20)]
    assert all(o.p_accept == pytest.approx(0.75 ** 2) for o in outs)


def test_sample_tests_shape_and_values():
    bits = sample_tests(TestPolicy(), basis_state(2, 0), basis_state(2, 0), 100, 1)
    assert bits.shape == (100,) and bits.sum() == 100


@settings(max_examples=40, deadline=None)
@given(d=st.integers(2, 5), seed=st.integers(0, 2**32 - 1))
def test_swap_is_symmetric_and_bounded(d, seed):
    rng = np.random.default_rng(seed)
    rho, sigma = random_density(d, rng), random_density(d, rng)
    p = swap_accept_prob(rho, sigma)
    assert 0.5 - 1e-12 <= p <= 1.0 + 1e-12
    assert p == pytest.approx(swap_accept_prob(sigma, rho), abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(d=st.integers(2, 4), m=st.integers(1, 3), seed=st.integers(0, 2**32 - 1))
def test_gswap_floor_and_projector_agreement(d, m, seed):
    rng = np.random.default_rng(seed)
    rho, psi = random_density(d, rng), random_state(d, rng)
    p = gswap_accept_prob(rho, psi, m)
    assert p >= 1 / (m + 1) - 1e-12
    assert p == pytest.approx(gswap_projector_oracle(rho, psi, m), abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(m=st.integers(1, 8), seed=st.integers(0, 2**32 - 1))
def test_gswap_is_monotone_in_overlap(m, seed):
    rng = np.random.default_rng(seed)
    psi = random_state(4, rng)
    a, b = random_state(4, rng), random_state(4, rng)
    ov_a, ov_b = abs(np.vdot(psi, a)) ** 2, abs(np.vdot(psi, b)) ** 2
    pa, pb = gswap_accept_prob(a, psi, m), gswap_accept_prob(b, psi, m)
    assert (pa - pb) * (ov_a - ov_b) >= -1e-14
