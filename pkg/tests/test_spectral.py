import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from qpufsim.exceptions import ConfigError, RefusalError
from qpufsim.qmath import eigenphases
from qpufsim.sampling import haar_unitary
from qpufsim.spectral import (
    SpectralStatistics,
    arc_count,
    build_maxunique_family,
    kolmogorov_distance,
    pairwise_diamond,
    relative_unitaries,
    spectral_report,
    wieand_expected,
)

TWO_PI = 2 * math.pi
phase_lists = st.lists(st.floats(0, TWO_PI, exclude_max=True), min_size=1, max_size=40)


def kolmogorov_reference(phases, grid=20001):
    """Brute force over a fine grid plus both sides of every phase."""
    p = np.asarray(phases)
    thetas = np.concatenate([np.linspace(0, TWO_PI, grid), p, np.nextafter(p, np.inf)])
    counts = (p[None, :] < thetas[:, None]).sum(axis=1)
    return float(np.max(np.abs(counts / p.size - thetas / TWO_PI)))


def test_arc_count_examples():
    assert arc_count(np.zeros(5), -0.1, 0.2) == 5
    assert arc_count([0.0, math.pi], math.pi / 2, math.pi) == 1
    with pytest.raises(ConfigError):
        arc_count([0.0], 0.0, 0.0)
    with pytest.raises(ConfigError):
        arc_count([0.0], 0.0, 7.0)


def test_arc_count_half_open():
    assert arc_count([1.0], 1.0, 0.5) == 1
    assert arc_count([1.5], 1.0, 0.5) == 0


@settings(max_examples=60, deadline=None)
@given(phases=phase_lists, start=st.floats(-10, 10), cut=st.floats(0.01, TWO_PI - 0.01))
def test_complementary_arcs_partition_the_circle(phases, start, cut):
    # a phase on an arc boundary can be double counted by rounding in start + cut
    for edge in (start, start + cut):
        assume(all(abs(math.remainder(p - edge, TWO_PI)) > 1e-9 for p in phases))
    assert arc_count(phases, start, cut) + arc_count(phases, start + cut, TWO_PI - cut) == len(phases)
    assert arc_count(phases, start, TWO_PI) == len(phases)


def test_wieand_formula_against_high_precision():
    mpmath.mp.dps = 40
    d, theta = 64, mpmath.pi
    expected = (mpmath.log(d) + 1 + mpmath.euler + mpmath.log(abs(2 * mpmath.sin(theta / 2)))) / mpmath.pi ** 2
    mean, var = wieand_expected(64, math.pi)
    assert mean == 32.0
    assert var == pytest.approx(float(expected), rel=1e-12)
    assert var == pytest.approx(0.651419, abs=1e-6)


def test_wieand_mean_linearity_and_refusal():
    a, _ = wieand_expected(32, 1.0)
    b, _ = wieand_expected(32, TWO_PI - 1.0)
    assert a + b == pytest.approx(32)
    assert wieand_expected(32, 0.06)[0] < 0.31
    for theta in (0.01, TWO_PI, TWO_PI - 0.01):
        with pytest.raises(RefusalError):
            wieand_expected(32, theta)


def test_kolmogorov_equispaced_and_degenerate():
    for d in (4, 16, 64):
        ph = TWO_PI * np.arange(d) / d
        assert kolmogorov_distance(ph) == pytest.approx(1 / d, abs=1e-12)
    assert kolmogorov_distance(np.zeros(4)) == 1.0
    assert kolmogorov_distance(np.zeros(8)) >= 0.9
    # an atom at c: the step to 1 happens at c, so the sup is max(1 - c/2pi, c/2pi)
    assert kolmogorov_distance(np.full(8, 2.0)) == pytest.approx(1 - 2.0 / TWO_PI, abs=1e-15)
    with pytest.raises(ConfigError):
        kolmogorov_distance([])


@settings(max_examples=60, deadline=None)
@given(phases=phase_lists)
def test_kolmogorov_bounds_and_reference(phases):
    k = kolmogorov_distance(phases)
    d = len(phases)
    assert 1 / (2 * d) - 1e-12 <= k <= 1.0
    assert k == pytest.approx(kolmogorov_reference(phases), abs=2 * TWO_PI / 20000 / TWO_PI + 1e-12)


def test_spectral_statistics_transformer():
    us = [haar_unitary(8, i) for i in range(5)]
    est = SpectralStatistics(theta=math.pi)
    feats = est.fit_transform(us)
    assert feats.shape == (5, 2)
    np.testing.assert_array_equal(feats, est.transform(us))
    assert feats[0, 0] == arc_count(eigenphases(us[0]), 0.0, math.pi)
    assert est.arc_stats_.n_samples == 5
    assert est.get_params() == {"theta": math.pi, "arc_start": 0.0}


def test_spectral_report_requires_samples_and_is_deterministic():
    with pytest.raises(ConfigError):
        spectral_report("haar", 8, 10, 0)
    a = spectral_report("haar", 8, 30, 1)
    b = spectral_report("haar", 8, 30, 1)
    assert a == b
    assert all(0 <= k <= 1 for k in a.kolmogorov_per_sample)


def test_spectral_report_pru_family():
    rep = spectral_report("pru", 16, 30, 2, pru_depth=8)
    assert rep.family == "pru" and rep.dim == 16
    with pytest.raises(ConfigError):
        spectral_report("pru", 12, 30, 2)


def test_maxunique_single_member_and_pairwise_filter():
    fam = build_maxunique_family(8, 1, 0.05, 0)
    assert len(fam) == 1 and fam.attempts == 1
    fam = build_maxunique_family(8, 6, 0.05, 1)
    assert np.all(pairwise_diamond(fam.members) >= 1.95)


def test_maxunique_relative_unitaries_preserve_distance():
    fam = build_maxunique_family(8, 3, 0.05, 3)
    rel = relative_unitaries(fam.members)
    from qpufsim.qpuf import diamond_distance_unitaries

    assert diamond_distance_unitaries(np.eye(8), rel[0]) == pytest.approx(
        diamond_distance_unitaries(fam[0], fam[1]), abs=1e-9)


def test_maxunique_refuses_impossible_requests():
    # at d=2 two members are 1.99-far only when U^dag V is close to a reflection
    with pytest.raises(RefusalError) as err:
        build_maxunique_family(2, 5, 0.01, 0, max_attempts=20)
    assert "of 5 members" in str(err.value)
    with pytest.raises(RefusalError):
        build_maxunique_family(4096, 100, 0.05, 0)


def test_maxunique_acceptance_rate_at_d32():
    fam = build_maxunique_family(32, 10, 0.05, 0)
    assert fam.acceptance_rate >= 0.5
