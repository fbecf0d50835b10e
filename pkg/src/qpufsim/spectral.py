"""Eigenphase statistics of unitary ensembles.

Arc counts, the large-``d`` CUE mean/variance of arc counts, the Kolmogorov
distance of an empirical spectral measure to the uniform measure, and a
rejection-sampled family of almost maximally distinguishable unitaries.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import ConfigError, RefusalError
from .qmath import TWO_PI, eigenphases
from .qpuf import diamond_distance_unitaries
from .sampling import PruKey, check_random_state, haar_unitary, pru_unitary

EULER_GAMMA = 0.5772156649015329
_WIEAND_MARGIN = 0.05


def arc_count(phases, start: float, length: float) -> int:
    """Number of phases in the half-open arc ``[start, start + length)``, with wraparound."""
    if not 0.0 < length <= TWO_PI:
        raise ConfigError(f"arc length must lie in (0, 2*pi], got {length}")
    rel = np.mod(np.asarray(phases, dtype=float) - start, TWO_PI)
    return int(np.count_nonzero(rel < length))


def wieand_expected(d: int, theta: float) -> tuple[float, float]:
    """Large-``d`` mean and variance of the eigenvalue count in an arc of length ``theta``.

    mean = d theta / (2 pi);
    variance = (ln d + 1 + gamma + ln|2 sin(theta/2)|) / pi^2.
    """
    if not _WIEAND_MARGIN < theta < TWO_PI - _WIEAND_MARGIN:
        raise RefusalError(f"theta must lie in ({_WIEAND_MARGIN}, 2*pi - {_WIEAND_MARGIN}), got {theta}")
    mean = d * theta / TWO_PI
    var = (math.log(d) + 1.0 + EULER_GAMMA + math.log(abs(2.0 * math.sin(theta / 2.0)))) / math.pi ** 2
    return mean, var


def kolmogorov_distance(phases) -> float:
    """``sup_theta |N_theta / d - theta / (2 pi)|`` with ``N_theta`` counting ``[0, theta)``.

    The count is a step function, so the supremum is reached at a jump, taken
    from either side.  For sorted phases ``p_k`` (1-based, ties included) the
    candidates are ``k/d - p_k/2pi`` just after the jump and
    ``p_k/2pi - (k-1)/d`` just before it.
    """
    p = np.sort(np.asarray(phases, dtype=float))
    d = p.size
    if d == 0:
        raise ConfigError("kolmogorov_distance needs at least one phase")
    frac = p / TWO_PI
    # ties: the jump at p_k goes to the count of phases <= p_k
    after = np.searchsorted(p, p, side="right") / d - frac
    before = frac - np.searchsorted(p, p, side="left") / d
    return float(max(0.0, after.max(), before.max()))


@dataclass(frozen=True)
class ArcStats:
    theta: float
    mean_count: float
    var_count: float
    n_samples: int


class SpectralStatistics(TransformerMixin, BaseEstimator):
    """Per-unitary eigenphase features: arc count and Kolmogorov distance.

    ``transform`` maps a stack of unitaries to an ``(n, 2)`` array of
    ``[arc_count, kolmogorov_distance]``; ``fit`` also stores ensemble means
    and the arc-count variance.

    Parameters
    ----------
    theta : float, default=pi
        Arc length in radians.
    arc_start : float, default=0.0
        Start of the arc in radians.
    """

    def __init__(self, theta: float = math.pi, arc_start: float = 0.0):
        self.theta = theta
        self.arc_start = arc_start

    def _features(self, unitaries) -> np.ndarray:
        rows = []
        for u in unitaries:
            ph = eigenphases(u)
            rows.append((arc_count(ph, self.arc_start, self.theta), kolmogorov_distance(ph)))
        return np.array(rows, dtype=float).reshape(-1, 2)

    def fit(self, X, y=None):
        feats = self._features(X)
        if feats.shape[0] < 1:
            raise ConfigError("SpectralStatistics.fit needs at least one unitary")
        self.n_samples_ = feats.shape[0]
        self.dim_ = np.asarray(X[0]).shape[0]
        self.features_ = feats
        self.arc_mean_ = float(feats[:, 0].mean())
        self.arc_var_ = float(feats[:, 0].var(ddof=1)) if self.n_samples_ > 1 else 0.0
        self.kolmogorov_mean_ = float(feats[:, 1].mean())
        return self

    def transform(self, X):
        check_is_fitted(self, "n_samples_")
        return self._features(X)

    def fit_transform(self, X, y=None, **fit_params):
        return self.fit(X).features_

    @property
    def arc_stats_(self) -> ArcStats:
        check_is_fitted(self, "n_samples_")
        return ArcStats(self.theta, self.arc_mean_, self.arc_var_, self.n_samples_)


class SpectralFamily(str, enum.Enum):
    HAAR = "haar"
    PRU = "pru"
    MAXUNIQUE = "maxunique"


@dataclass
class UnitaryFamily:
    """Members of a rejection-sampled family plus the sampling effort spent."""

    members: list = field(repr=False)
    attempts: int

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i):
        return self.members[i]

    @property
    def acceptance_rate(self) -> float:
        # the first member is accepted unconditionally
        return (len(self.members) - 1) / max(1, self.attempts - 1)


def build_maxunique_family(d: int, n_members: int, epsilon: float, rng=None,
                           max_attempts: int | None = None) -> UnitaryFamily:
    """Haar unitaries kept only if ``2 - epsilon`` diamond-far from every kept member."""
    if n_members < 1:
        raise ConfigError(f"n_members must be >= 1, got {n_members}")
    if n_members * d > 1 << 16:
        raise RefusalError(f"n_members * d = {n_members * d} exceeds the sampling budget")
    rng = check_random_state(rng)
    if max_attempts is None:
        max_attempts = 50 * n_members
    members = []
    attempts = 0
    while len(members) < n_members:
        if attempts >= max_attempts:
            raise RefusalError(f"maxunique family: only {len(members)} of {n_members} members "
                               f"after {attempts} attempts (d={d}, epsilon={epsilon})")
        attempts += 1
        candidate = haar_unitary(d, rng)
        if all(diamond_distance_unitaries(candidate, m) >= 2.0 - epsilon for m in members):
            members.append(candidate)
    return UnitaryFamily(members, attempts)


def relative_unitaries(members) -> list:
    """``U_0^dag U_k`` for ``k >= 1``: the family shifted so that it contains the identity.

    Diamond distances within the family are unchanged by the shift.
    """
    ref = np.asarray(members[0]).conj().T
    return [ref @ np.asarray(u) for u in members[1:]]


def pairwise_diamond(members) -> np.ndarray:
    return np.array([diamond_distance_unitaries(a, b) for a, b in itertools.combinations(members, 2)])


@dataclass(frozen=True)
class SpectralReport:
    family: str
    dim: int
    kolmogorov_mean: float
    kolmogorov_per_sample: tuple[float, ...] = field(repr=False)
    arc_stats: ArcStats = None
    wieand_mean: float | None = None
    wieand_var: float | None = None


def sample_unitaries(family, d: int, n_samples: int, rng=None, *, pru_depth: int | None = None,
                     epsilon: float = 0.05) -> list:
    """Unitaries whose spectra a report is computed over.

    For MAXUNIQUE these are the relative unitaries of an ``n_samples + 1``
    member family, i.e. the family normalised to contain the identity.
    """
    family = SpectralFamily(family)
    rng = check_random_state(rng)
    if family is SpectralFamily.HAAR:
        return [haar_unitary(d, rng) for _ in range(n_samples)]
    if family is SpectralFamily.PRU:
        if d & (d - 1):
            raise ConfigError(f"PRU family needs a power-of-two dim, got {d}")
        n = d.bit_length() - 1
        return [pru_unitary(PruKey.random(n, pru_depth, rng)) for _ in range(n_samples)]
    return relative_unitaries(build_maxunique_family(d, n_samples + 1, epsilon, rng).members)


def spectral_report(family, d: int, n_samples: int, rng=None, *, theta: float = math.pi,
                    pru_depth: int | None = None, epsilon: float = 0.05) -> SpectralReport:
    """Arc statistics at ``theta`` and Kolmogorov distances for a sampled ensemble."""
    if n_samples < 30:
        raise ConfigError(f"spectral_report needs n_samples >= 30, got {n_samples}")
    family = SpectralFamily(family)
    unitaries = sample_unitaries(family, d, n_samples, rng, pru_depth=pru_depth, epsilon=epsilon)
    stats = SpectralStatistics(theta=theta).fit(unitaries)
    w_mean, w_var = wieand_expected(d, theta)
    return SpectralReport(
        family=family.value,
        dim=d,
        kolmogorov_mean=stats.kolmogorov_mean_,
        kolmogorov_per_sample=tuple(stats.features_[:, 1]),
        arc_stats=stats.arc_stats_,
        wieand_mean=w_mean,
        wieand_var=w_var,
    )
