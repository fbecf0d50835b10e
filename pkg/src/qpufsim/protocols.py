"""qPUF identification protocols.

High-resource verifier (hr): the verifier keeps a CRP database and tests the
prover's quantum responses itself.  Low-resource verifier (lr): the verifier
mixes valid responses with orthogonal traps, the prover runs the SWAP tests
and returns classical bits, and the verifier only runs :func:`cver`.

Round counts: ``K`` is the database size, ``R`` the number of hr rounds and
``N`` the number of lr rounds.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .adversaries import ReplayNearestForger
from .eqtest import TestKind, TestPolicy, run_test, swap_accept_prob
from .exceptions import ConfigError
from .games import ChallengeSource, draw_challenge
from .montecarlo import Estimate, binomial_estimate, run_trials
from .qpuf import Family, QpufParams, build_crp_database, qgen
from .sampling import RngStream, check_random_state, haar_state, trap_state

COMPLETENESS_FAILURE = 1e-3
_BATCH = 1 << 16


class HrProver(str, enum.Enum):
    HONEST = "honest"
    RANDOM_ADV = "random_adv"
    REPLAY_ADV = "replay_adv"


class LrProver(str, enum.Enum):
    HONEST = "honest"
    CLASSICAL_RANDOM_ADV = "classical_random_adv"
    ALLZERO_ADV = "allzero_adv"
    NODEVICE_ADV = "nodevice_adv"


def _device_params(dim, family, pru_depth) -> QpufParams:
    family = Family(family)
    if family is Family.FIXED:
        raise ConfigError("protocols sample their device; use device_family haar or pru")
    return QpufParams(dim=dim, family=family, pru_depth=pru_depth)


@dataclass(frozen=True)
class HrProtocolConfig:
    dim: int
    n_challenges: int = 3
    copies: int = 3
    rounds: int = 3
    test_kind: TestKind = TestKind.GSWAP
    challenge_source: ChallengeSource = ChallengeSource.HAAR
    device_family: Family = Family.HAAR
    pru_depth: int | None = None
    adversary_queries: int = 0

    def __post_init__(self):
        for name, enum_cls in (("test_kind", TestKind), ("challenge_source", ChallengeSource),
                               ("device_family", Family)):
            object.__setattr__(self, name, enum_cls(getattr(self, name)))
        if not 1 <= self.rounds <= self.n_challenges:
            raise ConfigError(f"need 1 <= rounds <= n_challenges, got R={self.rounds}, K={self.n_challenges}")
        if self.copies < 1:
            raise ConfigError(f"copies must be >= 1, got {self.copies}")
        _device_params(self.dim, self.device_family, self.pru_depth)

    @property
    def policy(self) -> TestPolicy:
        return TestPolicy(self.test_kind, self.copies)


def hoeffding_delta_er(n_rounds: int, failure: float = COMPLETENESS_FAILURE) -> int:
    """Default trap-count tolerance ``ceil(sqrt((N/4) ln(2/failure) / 2))``.

    This is the two-sided Hoeffding radius ``2 exp(-2 t^2 / n) <= failure``
    for ``n = N/4`` coins.  Over the ``N/2`` actual trap rounds it is tighter
    than Hoeffding by a factor ``sqrt(2)``, which keeps ``delta_er`` below
    ``delta * N/2`` so the all-zero prover fails; the exact honest
    completeness is given by :func:`lr_accept_oracle`.
    """
    return math.ceil(math.sqrt(n_rounds / 4 * math.log(2 / failure) / 2))


@dataclass(frozen=True)
class LrProtocolConfig:
    dim: int
    rounds: int = 32
    delta: float = 0.5
    delta_er: float | None = None
    challenge_source: ChallengeSource = ChallengeSource.HAAR
    device_family: Family = Family.HAAR
    pru_depth: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "challenge_source", ChallengeSource(self.challenge_source))
        object.__setattr__(self, "device_family", Family(self.device_family))
        if self.rounds < 2 or self.rounds % 2:
            raise ConfigError(f"rounds N must be even and >= 2, got {self.rounds}")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if self.delta_er is None:
            object.__setattr__(self, "delta_er", hoeffding_delta_er(self.rounds))
        if self.delta_er < 0:
            raise ConfigError(f"delta_er must be >= 0, got {self.delta_er}")
        _device_params(self.dim, self.device_family, self.pru_depth)

    @property
    def trap_fraction(self) -> float:
        return 0.5


@dataclass(frozen=True)
class RoundRecord:
    challenge_index: int
    b: int | None = None
    s: int | None = None
    accepted: int | None = None
    p_accept: float | None = None


@dataclass(frozen=True)
class ProtocolOutcome:
    accepted: int
    per_round: tuple[RoundRecord, ...] = field(repr=False)
    delta_er: float | None = None


def run_hr_protocol(config: HrProtocolConfig, prover, rng=None) -> ProtocolOutcome:
    """Setup, identification and verification of the high-resource protocol.

    The verifier accepts only if every one of the ``R`` rounds passes its test.
    """
    prover = HrProver(prover)
    rng = check_random_state(rng)
    d = config.dim
    device = qgen(_device_params(d, config.device_family, config.pru_depth), rng)
    challenges = [draw_challenge(config.challenge_source, d, rng) for _ in range(config.n_challenges)]
    db = build_crp_database(device, challenges, config.copies)

    forger = None
    if prover is HrProver.REPLAY_ADV:
        # the adversary's query access while the device is in transit
        forger = ReplayNearestForger(n_queries=config.adversary_queries, random_state=rng)
        queries = forger.learning_queries(d)
        forger.fit(queries, np.array([device.evaluate(q) for q in queries]).reshape(-1, d))

    rounds = []
    for _ in range(config.rounds):
        i = int(rng.integers(config.n_challenges))
        record = db[i]
        if prover is HrProver.HONEST:
            answer = device.evaluate(record.challenge)
        elif prover is HrProver.RANDOM_ADV:
            answer = haar_state(d, rng)
        else:
            answer = forger.predict(record.challenge[None, :])[0]
        outcome = run_test(config.policy, answer, record.response, rng)
        rounds.append(RoundRecord(i, accepted=outcome.accepted, p_accept=outcome.p_accept))
    accepted = int(all(r.accepted for r in rounds))
    return ProtocolOutcome(accepted, tuple(rounds))


def _beta_moment(d: int, k: int) -> float:
    """``E[X^k]`` for ``X = |<psi|phi>|^2`` with one Haar-random state: Beta(1, d-1)."""
    return math.prod((1 + j) / (d + j) for j in range(k))


def hr_random_adversary_oracle(config: HrProtocolConfig) -> float:
    """Exact accept probability against a prover answering with fresh Haar states.

    Each round's overlap ``X`` is Beta(1, d-1) and independent across rounds.
    """
    d, m = config.dim, config.copies
    if config.test_kind is TestKind.GSWAP:
        per_round = (1 + m * _beta_moment(d, 1)) / (m + 1)
    else:
        per_round = sum(math.comb(m, k) * _beta_moment(d, k) for k in range(m + 1)) / 2 ** m
    return per_round ** config.rounds


def hr_soundness_envelope(config: HrProtocolConfig, constant: float = 4.0) -> float:
    """``C / 2^(R M)`` for SWAP and ``C / (M+1)^R`` for GSWAP."""
    if config.test_kind is TestKind.GSWAP:
        return constant / (config.copies + 1) ** config.rounds
    return constant / 2 ** (config.rounds * config.copies)


def _check_p_set(n: int, p_set) -> np.ndarray:
    if n % 2:
        raise ConfigError(f"cver needs an even number of rounds, got {n}")
    p = np.asarray(p_set, dtype=int).ravel()
    if p.size != n // 2 or len(set(p.tolist())) != p.size or (p.size and (p.min() < 0 or p.max() >= n)):
        raise ConfigError(f"p_set must hold N/2 = {n // 2} distinct indices in [0, {n})")
    return p


def cver(s, p_set, delta: float = 0.5, delta_er: float = 0.0) -> int:
    """Classical verification of the prover's SWAP outcome bits.

    test1: every position in ``p_set`` (valid responses) must read 0.
    test2: the number of 1s on the trap positions must lie within
    ``delta_er`` of ``delta * N / 2``.
    """
    s = [int(x) for x in s]
    n = len(s)
    p = set(_check_p_set(n, p_set).tolist())
    count = 0
    for i in p:
        if s[i] == 0:
            count += 1
    if count != n // 2:
        return 0
    count = 0
    for i in range(n):
        if i not in p and s[i] == 1:
            count += 1
    return int(abs(count - delta * n / 2) <= delta_er)


def run_lr_protocol(config: LrProtocolConfig, prover, rng=None) -> ProtocolOutcome:
    """Setup, identification and verification of the low-resource protocol.

    Outcome bit ``s_i = 0`` means the prover's SWAP test accepted.
    """
    prover = LrProver(prover)
    rng = check_random_state(rng)
    d, n = config.dim, config.rounds
    device = qgen(_device_params(d, config.device_family, config.pru_depth), rng)
    challenges = [draw_challenge(config.challenge_source, d, rng) for _ in range(n)]
    responses = [device.evaluate(c) for c in challenges]
    traps = [device.evaluate(trap_state(c, rng)) for c in challenges]
    p_set = np.sort(rng.choice(n, n // 2, replace=False))
    b = np.zeros(n, dtype=int)
    b[p_set] = 1
    sent = [responses[i] if b[i] else traps[i] for i in range(n)]

    p_accept = [None] * n
    if prover in (LrProver.HONEST, LrProver.NODEVICE_ADV):
        s = np.zeros(n, dtype=int)
        for i in range(n):
            own = device.evaluate(challenges[i]) if prover is LrProver.HONEST else haar_state(d, rng)
            p_accept[i] = swap_accept_prob(own, sent[i])
            s[i] = 0 if rng.random() < p_accept[i] else 1
    elif prover is LrProver.CLASSICAL_RANDOM_ADV:
        s = rng.integers(2, size=n)
    else:
        s = np.zeros(n, dtype=int)

    accepted = cver(s, p_set, config.delta, config.delta_er)
    rounds = tuple(RoundRecord(i, int(b[i]), int(s[i]), p_accept=p_accept[i]) for i in range(n))
    return ProtocolOutcome(accepted, rounds, config.delta_er)


def _binom_within(n: int, q: float, center: float, radius: float) -> float:
    """``Pr[|Bin(n, q) - center| <= radius]``."""
    return sum(math.comb(n, k) * q ** k * (1 - q) ** (n - k)
               for k in range(n + 1) if abs(k - center) <= radius)


def lr_accept_oracle(config: LrProtocolConfig, prover) -> float:
    """Exact acceptance probability of :func:`run_lr_protocol` for each prover."""
    prover = LrProver(prover)
    n, d = config.rounds, config.dim
    half = n // 2
    center = config.delta * half
    if prover is LrProver.HONEST:
        # valid rounds always pass; trap rounds read 1 with probability 1/2
        return _binom_within(half, 0.5, center, config.delta_er)
    if prover is LrProver.CLASSICAL_RANDOM_ADV:
        return 0.5 ** half * _binom_within(half, 0.5, center, config.delta_er)
    if prover is LrProver.ALLZERO_ADV:
        return float(center <= config.delta_er)
    # Haar answers: valid rounds pass w.p. (1 + 1/d)/2, trap rounds read 1 w.p. (1 - 1/d)/2
    return ((1 + 1 / d) / 2) ** half * _binom_within(half, (1 - 1 / d) / 2, center, config.delta_er)


def _classical_lr_rates(config: LrProtocolConfig, prover: LrProver, trials: int, seed: int) -> np.ndarray:
    """Accept bits for provers whose bits ignore every quantum state.

    Their transcripts depend only on the trap positions and their own coins,
    so ``(p_set, s)`` is sampled directly in batches of ``2**16`` trials;
    batch ``j`` uses stream ``(seed, j)``.
    """
    n, half = config.rounds, config.rounds // 2
    out = []
    for j, start in enumerate(range(0, trials, _BATCH)):
        size = min(_BATCH, trials - start)
        rng = RngStream(seed, j).generator()
        order = np.argsort(rng.random((size, n)), axis=1)
        valid = np.zeros((size, n), dtype=bool)
        np.put_along_axis(valid, order[:, :half], True, axis=1)
        if prover is LrProver.CLASSICAL_RANDOM_ADV:
            s = rng.integers(2, size=(size, n), dtype=np.int8)
        else:
            s = np.zeros((size, n), dtype=np.int8)
        test1 = ~np.any(valid & (s == 1), axis=1)
        ones = np.sum(~valid & (s == 1), axis=1)
        test2 = np.abs(ones - config.delta * half) <= config.delta_er
        out.append(test1 & test2)
    return np.concatenate(out)


def estimate_protocol_rates(config, prover, trials: int, seed: int = 0, n_jobs: int = 1) -> Estimate:
    """Monte Carlo acceptance rate over fresh protocol instances."""
    if trials < 100:
        raise ConfigError(f"estimate_protocol_rates needs trials >= 100, got {trials}")
    if isinstance(config, LrProtocolConfig):
        prover = LrProver(prover)
        if prover in (LrProver.CLASSICAL_RANDOM_ADV, LrProver.ALLZERO_ADV):
            return binomial_estimate(_classical_lr_rates(config, prover, trials, seed))
        run = run_lr_protocol
    elif isinstance(config, HrProtocolConfig):
        prover = HrProver(prover)
        run = run_hr_protocol
    else:
        raise ConfigError(f"unknown protocol config {type(config).__name__}")
    bits = run_trials(lambda _, rng: run(config, prover, rng).accepted, trials, seed, n_jobs)
    return binomial_estimate(bits)
