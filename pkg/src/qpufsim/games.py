"""Security games: universal unforgeability, plus the PRS-vs-Haar
distinguishing games and the hybrid stages that connect the two.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .adversaries import AdversaryKind, BaseForger, make_adversary
from .eqtest import TestKind, TestPolicy, gswap_accept_prob, run_test, swap_accept_prob
from .exceptions import ConfigError, QueryBudgetExceeded
from .montecarlo import Estimate, binomial_estimate, mean_estimate, run_trials
from .qmath import overlap_sq
from .qpuf import Family, QpufDevice, QpufParams, qgen
from .sampling import PrsKey, RngStream, check_random_state, haar_state, haar_unitary, prs_phase_state

# Calibration trials draw from stream ids far above any trial index.
CALIBRATION_STREAM_OFFSET = 2 ** 62


class ChallengeSource(str, enum.Enum):
    HAAR = "haar"
    PRS = "prs"


def draw_challenge(source: ChallengeSource, dim: int, rng=None) -> np.ndarray:
    """A Haar-random state, or a phase PRS state under a freshly drawn key."""
    rng = check_random_state(rng)
    if ChallengeSource(source) is ChallengeSource.PRS:
        return prs_phase_state(PrsKey.random(dim, rng))
    return haar_state(dim, rng)


@dataclass(frozen=True)
class GameConfig:
    """Parameters of the unforgeability game.

    ``fidelity_threshold`` defines a forgery as a success when its squared
    fidelity with the true response reaches it; this is reported next to the
    raw accept rate of the sampled test, whose floor is ``1/(kappa+1)``.
    """

    dim: int
    challenge_source: ChallengeSource = ChallengeSource.HAAR
    learning_budget_q: int = 0
    test_copies_kappa: int = 3
    test_policy: TestPolicy | None = None
    trials: int = 1000
    seed: int = 0
    fidelity_threshold: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "challenge_source", ChallengeSource(self.challenge_source))
        if self.learning_budget_q < 0:
            raise ConfigError("learning_budget_q must be >= 0")
        if self.test_copies_kappa < 1:
            raise ConfigError("test_copies_kappa must be >= 1")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.test_policy is None:
            object.__setattr__(self, "test_policy", TestPolicy(TestKind.GSWAP, self.test_copies_kappa))


@dataclass(frozen=True)
class GameTranscript:
    challenge: np.ndarray = field(repr=False)
    forgery: np.ndarray = field(repr=False)
    test_accept: int
    p_accept: float
    fidelity_sq: float
    forged: bool
    queries_used: int
    aborted: bool = False


def run_unforgeability_game(config: GameConfig, device: QpufDevice, adversary: BaseForger,
                            rng=None) -> GameTranscript:
    """Play one round of the universal unforgeability game.

    The device's query budget is capped at ``learning_budget_q`` further
    queries for the learning phase; exceeding it aborts the game as a loss.
    The challenger computes the true response without spending queries.
    """
    if not device.is_unitary:
        raise ConfigError("the unforgeability game uses the pure-state path; device must be noiseless")
    rng = check_random_state(rng)
    d = config.dim
    start = device.query_count
    saved_budget = device.query_budget
    device.query_budget = start + config.learning_budget_q
    queries = adversary.learning_queries(d)
    try:
        responses = np.array([device.evaluate(x) for x in queries]).reshape(-1, d)
    except QueryBudgetExceeded:
        aborted = True
    else:
        aborted = False
    finally:
        device.query_budget = saved_budget
    used = device.query_count - start

    challenge = draw_challenge(config.challenge_source, d, rng)
    if aborted:
        return GameTranscript(challenge, np.zeros(d, dtype=complex), 0, 0.0, 0.0, False, used, True)
    adversary.fit(queries, responses)
    forgery = adversary.predict(challenge[None, :])[0]
    response = device.channel(challenge)
    fsq = overlap_sq(forgery, response)
    outcome = run_test(config.test_policy, forgery, response, rng)
    return GameTranscript(challenge, forgery, outcome.accepted, outcome.p_accept, fsq,
                          fsq >= config.fidelity_threshold, used)


def unforgeability_bound(dim: int, learned_dim: int) -> float:
    """Upper bound ``(d~ + 1)/d`` on the forging success probability."""
    return (learned_dim + 1) / dim


@dataclass(frozen=True)
class WinRateReport:
    """``accept`` is the raw sampled-test rate, ``forged`` the fidelity-threshold rate."""

    accept: Estimate
    forged: Estimate
    fidelity_sq: Estimate
    bound: float
    accept_floor: float
    learned_dim: int

    def __iter__(self):
        yield self.accept.value
        yield self.accept.std_err


def estimate_win_rate(config: GameConfig, device_params: QpufParams, adv_kind,
                      n_jobs: int = 1) -> WinRateReport:
    """Monte Carlo over fresh devices and adversaries, one random stream per trial."""
    if config.trials < 100:
        raise ConfigError(f"estimate_win_rate needs trials >= 100, got {config.trials}")
    if device_params.dim != config.dim:
        raise ConfigError(f"device dim {device_params.dim} != game dim {config.dim}")
    kind = AdversaryKind(adv_kind)

    def trial(_, rng):
        device = qgen(device_params, rng)
        adversary = make_adversary(kind, config.learning_budget_q, random_state=rng)
        t = run_unforgeability_game(config, device, adversary, rng)
        span = adversary.learned_span_dim if hasattr(adversary, "challenges_") else 0
        return t.test_accept, t.forged, t.fidelity_sq, span

    rows = run_trials(trial, config.trials, config.seed, n_jobs)
    accept, forged, fsq, span = (np.array(col) for col in zip(*rows))
    learned = int(span.max()) if kind is not AdversaryKind.RANDOM_STATE else 0
    kappa = config.test_policy.copies_m
    floor = 1.0 / (kappa + 1) if config.test_policy.kind is TestKind.GSWAP else 0.5 ** kappa
    return WinRateReport(
        accept=binomial_estimate(accept),
        forged=binomial_estimate(forged),
        fidelity_sq=mean_estimate(fsq),
        bound=unforgeability_bound(config.dim, min(learned, config.dim - 1)),
        accept_floor=floor,
        learned_dim=learned,
    )


# ---------------------------------------------------------------------------
# distinguishing games
# ---------------------------------------------------------------------------


class Stage(str, enum.Enum):
    GAME2 = "game2"
    GAME3 = "game3"
    GAME4 = "game4"
    GAME5 = "game5"


@dataclass(frozen=True)
class DistinguishingRound:
    """``b = 0`` is the PRS world, ``b = 1`` the Haar world."""

    b: int
    guess: int
    p_accept: float | None = None

    @property
    def correct(self) -> bool:
        return self.guess == self.b


@dataclass
class GameContext:
    """What the distinguisher is allowed to see besides the copies."""

    stage: Stage
    l: int
    l_prime: int
    public_unitary: np.ndarray | None = None
    oracle: QpufDevice | None = None
    learning_queries: int = 0


class ThresholdDistinguisher:
    """Guesses by thresholding a scalar statistic of the received copies.

    The threshold sits midway between the mean statistic in the two worlds and
    is fitted by :meth:`calibrate` on separate random streams.  Without a gap
    between the means the guess is a coin flip.
    """

    def __init__(self):
        self.threshold = None
        self.high_world = None

    def statistic(self, copies: np.ndarray, context: GameContext, rng) -> float:
        raise NotImplementedError

    def calibrate(self, stage, dim, m, l=None, l_prime=None, n_trials=400, seed=0,
                  device_params=None, learning_queries=0):
        stats = {0: [], 1: []}
        for i in range(n_trials):
            rng = RngStream(seed, CALIBRATION_STREAM_OFFSET + i).generator()
            b, copies, context = prepare_copies(stage, dim, m, l, l_prime, rng,
                                                device_params=device_params,
                                                learning_queries=learning_queries)
            stats[b].append(self.statistic(copies, context, rng))
        means = {b: float(np.mean(v)) if v else 0.0 for b, v in stats.items()}
        if abs(means[0] - means[1]) < 1e-12:
            self.threshold, self.high_world = None, None
        else:
            self.threshold = 0.5 * (means[0] + means[1])
            self.high_world = 0 if means[0] > means[1] else 1
        return self

    def guess(self, copies, context, rng) -> int:
        stat = self.statistic(copies, context, rng)
        if self.threshold is None or stat == self.threshold:
            return int(rng.integers(2))
        return self.high_world if stat > self.threshold else 1 - self.high_world


def _undo_public(copies: np.ndarray, context: GameContext) -> np.ndarray:
    """Bring every copy back to the unrotated state using the public unitary.

    Game 3 copies all carry ``U``.  Game 4 copies carry ``U`` only after the
    first ``l``; those first ``l`` are rotated by ``U`` and then everything is
    undone, which is how the Game 4 distinguisher reuses the Game 3 one.
    """
    u = context.public_unitary
    if u is None:
        return copies
    if context.stage is Stage.GAME4:
        copies = copies.copy()
        copies[: context.l] = copies[: context.l] @ u.T
    return copies @ u.conj()


class OverlapCollisionDistinguisher(ThresholdDistinguisher):
    """Sampled SWAP tests on disjoint pairs of copies; statistic = accept count."""

    def statistic(self, copies, context, rng):
        copies = _undo_public(copies, context)
        count = 0
        for i in range(0, len(copies) - 1, 2):
            count += rng.random() < swap_accept_prob(copies[i], copies[i + 1])
        return float(count)


class BasisCollisionDistinguisher(ThresholdDistinguisher):
    """Measures every copy in the computational basis; statistic = colliding pairs.

    Flat-amplitude phase states collide with probability ``1/d`` per pair,
    Haar states with ``2/(d+1)`` on average.
    """

    def statistic(self, copies, context, rng):
        copies = _undo_public(copies, context)
        outcomes = []
        for c in copies:
            p = np.abs(c) ** 2
            outcomes.append(int(rng.choice(len(c), p=p / p.sum())))
        _, counts = np.unique(outcomes, return_counts=True)
        return float(np.sum(counts * (counts - 1) // 2))


class ForgeryTestDistinguisher:
    """Runs a forger on the first copy and GSWAP-tests the forgery against the rest.

    This is the hidden-unitary stage built from a forging adversary: with one
    unrotated copy and ``m - 1`` copies of ``U|phi>`` the test accepts with
    probability ``1/m + (m-1)/m F^2``.  Acceptance is read as the PRS world.
    """

    def __init__(self, adv_kind=AdversaryKind.SUBSPACE_EMULATION):
        self.adv_kind = AdversaryKind(adv_kind)

    def calibrate(self, *args, **kwargs):
        return self

    def run(self, copies, context, rng) -> tuple[int, float]:
        if context.l != 1 or context.l_prime < 1:
            raise ConfigError("forgery-test distinguisher needs l = 1 and l' >= 1")
        oracle = context.oracle
        adversary = make_adversary(self.adv_kind, context.learning_queries, random_state=rng)
        queries = adversary.learning_queries(oracle.dim)
        responses = np.array([oracle.evaluate(x) for x in queries]).reshape(-1, oracle.dim)
        adversary.fit(queries, responses)
        forgery = adversary.predict(copies[0][None, :])[0]
        p = gswap_accept_prob(forgery, copies[1], context.l_prime)
        accepted = rng.random() < p
        return (0 if accepted else 1), p

    def guess(self, copies, context, rng) -> int:
        return self.run(copies, context, rng)[0]


class DistinguisherKind(str, enum.Enum):
    OVERLAP_COLLISION = "overlap_collision"
    BASIS_COLLISION = "basis_collision"
    FORGERY_TEST = "forgery_test"


def make_distinguisher(kind):
    kind = DistinguisherKind(kind)
    if kind is DistinguisherKind.OVERLAP_COLLISION:
        return OverlapCollisionDistinguisher()
    if kind is DistinguisherKind.BASIS_COLLISION:
        return BasisCollisionDistinguisher()
    return ForgeryTestDistinguisher()


def _resolve_split(stage: Stage, m: int, l, l_prime) -> tuple[int, int]:
    if stage in (Stage.GAME2, Stage.GAME3):
        return m, 0
    if l is None or l_prime is None:
        raise ConfigError(f"{stage.value} needs l and l_prime")
    if l + l_prime != m or l < 0 or l_prime < 0:
        raise ConfigError(f"l + l_prime must equal m: {l} + {l_prime} != {m}")
    return l, l_prime


def prepare_copies(stage, dim: int, m: int, l=None, l_prime=None, rng=None, *,
                   device_params: QpufParams | None = None, learning_queries: int = 0):
    """Challenger side of the distinguishing games.

    Returns ``(b, copies, context)`` where ``copies`` has one state per row.
    The random schedule (b, state, unitary) is the same for every stage so
    stages can be compared under a common seed.
    """
    stage = Stage(stage)
    if m < 1:
        raise ConfigError(f"m_copies must be >= 1, got {m}")
    l, l_prime = _resolve_split(stage, m, l, l_prime)
    rng = check_random_state(rng)
    b = int(rng.integers(2))
    phi = draw_challenge(ChallengeSource.PRS if b == 0 else ChallengeSource.HAAR, dim, rng)
    context = GameContext(stage, l, l_prime)
    if stage is Stage.GAME2:
        return b, np.tile(phi, (m, 1)), context
    if stage in (Stage.GAME3, Stage.GAME4):
        u = haar_unitary(dim, rng)
        context.public_unitary = u
        rotated = u @ phi
        if stage is Stage.GAME3:
            return b, np.tile(rotated, (m, 1)), context
        return b, np.vstack([np.tile(phi, (l, 1)), np.tile(rotated, (l_prime, 1))]), context
    params = device_params or QpufParams(dim=dim, family=Family.HAAR)
    device = qgen(params, rng)
    context.oracle = device
    context.learning_queries = learning_queries
    rotated = device.channel(phi)
    return b, np.vstack([np.tile(phi, (l, 1)), np.tile(rotated, (l_prime, 1))]), context


def run_reduction_game(stage, dim: int, m: int, l=None, l_prime=None, rng=None,
                       distinguisher=None, *, device_params: QpufParams | None = None,
                       learning_queries: int = 0) -> DistinguishingRound:
    """One round of a distinguishing game; ``.correct`` is the guess-correct bit."""
    rng = check_random_state(rng)
    b, copies, context = prepare_copies(stage, dim, m, l, l_prime, rng, device_params=device_params,
                                        learning_queries=learning_queries)
    if distinguisher is None:
        distinguisher = make_distinguisher(DistinguisherKind.OVERLAP_COLLISION)
    if isinstance(distinguisher, ForgeryTestDistinguisher):
        guess, p = distinguisher.run(copies, context, rng)
        return DistinguishingRound(b, guess, p)
    return DistinguishingRound(b, distinguisher.guess(copies, context, rng))


def run_prs_distinguish_game(dim: int, m_copies: int, distinguisher=None, rng=None) -> DistinguishingRound:
    """PRS vs Haar with ``m_copies`` copies and no unitary in between."""
    return run_reduction_game(Stage.GAME2, dim, m_copies, rng=rng, distinguisher=distinguisher)


@dataclass(frozen=True)
class DistinguishingReport:
    success: Estimate
    advantage: float
    accept_prs: Estimate | None = None
    accept_haar: Estimate | None = None


def estimate_distinguishing(stage, dim: int, m: int, l=None, l_prime=None, *, trials: int = 1000,
                            seed: int = 0, distinguisher_kind=DistinguisherKind.OVERLAP_COLLISION,
                            calibration_trials: int = 400, device_params: QpufParams | None = None,
                            learning_queries: int = 0, n_jobs: int = 1) -> DistinguishingReport:
    """Calibrate a distinguisher on held-out streams, then measure its success rate."""
    stage = Stage(stage)
    dist = make_distinguisher(distinguisher_kind)
    dist.calibrate(stage, dim, m, l, l_prime, n_trials=calibration_trials, seed=seed,
                   device_params=device_params, learning_queries=learning_queries)

    def trial(_, rng):
        r = run_reduction_game(stage, dim, m, l, l_prime, rng, dist, device_params=device_params,
                               learning_queries=learning_queries)
        return r.b, r.correct, r.p_accept

    rows = run_trials(trial, trials, seed, n_jobs)
    b = np.array([r[0] for r in rows])
    correct = np.array([r[1] for r in rows])
    success = binomial_estimate(correct)
    acc_prs = acc_haar = None
    if rows[0][2] is not None:
        p = np.array([r[2] for r in rows], dtype=float)
        acc_prs = mean_estimate(p[b == 0])
        acc_haar = mean_estimate(p[b == 1])
    return DistinguishingReport(success, abs(success.value - 0.5), acc_prs, acc_haar)
