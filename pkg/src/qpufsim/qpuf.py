"""qPUF device model: generation, evaluation, CRP databases and uniqueness metrics."""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, QueryBudgetExceeded
from .qmath import basis_state, eigenphases
from .sampling import PruKey, check_random_state, haar_unitary, pru_unitary
from .validation import check_same_dim, check_unitary


class Family(str, enum.Enum):
    HAAR = "haar"
    PRU = "pru"
    FIXED = "fixed"


@dataclass(frozen=True)
class QpufParams:
    """Generation parameters.

    ``epsilon_noise`` is the weight of the contractive part of the channel
    ``(1-eps) U rho U^dag + eps |t><t|``.  ``delta_u`` is in diamond-norm units.
    """

    dim: int
    family: Family = Family.HAAR
    lambda_sec: int = 128
    epsilon_noise: float = 0.0
    delta_r: float = 0.0
    delta_c: float = 0.0
    delta_u: float = 1.9
    pru_depth: int | None = None
    fixed_unitary: np.ndarray | None = field(default=None, repr=False, compare=False)
    query_budget: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.dim < 2:
            raise ConfigError(f"dim must be >= 2, got {self.dim}")
        if not 0.0 <= self.epsilon_noise <= 1.0:
            raise ConfigError(f"epsilon_noise must lie in [0, 1], got {self.epsilon_noise}")
        for name in ("delta_r", "delta_c"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if not 0.0 <= self.delta_u <= 2.0:
            raise ConfigError(f"delta_u must lie in [0, 2], got {self.delta_u}")
        if self.family is Family.PRU and self.dim & (self.dim - 1):
            raise ConfigError(f"PRU family needs a power-of-two dim, got {self.dim}")
        if self.family is Family.FIXED:
            if self.fixed_unitary is None:
                raise ConfigError("FIXED family needs fixed_unitary")
            u = check_unitary(self.fixed_unitary)
            if u.shape[0] != self.dim:
                raise ConfigError(f"fixed_unitary has dim {u.shape[0]}, expected {self.dim}")


@dataclass
class QpufDevice:
    """A generated device.  Mutable: queries advance ``query_count``.

    One logical owner at a time; the counter is not synchronised.
    """

    id: str
    unitary: np.ndarray = field(repr=False)
    epsilon_noise: float = 0.0
    contractive_target: np.ndarray | None = field(default=None, repr=False)
    query_count: int = 0
    query_budget: int | None = None

    def __post_init__(self):
        if self.contractive_target is None:
            self.contractive_target = basis_state(self.dim, 0)

    @property
    def dim(self) -> int:
        return self.unitary.shape[0]

    @property
    def is_unitary(self) -> bool:
        return self.epsilon_noise == 0.0

    def _consume(self, n: int = 1):
        if self.query_budget is not None and self.query_count + n > self.query_budget:
            raise QueryBudgetExceeded(
                f"device {self.id}: {self.query_count + n} queries exceed budget {self.query_budget}")
        self.query_count += n

    def channel(self, rho) -> np.ndarray:
        """The device channel without query accounting (challenger-side use)."""
        rho = np.asarray(rho, dtype=complex)
        check_same_dim(self.unitary, rho)
        u = self.unitary
        if self.is_unitary:
            return u @ rho if rho.ndim == 1 else u @ rho @ u.conj().T
        if rho.ndim == 1:
            out = np.outer(u @ rho, (u @ rho).conj())
        else:
            out = u @ rho @ u.conj().T
        t = self.contractive_target
        return (1.0 - self.epsilon_noise) * out + self.epsilon_noise * np.outer(t, t.conj())

    def evaluate(self, rho) -> np.ndarray:
        """One counted query; see :func:`qeval`."""
        self._consume()
        return self.channel(rho)


def qgen(params: QpufParams, rng=None) -> QpufDevice:
    """Manufacture a device; replaying the same random stream gives the same device."""
    rng = check_random_state(rng)
    if params.family is Family.HAAR:
        u = haar_unitary(params.dim, rng)
    elif params.family is Family.PRU:
        n = params.dim.bit_length() - 1
        u = pru_unitary(PruKey.random(n, params.pru_depth, rng))
    elif params.family is Family.FIXED:
        u = np.array(params.fixed_unitary, dtype=complex)
    else:  # pragma: no cover - enum is closed
        raise ConfigError(f"unsupported family {params.family!r}")
    return QpufDevice(id=rng.bytes(8).hex(), unitary=u, epsilon_noise=params.epsilon_noise,
                      query_budget=params.query_budget)


def qeval(device: QpufDevice, rho) -> np.ndarray:
    """Evaluate the device on ``rho`` and count the query.

    A noiseless device maps a pure state vector to a pure state vector; in every
    other case the output is the density matrix
    ``(1-eps) U rho U^dag + eps |t><t|``.
    """
    return device.evaluate(rho)


def numerical_range_distance(eigvals) -> float:
    """Distance from 0 to the convex hull of points on (or near) the unit circle.

    The hull excludes the origin exactly when some angular gap between
    consecutive points exceeds pi; the nearest hull point then lies on the
    chord closing that gap.
    """
    lam = np.asarray(eigvals, dtype=complex)
    order = np.argsort(np.mod(np.angle(lam), 2 * np.pi))
    lam = lam[order]
    phases = np.mod(np.angle(lam), 2 * np.pi)
    if len(lam) == 1:
        return float(abs(lam[0]))
    gaps = np.diff(np.concatenate([phases, [phases[0] + 2 * np.pi]]))
    k = int(np.argmax(gaps))
    if gaps[k] < np.pi:
        return 0.0
    a, b = lam[k], lam[(k + 1) % len(lam)]
    return _segment_distance(a, b)


def _segment_distance(a: complex, b: complex) -> float:
    """Euclidean distance from the origin to the segment ``[a, b]`` in the plane."""
    ab = b - a
    denom = abs(ab) ** 2
    if denom == 0.0:
        return float(abs(a))
    t = min(1.0, max(0.0, -np.real(np.conj(ab) * a) / denom))
    return float(abs(a + t * ab))


def diamond_distance_unitaries(u, v) -> float:
    """``||U - V||_diamond = 2 sqrt(1 - delta(U^dag V)^2)``.

    For the normal matrix ``U^dag V`` the numerical range is the convex hull
    of the spectrum, so ``delta`` is exact.
    """
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    check_same_dim(u, v)
    lam = np.exp(1j * eigenphases(u.conj().T @ v))
    delta = min(1.0, numerical_range_distance(lam))
    return 2.0 * math.sqrt(1.0 - delta * delta)


def sampled_diamond_lower_bound(u, v, n_samples: int = 10_000, rng=None) -> float:
    """Best trace distance ``||(U(x)I) phi - (V(x)I) phi||_1`` over random inputs.

    Input states live on system (x) ancilla of equal size.  Every sample is a
    valid lower bound on the diamond distance.
    """
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    d = check_same_dim(u, v)
    rng = check_random_state(rng)
    z = rng.standard_normal((n_samples, d, d)) + 1j * rng.standard_normal((n_samples, d, d))
    z /= np.linalg.norm(z.reshape(n_samples, -1), axis=1)[:, None, None]
    # phi[s, i, a]: system index i, ancilla a
    a = np.einsum("ij,sja->sia", u, z).reshape(n_samples, -1)
    b = np.einsum("ij,sja->sia", v, z).reshape(n_samples, -1)
    diff = np.einsum("si,sj->sij", a, a.conj()) - np.einsum("si,sj->sij", b, b.conj())
    norms = np.abs(np.linalg.eigvalsh(diff)).sum(axis=1)
    return float(norms.max())


@dataclass(frozen=True)
class UniquenessReport:
    fraction_above: float
    min_distance: float
    mean_distance: float
    distances: tuple[float, ...]
    delta_u: float


def uniqueness_test(params: QpufParams, n_devices: int, rng=None) -> UniquenessReport:
    """Empirical ``Pr[||Lambda_i - Lambda_j||_diamond >= delta_u]`` over device pairs."""
    if n_devices < 2:
        raise ConfigError(f"uniqueness_test needs n_devices >= 2, got {n_devices}")
    rng = check_random_state(rng)
    devices = [qgen(params, rng) for _ in range(n_devices)]
    dists = [diamond_distance_unitaries(a.unitary, b.unitary)
             for a, b in itertools.combinations(devices, 2)]
    arr = np.array(dists)
    return UniquenessReport(
        fraction_above=float(np.mean(arr >= params.delta_u)),
        min_distance=float(arr.min()),
        mean_distance=float(arr.mean()),
        distances=tuple(float(x) for x in arr),
        delta_u=params.delta_u,
    )


@dataclass(frozen=True)
class CrpRecord:
    challenge: np.ndarray = field(repr=False)
    response: np.ndarray = field(repr=False)
    copies: int = 1

    def __post_init__(self):
        if self.copies < 1:
            raise ConfigError(f"CRP copies must be >= 1, got {self.copies}")


@dataclass
class CrpDatabase:
    records: list[CrpRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def challenges(self) -> np.ndarray:
        return np.array([r.challenge for r in self.records])

    @property
    def responses(self) -> np.ndarray:
        return np.array([r.response for r in self.records])


def build_crp_database(device: QpufDevice, challenges, copies_m: int = 1) -> CrpDatabase:
    """Query every challenge ``copies_m`` times and store the (pure) response.

    Only noiseless devices are supported: responses are stored as pure states.
    """
    if not device.is_unitary:
        raise ConfigError("CRP databases are only built for noiseless (epsilon_noise = 0) devices")
    if copies_m < 1:
        raise ConfigError(f"copies_m must be >= 1, got {copies_m}")
    db = CrpDatabase()
    for c in challenges:
        c = np.asarray(c, dtype=complex)
        response = None
        for _ in range(copies_m):
            response = device.evaluate(c)
        db.records.append(CrpRecord(c, response, copies_m))
    return db
