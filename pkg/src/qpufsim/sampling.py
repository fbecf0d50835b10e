"""Seeded samplers: Haar states and unitaries, phase PRS, brickwork PRU, trap states."""
from __future__ import annotations

import hashlib
import numbers
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, NumericError, RefusalError

DEFAULT_KEY_BYTES = 16
MAX_PRU_QUBITS = 8


@dataclass(frozen=True)
class RngStream:
    """An addressable random stream: identical ``(seed, stream_id)`` give identical draws.

    Monte Carlo drivers give trial ``i`` the stream ``RngStream(seed, i)`` so results
    do not depend on how trials are scheduled across workers.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if not isinstance(value, numbers.Integral) or not 0 <= value < 2 ** 64:
                raise ConfigError(f"{name} must be an integer in [0, 2**64), got {value!r}")

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence([self.seed, self.stream_id])))

    def substream(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)


def check_random_state(rng) -> np.random.Generator:
    """Turn ``None``, an int seed, an :class:`RngStream` or a Generator into a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if rng is None or isinstance(rng, numbers.Integral):
        return np.random.default_rng(rng)
    raise ConfigError(f"cannot use {rng!r} as a random state")


def _ginibre(shape, rng: np.random.Generator) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def haar_state(d: int, rng=None) -> np.ndarray:
    """Haar-random pure state: normalised vector of i.i.d. complex Gaussians."""
    if d < 2:
        raise ConfigError(f"dimension must be >= 2, got {d}")
    z = _ginibre(d, check_random_state(rng))
    return z / np.linalg.norm(z)


def haar_unitary(d: int, rng=None) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix.

    The phases of ``diag(R)`` are absorbed into ``Q``; without this correction
    the output is not Haar distributed.
    """
    if d < 1:
        raise ConfigError(f"dimension must be >= 1, got {d}")
    z = _ginibre((d, d), check_random_state(rng))
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    if np.any(np.abs(diag) == 0.0):
        raise NumericError("QR breakdown: singular Ginibre sample")
    return q * (diag / np.abs(diag))


def _is_power_of_two(d: int) -> bool:
    return d >= 2 and d & (d - 1) == 0


@dataclass(frozen=True)
class PrsKey:
    """Key of the phase pseudorandom state family on ``dim = 2**n`` amplitudes."""

    key_bytes: bytes
    dim: int

    def __post_init__(self):
        if not _is_power_of_two(self.dim):
            raise ConfigError(f"PRS dimension must be a power of 2, got {self.dim}")
        if not 1 <= len(self.key_bytes) <= hashlib.blake2b.MAX_KEY_SIZE:
            raise ConfigError(f"PRS key must be 1..{hashlib.blake2b.MAX_KEY_SIZE} bytes")

    @classmethod
    def random(cls, dim: int, rng=None, n_bytes: int = DEFAULT_KEY_BYTES) -> "PrsKey":
        return cls(check_random_state(rng).bytes(n_bytes), dim)


def keyed_phase_function(key: PrsKey) -> np.ndarray:
    """``f_k(x) = BLAKE2b_k(x) mod d`` for every ``x`` in ``range(d)``.

    The 128-bit digest is reduced modulo a power of two, so the reduction is exact.
    """
    n_bytes = max(1, (key.dim.bit_length() + 7) // 8)
    out = np.empty(key.dim, dtype=np.int64)
    for x in range(key.dim):
        digest = hashlib.blake2b(x.to_bytes(n_bytes, "big"), key=key.key_bytes, digest_size=16).digest()
        out[x] = int.from_bytes(digest, "big") % key.dim
    return out


def prs_phase_state(key: PrsKey) -> np.ndarray:
    """``d^{-1/2} sum_x omega_d^{f_k(x)} |x>`` with ``omega_d = exp(2*pi*i/d)``."""
    f = keyed_phase_function(key)
    return np.exp(2j * np.pi * f / key.dim) / np.sqrt(key.dim)


@dataclass(frozen=True)
class PruKey:
    """Key of the seeded brickwork-circuit unitary family on ``n_qubits`` qubits."""

    key_bytes: bytes
    n_qubits: int
    depth: int

    def __post_init__(self):
        if self.n_qubits < 1 or self.depth < 1:
            raise ConfigError(f"PRU needs n_qubits >= 1 and depth >= 1, got {self.n_qubits}, {self.depth}")
        if not self.key_bytes:
            raise ConfigError("PRU key must not be empty")

    @classmethod
    def random(cls, n_qubits: int, depth: int | None = None, rng=None,
               n_bytes: int = DEFAULT_KEY_BYTES) -> "PruKey":
        if depth is None:
            depth = 4 * n_qubits
        return cls(check_random_state(rng).bytes(n_bytes), n_qubits, depth)

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits


def brickwork_pairs(n_qubits: int, layer: int) -> list[tuple[int, int]]:
    """Neighbouring qubit pairs acted on in ``layer``: (0,1),(2,3).. then (1,2),(3,4).."""
    start = layer % 2
    return [(q, q + 1) for q in range(start, n_qubits - 1, 2)]


def _apply_gate(state: np.ndarray, gate: np.ndarray, qubits: tuple[int, ...], n: int) -> np.ndarray:
    """Apply a k-qubit gate to the leading qubit axes of a ``(2,)*n + (cols,)`` tensor."""
    k = len(qubits)
    cols = state.shape[-1]
    moved = np.moveaxis(state, qubits, range(k))
    rest = moved.shape[k:]
    out = (gate @ moved.reshape(2 ** k, -1)).reshape((2,) * k + rest)
    return np.moveaxis(out, range(k), qubits).reshape((2,) * n + (cols,))


def pru_unitary(key: PruKey) -> np.ndarray:
    """Full matrix of the brickwork circuit addressed by ``key``.

    Every layer applies independent Haar two-qubit blocks on alternating
    neighbour pairs, drawn from a generator seeded by the key bytes.  A
    single-qubit register gets one Haar one-qubit gate per layer.  Qubit 0 is
    the most significant bit of the computational-basis index.
    """
    n = key.n_qubits
    if n > MAX_PRU_QUBITS:
        raise RefusalError(f"pru_unitary limited to {MAX_PRU_QUBITS} qubits, got {n}")
    rng = np.random.default_rng(np.random.SeedSequence(int.from_bytes(key.key_bytes, "big")))
    d = 2 ** n
    if n == 1:
        u = np.eye(2, dtype=complex)
        for _ in range(key.depth):
            u = haar_unitary(2, rng) @ u
        return u
    acc = np.eye(d, dtype=complex).reshape((2,) * n + (d,))
    for layer in range(key.depth):
        for pair in brickwork_pairs(n, layer):
            acc = _apply_gate(acc, haar_unitary(4, rng), pair, n)
    return acc.reshape(d, d)


def trap_state(challenge, rng=None) -> np.ndarray:
    """Haar-random state in the orthogonal complement of ``challenge``."""
    challenge = np.asarray(challenge, dtype=complex)
    d = challenge.shape[0]
    if d < 2:
        raise ConfigError(f"dimension must be >= 2, got {d}")
    rng = check_random_state(rng)
    while True:
        z = _ginibre(d, rng)
        z = z - np.vdot(challenge, z) * challenge
        # second pass removes the residual left by rounding
        z = z - np.vdot(challenge, z) * challenge
        norm = np.linalg.norm(z)
        if norm > 1e-6:
            return z / norm
