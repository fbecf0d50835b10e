"""Deterministic Monte Carlo driver.

Trial ``i`` always receives ``RngStream(seed, i)``, and results are collected
in trial order, so estimates are identical for any worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, TypeVar

import numpy as np

from .exceptions import ConfigError
from .sampling import RngStream

T = TypeVar("T")


@dataclass(frozen=True)
class Estimate:
    value: float
    std_err: float
    n: int

    def __iter__(self):
        # allows ``rate, se = estimate``
        yield self.value
        yield self.std_err


def binomial_estimate(bits) -> Estimate:
    bits = np.asarray(bits, dtype=float)
    n = bits.size
    p = float(bits.mean())
    return Estimate(p, math.sqrt(p * (1.0 - p) / n), n)


def mean_estimate(values) -> Estimate:
    values = np.asarray(values, dtype=float)
    n = values.size
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return Estimate(float(values.mean()), se, n)


def run_trials(trial: Callable[[int, np.random.Generator], T], n_trials: int, seed: int,
               n_jobs: int = 1) -> list[T]:
    """Run ``trial(i, rng_i)`` for ``i in range(n_trials)``; results in trial order."""
    if n_trials < 1:
        raise ConfigError(f"n_trials must be >= 1, got {n_trials}")

    def one(i: int) -> T:
        return trial(i, RngStream(seed, i).generator())

    if n_jobs is None or n_jobs <= 1:
        return [one(i) for i in range(n_trials)]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(one, range(n_trials)))
