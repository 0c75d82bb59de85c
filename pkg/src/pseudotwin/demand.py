"""Poisson pseudonym-change demand: sampling, exact truncated pmf, estimation.

A VMU's change requests over an observation period form a homogeneous
Poisson process with rate ``frequency`` per unit time; the demand over the
period is Poisson with mean ``frequency * period``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Generator algorithm recorded in reports so runs are reproducible
# bit-exactly within this implementation.
RNG_ALGORITHM = "numpy-pcg64"

DEFAULT_TAIL_EPSILON = 1e-9


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class DemandModel:
    """Pseudonym-change demand of one VMU over an observation period."""

    frequency: float
    period: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.frequency) or self.frequency < 0.0:
            raise ValueError(f"frequency must be finite and >= 0, got {self.frequency}")
        if not math.isfinite(self.period) or self.period <= 0.0:
            raise ValueError(f"period must be finite and > 0, got {self.period}")

    @property
    def rate(self) -> float:
        """Poisson mean over the period: frequency * period."""
        return self.frequency * self.period


@dataclass(frozen=True)
class DemandPmf:
    """Truncated Poisson pmf over counts 0..n_trunc plus residual tail mass."""

    probabilities: tuple[float, ...]
    truncation_mass: float

    @property
    def n_trunc(self) -> int:
        return len(self.probabilities) - 1

    def mean(self) -> float:
        return sum(k * p for k, p in enumerate(self.probabilities))


def sample_demand(model: DemandModel, seed) -> int:
    """One Poisson draw of the period demand; identical seed, identical draw."""
    return int(_rng(seed).poisson(model.rate))


def sample_arrival_times(model: DemandModel, seed) -> np.ndarray:
    """Poisson-process arrival times over [0, period), sorted ascending.

    The number of arrivals is Poisson-distributed with the model's rate.
    """
    rng = _rng(seed)
    times = []
    t = 0.0
    if model.frequency > 0.0:
        while True:
            t += rng.exponential(1.0 / model.frequency)
            if t >= model.period:
                break
            times.append(t)
    return np.asarray(times, dtype=float)


def demand_pmf(model: DemandModel, epsilon: float = DEFAULT_TAIL_EPSILON) -> DemandPmf:
    """Exact Poisson pmf truncated at the smallest count covering 1 - epsilon.

    Masses follow the stable recurrence P(k+1) = P(k) * lam / (k + 1).
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    lam = model.rate
    if lam == 0.0:
        return DemandPmf(probabilities=(1.0,), truncation_mass=0.0)

    p = math.exp(-lam)
    target = 1.0 - epsilon
    if p == 0.0:
        # exp(-lam) underflows for lam beyond ~745; compute masses in log
        # space instead of running the recurrence from zero.
        probs = []
        cum = 0.0
        k = 0
        while cum < target:
            p = math.exp(k * math.log(lam) - lam - math.lgamma(k + 1))
            if p == 0.0 and k > lam:
                break  # tail underflowed; tolerance unreachable in float
            probs.append(p)
            cum += p
            k += 1
        return DemandPmf(
            probabilities=tuple(probs), truncation_mass=max(0.0, 1.0 - cum)
        )

    probs = [p]
    cum = p
    k = 0
    while cum < target:
        k += 1
        p = p * lam / k
        if p == 0.0:
            break  # tail underflowed; tolerance unreachable in float
        probs.append(p)
        cum += p
    return DemandPmf(probabilities=tuple(probs), truncation_mass=max(0.0, 1.0 - cum))


def extend_pmf(
    pmf: DemandPmf, model: DemandModel, max_count: int
) -> tuple[np.ndarray, float]:
    """Extend a truncated pmf's support through ``max_count``.

    Returns the extended probability array and the remaining tail mass.
    Used when an allocation exceeds the pmf's truncation point.
    """
    probs = list(pmf.probabilities)
    tail = pmf.truncation_mass
    lam = model.rate
    k = len(probs) - 1
    while k < max_count and tail > 0.0:
        k += 1
        nxt = probs[-1] * lam / k
        probs.append(nxt)
        tail = max(0.0, tail - nxt)
    return np.asarray(probs, dtype=float), tail


def estimate_frequency(change_timestamps: Sequence[float], window: float) -> float:
    """Maximum-likelihood Poisson rate from observed change times: count/window."""
    if window <= 0.0:
        raise ValueError(f"window must be > 0, got {window}")
    prev = None
    for t in change_timestamps:
        if not 0.0 <= t <= window:
            raise ValueError(f"timestamp {t} outside [0, {window}]")
        if prev is not None and t <= prev:
            raise ValueError("timestamps must be strictly increasing")
        prev = t
    return len(change_timestamps) / window
