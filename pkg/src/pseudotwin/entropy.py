"""Sawtooth privacy-entropy model for pseudonym changes.

An entity's privacy entropy jumps to a reset level right after a pseudonym
change, then decays linearly at a fixed slope until it reaches a floor.
All entropy values are in bits (log base 2).
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class EntropyParams:
    """Parameters of one entity's sawtooth privacy-entropy curve.

    Attributes:
        h_max: ceiling entropy, bits.
        h_0: reset-discount scale; the post-change level is h_max - p * h_0.
        h_min: floor entropy, bits.
        alpha: linear decay slope, bits per unit time.
        p: probability of being tracked right after a change, in (0, 1].
    """

    h_max: float
    h_0: float
    h_min: float
    alpha: float
    p: float

    def __post_init__(self) -> None:
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"p must be in (0, 1], got {self.p}")
        if self.h_min < 0.0:
            raise ValueError(f"h_min must be >= 0, got {self.h_min}")
        if self.alpha < 0.0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        reset = self.h_max - self.p * self.h_0
        if not (self.h_min <= reset <= self.h_max):
            raise ValueError(
                f"reset level h_max - p*h_0 = {reset} must lie in "
                f"[h_min={self.h_min}, h_max={self.h_max}]"
            )


def tracking_entropy(p: float) -> float:
    """Entropy in bits of a tracking probability: -log2(p) for p in (0, 1]."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must be in (0, 1], got {p}")
    return -math.log2(p) + 0.0  # normalize -0.0 at p=1


def reset_level(params: EntropyParams) -> float:
    """Entropy level immediately after a pseudonym change: h_max - p * h_0."""
    return params.h_max - params.p * params.h_0


def decay_time(params: EntropyParams) -> float:
    """Time for the curve to decay from the reset level to the floor.

    Returns infinity when alpha is zero (no decay).
    """
    gap = reset_level(params) - params.h_min
    if params.alpha == 0.0:
        return math.inf
    return gap / params.alpha


def instantaneous_entropy(params: EntropyParams, t_since_change: float) -> float:
    """Entropy at a given time since the last pseudonym change.

    Linear decay from the reset level at slope alpha, clamped at h_min.
    """
    if t_since_change < 0.0:
        raise ValueError(f"t_since_change must be >= 0, got {t_since_change}")
    return max(params.h_min, reset_level(params) - params.alpha * t_since_change)


def average_entropy(params: EntropyParams, tau: float) -> float:
    """Time-averaged entropy over one inter-change interval of length tau.

    Equals the area under the sawtooth over [0, tau] divided by tau. While
    the curve is still decaying (tau <= decay_time) this is
    reset - alpha*tau/2; once the floor is reached, the flat segment is
    averaged in.
    """
    if not math.isfinite(tau) or tau <= 0.0:
        raise ValueError(f"tau must be finite and > 0, got {tau}")
    reset = reset_level(params)
    t_f = decay_time(params)
    if tau <= t_f:
        return reset - params.alpha * tau / 2.0
    ramp_area = t_f * (reset + params.h_min) / 2.0
    floor_area = (tau - t_f) * params.h_min
    return (ramp_area + floor_area) / tau


@dataclass(frozen=True)
class EntropyTimeline:
    """Piecewise-linear entropy curve with right-continuous resets.

    ``breakpoints`` holds the curve's vertices in strictly increasing time
    order. Each vertex carries the value *at* that instant (the post-change
    level at a change epoch); between vertices the curve decays linearly at
    ``params.alpha``, clamped at ``params.h_min``. Vertices are inserted
    wherever the slope changes, so each inter-vertex span is exactly linear.
    """

    params: EntropyParams
    breakpoints: tuple[tuple[float, float], ...]
    horizon: float

    def value(self, t: float, side: str = "right") -> float:
        """Curve value at time t; ``side="left"`` gives the pre-jump limit."""
        if not 0.0 <= t <= self.horizon:
            raise ValueError(f"t={t} outside [0, {self.horizon}]")
        times = [bp[0] for bp in self.breakpoints]
        if side == "right":
            idx = bisect_right(times, t) - 1
        elif side == "left":
            idx = bisect_left(times, t) - 1
            if idx < 0:
                idx = 0
        else:
            raise ValueError(f"side must be 'left' or 'right', got {side!r}")
        t0, v0 = self.breakpoints[idx]
        return max(self.params.h_min, v0 - self.params.alpha * (t - t0))

    def sawtooth_points(self) -> list[tuple[float, float]]:
        """Dense (time, entropy) polyline for plotting, duplicating times at jumps."""
        pts: list[tuple[float, float]] = []
        for i, (t0, v0) in enumerate(self.breakpoints):
            if i > 0:
                left = self.value(t0, side="left")
                if not math.isclose(left, v0, abs_tol=1e-12):
                    pts.append((t0, left))
            pts.append((t0, v0))
        end = self.value(self.horizon, side="left")
        if not pts or pts[-1][0] < self.horizon:
            pts.append((self.horizon, end))
        return pts


def timeline(
    params: EntropyParams, change_epochs: Sequence[float], horizon: float
) -> EntropyTimeline:
    """Build the sawtooth entropy curve over [0, horizon].

    The curve starts at the reset level at t=0 (as if a change just
    happened), decays at slope alpha, and resets at each change epoch.
    Epochs must be strictly increasing and lie within [0, horizon].
    """
    if horizon <= 0.0:
        raise ValueError(f"horizon must be > 0, got {horizon}")
    epochs = list(change_epochs)
    for i, e in enumerate(epochs):
        if not 0.0 <= e <= horizon:
            raise ValueError(f"change epoch {e} outside [0, {horizon}]")
        if i > 0 and e <= epochs[i - 1]:
            raise ValueError("change epochs must be strictly increasing")

    reset = reset_level(params)
    t_f = decay_time(params)
    bps: list[tuple[float, float]] = [(0.0, reset)]
    if epochs and epochs[0] == 0.0:
        epochs = epochs[1:]

    def add_floor_vertex(start: float, until: float) -> None:
        # Insert the kink where the decaying segment first touches the floor.
        hit = start + t_f
        if params.alpha > 0.0 and t_f > 0.0 and hit < until:
            bps.append((hit, params.h_min))

    prev = 0.0
    for e in epochs:
        add_floor_vertex(prev, e)
        bps.append((e, reset))
        prev = e
    add_floor_vertex(prev, horizon)
    return EntropyTimeline(params=params, breakpoints=tuple(bps), horizon=horizon)
