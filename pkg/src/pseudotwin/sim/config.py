"""Scenario configuration: typed, validated, echo-able.

A scenario is one observation period on a 1-D ring road: RSUs tile the
road, each VMU drives at constant speed and requests pseudonym changes as
a Poisson process, and its twin follows by migrating between RSUs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..allocator import GAConfig

SYNCHRONOUS = "synchronous"
ASYNCHRONOUS = "asynchronous"
ON_DEMAND = "on_demand"
EQUAL = "equal"

# Defaults for the entropy curve and cost coefficients match the bundled
# six-VMU reference scenario, so the presets only restate them.
DEFAULT_H_MAX = 1.5
DEFAULT_H_0 = 1.0
DEFAULT_H_MIN = 0.25
DEFAULT_ALPHA = 1.0
DEFAULT_BETA = 1.0
DEFAULT_H_STORE = 0.1
DEFAULT_R_PENALTY = 0.3


class ConfigError(ValueError):
    """Scenario validation failure; collects every offending field path."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class VmuSpec:
    """One VMU: motion, change frequency, and optional fixed tracking odds."""

    frequency: float
    position: float = 0.0
    velocity: float = 1.0
    p: float | None = None  # drawn from U(0, 0.5] when omitted
    group: int = 0  # reporting bucket for grouped experiments


@dataclass(frozen=True)
class AttackerSpec:
    """One passive attacker replayed against the scenario trace."""

    target: int = 0
    observe_physical: bool = True
    observe_virtual: bool = True
    seed: int | None = None  # derived from the master seed when omitted


@dataclass(frozen=True)
class ScenarioConfig:
    theta: float
    period: float
    vmus: tuple[VmuSpec, ...]
    mode: str = SYNCHRONOUS
    scheme: str = ON_DEMAND
    optimizer: str = "ga"
    master_seed: int = 0
    delta_sync: float = 1.0
    vt_cadence_ratio: float = 4.0
    vt_set_size: int = 10
    rsu_count: int = 4
    coverage_length: float = 5.0
    h_max: float = DEFAULT_H_MAX
    h_0: float = DEFAULT_H_0
    h_min: float = DEFAULT_H_MIN
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    h_store: float = DEFAULT_H_STORE
    r_penalty: float = DEFAULT_R_PENALTY
    attackers: tuple[AttackerSpec, ...] = ()
    ga: GAConfig = field(default_factory=GAConfig)

    @property
    def budget(self) -> int:
        """Whole pseudonyms producible over the period: floor(theta * period)."""
        return int(self.theta * self.period)

    @property
    def road_length(self) -> float:
        return self.rsu_count * self.coverage_length

    def with_scheme(self, scheme: str) -> "ScenarioConfig":
        return replace(self, scheme=scheme)

    def with_seed(self, master_seed: int) -> "ScenarioConfig":
        return replace(self, master_seed=master_seed)


def validate(config: ScenarioConfig) -> ScenarioConfig:
    """Check every field; raises ConfigError naming each bad field path."""
    errors: list[str] = []

    def bad(path: str, msg: str) -> None:
        errors.append(f"{path}: {msg}")

    if config.theta < 0:
        bad("scenario.theta", "must be >= 0")
    if config.period <= 0:
        bad("scenario.period", "must be > 0")
    if config.mode not in (SYNCHRONOUS, ASYNCHRONOUS):
        bad("scenario.mode", f"must be {SYNCHRONOUS} or {ASYNCHRONOUS}")
    if config.scheme not in (ON_DEMAND, EQUAL):
        bad("scenario.scheme", f"must be {ON_DEMAND} or {EQUAL}")
    if config.optimizer not in ("ga", "exact"):
        bad("scenario.optimizer", "must be ga or exact")
    if config.delta_sync <= 0:
        bad("scenario.delta_sync", "must be > 0")
    if config.vt_cadence_ratio <= 0:
        bad("scenario.vt_cadence_ratio", "must be > 0")
    if config.vt_set_size < 1:
        bad("scenario.vt_set_size", "must be >= 1")
    if config.rsu_count < 1:
        bad("road.rsu_count", "must be >= 1")
    if config.coverage_length <= 0:
        bad("road.coverage_length", "must be > 0")
    if not config.vmus:
        bad("vmu", "at least one VMU required")
    for i, vmu in enumerate(config.vmus):
        path = f"vmu[{i}]"
        if vmu.frequency < 0:
            bad(f"{path}.frequency", "must be >= 0")
        if vmu.velocity < 0:
            bad(f"{path}.velocity", "must be >= 0 (ring road direction is fixed)")
        if vmu.p is not None and not 0.0 < vmu.p <= 1.0:
            bad(f"{path}.p", "must be in (0, 1]")
        if vmu.group < 0:
            bad(f"{path}.group", "must be >= 0")
    if config.h_min < 0:
        bad("entropy.h_min", "must be >= 0")
    if config.h_0 < 0:
        bad("entropy.h_0", "must be >= 0")
    if config.alpha < 0:
        bad("entropy.alpha", "must be >= 0")
    if config.h_max < config.h_min:
        bad("entropy.h_max", "must be >= entropy.h_min")
    for name in ("beta", "h_store", "r_penalty"):
        if getattr(config, name) < 0:
            bad(f"costs.{name}", "must be >= 0")
    for i, atk in enumerate(config.attackers):
        path = f"attacker[{i}]"
        if not 0 <= atk.target < max(len(config.vmus), 1):
            bad(f"{path}.target", "must index a configured VMU")
    # reset level must stay within [h_min, h_max] for every admissible p
    for i, vmu in enumerate(config.vmus):
        p_hi = vmu.p if vmu.p is not None else 0.5
        if config.h_max - p_hi * config.h_0 < config.h_min:
            bad(
                f"vmu[{i}].p",
                "entropy reset level h_max - p*h_0 would fall below h_min",
            )
    if errors:
        raise ConfigError(errors)
    return config
