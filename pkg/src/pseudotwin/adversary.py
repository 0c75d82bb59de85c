"""Passive tracking adversaries: eavesdropping, linkage mapping, re-identification.

The attacker watches the physical layer (safety-message broadcasts carrying
VMU pseudonyms) and/or the virtual layer (twin presence carrying VT
pseudonyms), builds a mapping between pseudonyms whose active intervals
overlap with consistent location features, and tries to keep a lock on one
target across pseudonym-change boundaries:

* an asynchronous boundary leaves the other layer's pseudonym in place, so
  the attacker follows with certainty;
* a synchronized change inside a group of G indistinguishable members is a
  uniform 1-in-G guess, and a wrong guess loses the target for good.

Data-injection and impersonation misbehavior are modeled as discrete
events that succeed only when the corresponding protocol defense is off.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PHYSICAL = "physical"
VIRTUAL = "virtual"

# Cross-layer observations this close in time can be matched.
LINK_WINDOW = 0.5


@dataclass(frozen=True)
class Observation:
    """One eavesdropped sighting on either layer."""

    time: float
    layer: str
    pseudonym: int
    region: int
    velocity: float
    heading: int = 0

    def __post_init__(self) -> None:
        if self.layer not in (PHYSICAL, VIRTUAL):
            raise ValueError(f"layer must be physical or virtual, got {self.layer!r}")

    @property
    def features(self) -> tuple[float, int]:
        return (self.velocity, self.heading)


@dataclass(frozen=True)
class BoundaryEvent:
    """A pseudonym-change instant as seen from outside.

    kind is "vmu" or "vt" for one-sided (asynchronous) changes and "pair"
    for a synchronized change. Pids give the target's ground truth so a
    replay can score whether the attacker's lock is correct.
    """

    time: float
    kind: str
    group_size: int
    target_involved: bool = True
    new_vmu_pid: int | None = None
    new_vt_pid: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("vmu", "vt", "pair"):
            raise ValueError(f"kind must be vmu, vt or pair, got {self.kind!r}")
        if self.group_size < 1:
            raise ValueError("group_size must be >= 1")


@dataclass(frozen=True)
class ScenarioTrace:
    """Complete replayable record of one scenario for one target."""

    observations: tuple[Observation, ...]
    boundaries: tuple[BoundaryEvent, ...]
    horizon: float
    initial_vmu_pid: int
    initial_vt_pid: int


@dataclass(frozen=True)
class AttackerConfig:
    """Observability mask and seed of one passive-global attacker."""

    observe_physical: bool = True
    observe_virtual: bool = True
    seed: int = 0

    def layer_enabled(self, layer: str) -> bool:
        return self.observe_physical if layer == PHYSICAL else self.observe_virtual


@dataclass
class AttackerBelief:
    """What the attacker currently holds about one target."""

    vmu_pid: int | None = None
    vt_pid: int | None = None
    tracking: bool = True
    link_table: dict[int, set[int]] = field(default_factory=dict)
    boundary_counts: list[int] = field(default_factory=list)
    last_physical: Observation | None = None
    last_virtual: Observation | None = None

    def link(self, vmu_pid: int, vt_pid: int) -> None:
        self.link_table.setdefault(vmu_pid, set()).add(vt_pid)


def observe(
    belief: AttackerBelief, obs: Observation, config: AttackerConfig
) -> AttackerBelief:
    """Fold one sighting into the belief; links form on co-located matches."""
    if not config.layer_enabled(obs.layer) or not belief.tracking:
        return belief
    if obs.layer == PHYSICAL:
        if belief.vmu_pid == obs.pseudonym:
            belief.last_physical = obs
            _try_link(belief)
        elif belief.vmu_pid is None and _matches(obs, belief.last_virtual):
            # re-acquire the physical identity through the known twin
            belief.vmu_pid = obs.pseudonym
            belief.last_physical = obs
            _try_link(belief)
    else:
        if belief.vt_pid == obs.pseudonym:
            belief.last_virtual = obs
            _try_link(belief)
        elif _matches(obs, belief.last_physical):
            # a virtual pseudonym just moved in lockstep with the target
            belief.vt_pid = obs.pseudonym
            belief.last_virtual = obs
            _try_link(belief)
    return belief


def _matches(obs: Observation, anchor: Observation | None) -> bool:
    return (
        anchor is not None
        and obs.region == anchor.region
        and obs.features == anchor.features
        and abs(obs.time - anchor.time) <= LINK_WINDOW
    )


def _try_link(belief: AttackerBelief) -> None:
    if (
        belief.vmu_pid is not None
        and belief.vt_pid is not None
        and belief.last_physical is not None
        and belief.last_virtual is not None
        and abs(belief.last_physical.time - belief.last_virtual.time) <= LINK_WINDOW
    ):
        belief.link(belief.vmu_pid, belief.vt_pid)


@dataclass(frozen=True)
class ReidentifyOutcome:
    reidentified: bool
    candidate_count: int


def boundary_reidentify(
    belief: AttackerBelief,
    kind: str,
    group_size: int,
    synchronous: bool,
    rng: np.random.Generator,
) -> ReidentifyOutcome:
    """Resolve one change boundary.

    Asynchronous: the other layer's pseudonym spans the boundary, so the
    target is re-identified with certainty. Synchronous inside a group of
    G indistinguishable members: a uniform 1/G pick.
    """
    if not belief.tracking:
        raise ValueError("belief is no longer tracking the target")
    belief.boundary_counts.append(1 if not synchronous else group_size)
    if not synchronous:
        return ReidentifyOutcome(reidentified=True, candidate_count=1)
    hit = bool(rng.random() < 1.0 / group_size)
    return ReidentifyOutcome(reidentified=hit, candidate_count=group_size)


@dataclass(frozen=True)
class BoundaryOutcome:
    time: float
    kind: str
    group_size: int
    reidentified: bool


@dataclass(frozen=True)
class TrackRecord:
    """Per-target tracking result over one scenario replay."""

    tracked_intervals: tuple[tuple[float, float], ...]
    horizon: float
    tracked_fraction: float
    boundaries: tuple[BoundaryOutcome, ...]
    belief: AttackerBelief


def tracking_fraction(trace: ScenarioTrace, config: AttackerConfig) -> TrackRecord:
    """Replay a trace against one attacker and measure the tracked time share.

    The attacker starts locked onto the target (it observed the pseudonym
    before the window opened); a lost boundary ends tracking for good.
    """
    rng = np.random.Generator(np.random.PCG64(config.seed))
    belief = AttackerBelief(
        vmu_pid=trace.initial_vmu_pid if config.observe_physical else None,
        vt_pid=trace.initial_vt_pid if config.observe_virtual else None,
        tracking=config.observe_physical or config.observe_virtual,
    )

    # boundaries first at equal times: post-change sightings carry new pids
    events: list[tuple[float, int, object]] = [
        (b.time, 0, b) for b in trace.boundaries
    ] + [(o.time, 1, o) for o in trace.observations]
    events.sort(key=lambda e: (e[0], e[1]))

    outcomes: list[BoundaryOutcome] = []
    t_lost: float | None = None if belief.tracking else 0.0

    for time, _, ev in events:
        if not belief.tracking:
            break
        if isinstance(ev, Observation):
            observe(belief, ev, config)
            continue
        boundary: BoundaryEvent = ev
        if not boundary.target_involved:
            continue
        outcome = _resolve_boundary(belief, boundary, config, rng)
        outcomes.append(
            BoundaryOutcome(
                time=boundary.time,
                kind=boundary.kind,
                group_size=boundary.group_size,
                reidentified=outcome.reidentified,
            )
        )
        if not outcome.reidentified:
            belief.tracking = False
            t_lost = boundary.time

    if t_lost is None:
        intervals = ((0.0, trace.horizon),)
        fraction = 1.0
    elif t_lost == 0.0:
        intervals = ()
        fraction = 0.0
    else:
        intervals = ((0.0, t_lost),)
        fraction = t_lost / trace.horizon
    return TrackRecord(
        tracked_intervals=intervals,
        horizon=trace.horizon,
        tracked_fraction=fraction,
        boundaries=tuple(outcomes),
        belief=belief,
    )


def _resolve_boundary(
    belief: AttackerBelief,
    boundary: BoundaryEvent,
    config: AttackerConfig,
    rng: np.random.Generator,
) -> ReidentifyOutcome:
    """Decide the effective boundary type from observability and links."""
    phys = config.observe_physical
    virt = config.observe_virtual

    if boundary.kind == "vmu":
        if virt and belief.vt_pid is not None:
            # the twin's pseudonym spans the boundary: certain follow-up
            out = boundary_reidentify(belief, boundary.kind, 1, False, rng)
            belief.vmu_pid = boundary.new_vmu_pid if phys else None
            return out
        if phys:
            out = boundary_reidentify(
                belief, boundary.kind, boundary.group_size, True, rng
            )
            if out.reidentified:
                belief.vmu_pid = boundary.new_vmu_pid
            return out
        return ReidentifyOutcome(reidentified=False, candidate_count=boundary.group_size)

    if boundary.kind == "vt":
        if phys and belief.vmu_pid is not None:
            out = boundary_reidentify(belief, boundary.kind, 1, False, rng)
            belief.vt_pid = boundary.new_vt_pid if virt else None
            return out
        if virt:
            out = boundary_reidentify(
                belief, boundary.kind, boundary.group_size, True, rng
            )
            if out.reidentified:
                belief.vt_pid = boundary.new_vt_pid
            return out
        return ReidentifyOutcome(reidentified=False, candidate_count=boundary.group_size)

    # synchronized pair change: both pids roll together, no bridge exists
    if not (phys or virt):
        return ReidentifyOutcome(reidentified=False, candidate_count=boundary.group_size)
    out = boundary_reidentify(belief, boundary.kind, boundary.group_size, True, rng)
    if out.reidentified:
        belief.vmu_pid = boundary.new_vmu_pid if phys else None
        belief.vt_pid = boundary.new_vt_pid if virt else None
    return out


# ---------------------------------------------------------------------------
# Constructed scenario traces


def linkage_mapping_trace(
    vmu_period: float = 4.0,
    vt_period: float = 1.0,
    n_vmu_changes: int = 2,
    tick: float = 0.25,
    velocity: float = 1.0,
) -> ScenarioTrace:
    """Asynchronous dual-cadence timeline: the classic linkage-mapping setup.

    The twin changes pseudonyms ``vmu_period/vt_period`` times as often as
    the user, phase-shifted by half a twin period so single-layer
    boundaries never coincide. Both layers broadcast every tick.
    """
    horizon = vmu_period * max(n_vmu_changes, 1)
    vmu_pids = [1000 + i for i in range(n_vmu_changes + 1)]
    vmu_times = [vmu_period * (i + 1) for i in range(n_vmu_changes)]
    vt_times = []
    t = vt_period / 2.0
    while t < horizon:
        vt_times.append(t)
        t += vt_period
    vt_pids = [2000 + i for i in range(len(vt_times) + 1)]

    def pid_at(times, pids, t):
        idx = sum(1 for x in times if x <= t)
        return pids[idx]

    boundaries = [
        BoundaryEvent(
            time=t, kind="vmu", group_size=1, new_vmu_pid=pid_at(vmu_times, vmu_pids, t)
        )
        for t in vmu_times
    ] + [
        BoundaryEvent(
            time=t, kind="vt", group_size=1, new_vt_pid=pid_at(vt_times, vt_pids, t)
        )
        for t in vt_times
    ]

    observations = []
    n_ticks = int(horizon / tick)
    for k in range(n_ticks + 1):
        t = k * tick
        observations.append(
            Observation(
                time=t, layer=PHYSICAL, pseudonym=pid_at(vmu_times, vmu_pids, t),
                region=0, velocity=velocity,
            )
        )
        observations.append(
            Observation(
                time=t, layer=VIRTUAL, pseudonym=pid_at(vt_times, vt_pids, t),
                region=0, velocity=velocity,
            )
        )
    return ScenarioTrace(
        observations=tuple(observations),
        boundaries=tuple(sorted(boundaries, key=lambda b: b.time)),
        horizon=horizon,
        initial_vmu_pid=vmu_pids[0],
        initial_vt_pid=vt_pids[0],
    )


def synchronous_group_trace(
    group_size: int,
    n_boundaries: int,
    spacing: float = 1.0,
    tick: float = 0.5,
    velocity: float = 1.0,
) -> ScenarioTrace:
    """Synchronized pair changes inside a constant-size anonymity group."""
    horizon = spacing * (n_boundaries + 1)
    times = [spacing * (i + 1) for i in range(n_boundaries)]
    vmu_pids = [1000 + i for i in range(n_boundaries + 1)]
    vt_pids = [2000 + i for i in range(n_boundaries + 1)]

    boundaries = [
        BoundaryEvent(
            time=t,
            kind="pair",
            group_size=group_size,
            new_vmu_pid=vmu_pids[i + 1],
            new_vt_pid=vt_pids[i + 1],
        )
        for i, t in enumerate(times)
    ]

    def pid_at(pids, t):
        idx = sum(1 for x in times if x <= t)
        return pids[idx]

    observations = []
    n_ticks = int(horizon / tick)
    for k in range(n_ticks + 1):
        t = k * tick
        observations.append(
            Observation(
                time=t, layer=PHYSICAL, pseudonym=pid_at(vmu_pids, t),
                region=0, velocity=velocity,
            )
        )
        observations.append(
            Observation(
                time=t, layer=VIRTUAL, pseudonym=pid_at(vt_pids, t),
                region=0, velocity=velocity,
            )
        )
    return ScenarioTrace(
        observations=tuple(observations),
        boundaries=tuple(boundaries),
        horizon=horizon,
        initial_vmu_pid=vmu_pids[0],
        initial_vt_pid=vt_pids[0],
    )


# ---------------------------------------------------------------------------
# Active misbehavior events (gate-keeping defenses, binary outcome)

DATA_INJECTION = "data_injection"
IMPERSONATION = "impersonation"


@dataclass(frozen=True)
class DefenseFlags:
    """Which protocol defenses are active in a scenario."""

    session_tokens: bool = True
    blacklist: bool = True


def misbehavior_outcome(kind: str, defenses: DefenseFlags) -> bool:
    """Whether a misbehavior event succeeds; True means the attack lands.

    Data injection into the intra-twin channel is stopped by session
    tokens; impersonation of a known-bad twin is stopped by the blacklist.
    """
    if kind == DATA_INJECTION:
        return not defenses.session_tokens
    if kind == IMPERSONATION:
        return not defenses.blacklist
    raise ValueError(f"unknown misbehavior kind {kind!r}")
