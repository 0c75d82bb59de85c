"""Deterministic discrete-event engine binding protocol, allocator, adversary.

Event ordering is total: (timestamp, kind priority, entity index, insertion
sequence). Kind priorities, lowest first: migrations, change requests,
change executions, twin cadence changes, broadcasts. Identical
config + master seed therefore reproduces byte-identical reports.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field, replace

import numpy as np

from .. import adversary as adv
from ..allocator import (
    AllocationPlan,
    AllocationProblem,
    UtilityParams,
    equal_allocation,
    expected_utility,
    optimize_exact,
    optimize_ga,
)
from ..demand import DemandModel, sample_arrival_times
from ..entropy import EntropyParams, average_entropy, timeline
from ..ledger import Chain
from ..protocol import (
    CertificateAuthority,
    EntityState,
    OwnerClass,
    Rsu,
    TwinPair,
    activate_next,
    execute_change,
    mutual_authenticate,
    request_pseudonym_set,
    return_and_shuffle,
    schedule_synchronous_change,
)
from .config import (
    ASYNCHRONOUS,
    EQUAL,
    SYNCHRONOUS,
    ScenarioConfig,
    validate,
)
from .report import AttackerResult, SimReport, VmuResult, new_report_meta

# Event kind priorities (tie-break order at equal timestamps).
P_MIGRATION = 0
P_CHANGE_REQUEST = 1
P_EXECUTE = 2
P_VT_CADENCE = 3
P_BROADCAST = 4

# Seed-stream labels, combined with the master seed in this fixed scheme.
_STREAM_P_DRAWS = 0
_STREAM_TOKENS = 1
_STREAM_SHUFFLE = 2
_STREAM_GA = 3
_STREAM_ATTACKER = 4
_STREAM_ARRIVALS = 5  # plus the VMU index


def _stream(master_seed: int, label: int, index: int = 0) -> np.random.Generator:
    seq = np.random.SeedSequence((master_seed, label, index))
    return np.random.Generator(np.random.PCG64(seq))


@dataclass
class PairState:
    """Bookkeeping for one VMU-VT pair during a run."""

    pair: TwinPair
    spec_index: int
    entropy_params: EntropyParams
    demand_model: DemandModel
    utility_params: UtilityParams
    allocated: int = 0
    demand: int = 0
    shortage: int = 0
    pending: int = 0
    position0: float = 0.0
    velocity: float = 0.0


@dataclass
class World:
    """All mutable scenario state; exposed for invariant checks in tests."""

    ca: CertificateAuthority
    rsus: list[Rsu]
    pairs: list[PairState]
    chain: Chain
    plan: AllocationPlan
    migrations: list[tuple[float, int, int, int]] = field(default_factory=list)
    boundaries: list[tuple[int, adv.BoundaryEvent]] = field(default_factory=list)
    observations: list[adv.Observation] = field(default_factory=list)
    initial_pids: dict[str, int] = field(default_factory=dict)


class SimulationEngine:
    """One scenario run; construct, call :meth:`run`, read the report."""

    def __init__(self, config: ScenarioConfig):
        self.config = validate(config)
        self.world: World | None = None
        self._seq = 0
        self._queue: list[tuple[float, int, int, int, str, object]] = []
        self._rng_shuffle = _stream(config.master_seed, _STREAM_SHUFFLE)

    def _reset(self) -> None:
        # a fresh engine per run; reset makes repeated run() calls identical
        self._seq = 0
        self._queue = []
        self._rng_shuffle = _stream(self.config.master_seed, _STREAM_SHUFFLE)

    def _push(self, time: float, priority: int, entity: int, kind: str, payload=None):
        heapq.heappush(self._queue, (time, priority, entity, self._seq, kind, payload))
        self._seq += 1

    # -- setup ---------------------------------------------------------------

    def _draw_p(self, rng: np.random.Generator) -> float:
        return 0.5 * (1.0 - float(rng.random()))  # uniform over (0, 0.5]

    def _build_world(self) -> World:
        cfg = self.config
        ca = CertificateAuthority()
        rsus = [Rsu(rsu_id=i) for i in range(cfg.rsu_count)]

        rng_p = _stream(cfg.master_seed, _STREAM_P_DRAWS)
        rng_tokens = _stream(cfg.master_seed, _STREAM_TOKENS)

        models, uparams, eparams = [], [], []
        for spec in cfg.vmus:
            p = spec.p if spec.p is not None else self._draw_p(rng_p)
            ep = EntropyParams(
                h_max=cfg.h_max, h_0=cfg.h_0, h_min=cfg.h_min, alpha=cfg.alpha, p=p
            )
            if spec.frequency > 0:
                h_bar = average_entropy(ep, 1.0 / spec.frequency)
            else:
                h_bar = cfg.h_min  # no changes: the curve sits at the floor
            eparams.append(ep)
            models.append(DemandModel(frequency=spec.frequency, period=cfg.period))
            uparams.append(
                UtilityParams(
                    beta=cfg.beta,
                    h_store=cfg.h_store,
                    r_penalty=cfg.r_penalty,
                    avg_entropy=h_bar,
                )
            )

        problem = AllocationProblem(vmus=tuple(zip(models, uparams)), budget=cfg.budget)
        if cfg.scheme == EQUAL:
            plan = equal_allocation(problem)
        elif cfg.optimizer == "exact":
            plan = optimize_exact(problem)
        else:
            ga_seed = int(_stream(cfg.master_seed, _STREAM_GA).integers(0, 2**63))
            plan = optimize_ga(problem, cfg.ga, seed=ga_seed)
        assert plan.total <= cfg.budget, "allocation exceeds pseudonym budget"

        world = World(ca=ca, rsus=rsus, pairs=[], chain=Chain(), plan=plan)

        # Twin pools are provisioned generously up front; twin pseudonyms
        # recycle through shuffle transactions during the run. Every pool
        # can host all twins at once since migrations move request load.
        per_pool = (
            cfg.vt_set_size * (len(cfg.vmus) + 1)
            + int(2.0 * sum(m.rate for m in models)) // cfg.rsu_count
            + 2
        )
        for rsu in rsus:
            rsu.vt_pool.stock(ca.mint(OwnerClass.VT, per_pool))

        for i, spec in enumerate(cfg.vmus):
            pos = spec.position % cfg.road_length
            region = int(pos // cfg.coverage_length) % cfg.rsu_count
            rsu = rsus[region]

            vmu = EntityState(entity_id=f"vmu-{i}", kind=OwnerClass.VMU, region=region)
            vt = EntityState(entity_id=f"vt-{i}", kind=OwnerClass.VT, region=region)
            ca.register(vmu)
            ca.register(vt)

            # the period's production for this VMU plus its initial pseudonym
            rsu.vmu_pool.stock(ca.mint(OwnerClass.VMU, plan.r[i] + 1))
            request_pseudonym_set(vmu, 1, rsu.vmu_pool, ca, now=0.0)
            activate_next(vmu, 0.0, ca)
            if plan.r[i] > 0:
                request_pseudonym_set(vmu, plan.r[i], rsu.vmu_pool, ca, now=0.0)

            request_pseudonym_set(vt, cfg.vt_set_size, rsu.vt_pool, ca, now=0.0)
            activate_next(vt, 0.0, ca)

            pair = TwinPair(vmu=vmu, vt=vt)
            pair.session_token = mutual_authenticate(vmu, vt, ca, rng_tokens)
            world.initial_pids[vmu.entity_id] = vmu.active_pseudonym.id
            world.initial_pids[vt.entity_id] = vt.active_pseudonym.id
            world.pairs.append(
                PairState(
                    pair=pair,
                    spec_index=i,
                    entropy_params=eparams[i],
                    demand_model=models[i],
                    utility_params=uparams[i],
                    allocated=plan.r[i],
                    position0=pos,
                    velocity=spec.velocity,
                )
            )
        return world

    # -- event handlers --------------------------------------------------------

    def _position(self, ps: PairState, t: float) -> float:
        return (ps.position0 + ps.velocity * t) % self.config.road_length

    def _region_of(self, pos: float) -> int:
        return int(pos // self.config.coverage_length) % self.config.rsu_count

    def _schedule_migrations(self, idx: int, ps: PairState, horizon: float):
        cfg = self.config
        if ps.velocity <= 0 or cfg.rsu_count == 1:
            return
        L = cfg.coverage_length
        start_region = int(ps.position0 // L)
        k = 1
        while True:
            t_k = ((start_region + k) * L - ps.position0) / ps.velocity
            if t_k > horizon:
                break
            self._push(t_k, P_MIGRATION, idx, "migration")
            k += 1

    def _handle_migration(self, t: float, idx: int):
        ps = self.world.pairs[idx]
        old = ps.pair.vt.region
        new = self._region_of(self._position(ps, t))
        if new == old:
            return
        ps.pair.vmu.region = new
        ps.pair.vt.region = new  # the twin migrates with its user
        self.world.migrations.append((t, idx, old, new))

    def _ensure_vt_capacity(self, ps: PairState, now: float, needed: int):
        """Recycle used twin pseudonyms and top the set up from the pool."""
        vt = ps.pair.vt
        while len(vt.pset.unused()) < needed:
            rsu = self.world.rsus[vt.region]
            used = vt.pset.take_used()
            if used:
                seed = int(self._rng_shuffle.integers(0, 2**63))
                txn = return_and_shuffle(
                    rsu, used, epoch=now, pool_kind=OwnerClass.VT, perm_seed=seed
                )
                self.world.chain.append(txn)
            request_pseudonym_set(
                vt, self.config.vt_set_size, rsu.vt_pool, self.world.ca, now=now
            )

    def _handle_change_request(self, t: float, idx: int):
        ps = self.world.pairs[idx]
        ps.demand += 1
        spare = len(ps.pair.vmu.pset.unused()) - ps.pending
        if spare <= 0:
            ps.shortage += 1
            return
        if self.config.mode == SYNCHRONOUS:
            self._ensure_vt_capacity(ps, t, needed=ps.pending + 1)
            rsu = self.world.rsus[ps.pair.vmu.region]
            sched = schedule_synchronous_change(
                ps.pair,
                now=t,
                rsu=rsu,
                ca=self.world.ca,
                delta_sync=self.config.delta_sync,
            )
            ps.pending += 1
            self._push(sched.t_star, P_EXECUTE, idx, "execute", sched)
        else:
            # legacy unilateral change, effective immediately
            self.world.ca.append_log(t, ps.pair.vmu.entity_id, "change_request", t)
            activate_next(ps.pair.vmu, t, self.world.ca)
            self.world.boundaries.append(
                (
                    idx,
                    adv.BoundaryEvent(
                        time=t,
                        kind="vmu",
                        group_size=1,
                        new_vmu_pid=ps.pair.vmu.active_pseudonym.id,
                    ),
                )
            )

    def _handle_execute(self, t: float, idx: int, sched):
        ps = self.world.pairs[idx]
        execute_change(sched, ps.pair, at=t, ca=self.world.ca)
        ps.pending -= 1
        self.world.boundaries.append(
            (
                idx,
                adv.BoundaryEvent(
                    time=t,
                    kind="pair",
                    group_size=1,
                    new_vmu_pid=ps.pair.vmu.active_pseudonym.id,
                    new_vt_pid=ps.pair.vt.active_pseudonym.id,
                ),
            )
        )

    def _handle_vt_cadence(self, t: float, idx: int):
        ps = self.world.pairs[idx]
        self._ensure_vt_capacity(ps, t, needed=1)
        activate_next(ps.pair.vt, t, self.world.ca)
        self.world.boundaries.append(
            (
                idx,
                adv.BoundaryEvent(
                    time=t,
                    kind="vt",
                    group_size=1,
                    new_vt_pid=ps.pair.vt.active_pseudonym.id,
                ),
            )
        )

    def _handle_broadcast(self, t: float):
        for ps in self.world.pairs:
            self.world.observations.append(
                adv.Observation(
                    time=t,
                    layer=adv.PHYSICAL,
                    pseudonym=ps.pair.vmu.active_pseudonym.id,
                    region=ps.pair.vmu.region,
                    velocity=ps.velocity,
                )
            )
            self.world.observations.append(
                adv.Observation(
                    time=t,
                    layer=adv.VIRTUAL,
                    pseudonym=ps.pair.vt.active_pseudonym.id,
                    region=ps.pair.vt.region,
                    velocity=ps.velocity,
                )
            )

    # -- run ---------------------------------------------------------------------

    def run(self) -> SimReport:
        cfg = self.config
        self._reset()
        self.world = self._build_world()

        horizon = cfg.period + (cfg.delta_sync if cfg.mode == SYNCHRONOUS else 0.0)

        for idx, ps in enumerate(self.world.pairs):
            arrivals = sample_arrival_times(
                ps.demand_model,
                np.random.SeedSequence((cfg.master_seed, _STREAM_ARRIVALS, idx)),
            )
            for t in arrivals:
                self._push(float(t), P_CHANGE_REQUEST, idx, "change_request")
            if cfg.mode == ASYNCHRONOUS and ps.demand_model.frequency > 0:
                step = 1.0 / (cfg.vt_cadence_ratio * ps.demand_model.frequency)
                k = 1
                while k * step <= cfg.period:
                    self._push(k * step, P_VT_CADENCE, idx, "vt_cadence")
                    k += 1
            self._schedule_migrations(idx, ps, horizon)

        if cfg.attackers:
            t_tick = 0.0
            while t_tick <= cfg.period:
                self._push(t_tick, P_BROADCAST, 0, "broadcast")
                t_tick += 1.0

        while self._queue:
            t, _prio, entity, _seq, kind, payload = heapq.heappop(self._queue)
            if kind == "migration":
                self._handle_migration(t, entity)
            elif kind == "change_request":
                self._handle_change_request(t, entity)
            elif kind == "execute":
                self._handle_execute(t, entity, payload)
            elif kind == "vt_cadence":
                self._handle_vt_cadence(t, entity)
            elif kind == "broadcast":
                self._handle_broadcast(t)

        return self._finalize(horizon)

    # -- reporting ---------------------------------------------------------------

    def _trace_for(self, target: int, horizon: float) -> adv.ScenarioTrace:
        world = self.world
        boundaries = tuple(
            replace(event, target_involved=(idx == target))
            for idx, event in world.boundaries
        )
        return adv.ScenarioTrace(
            observations=tuple(world.observations),
            boundaries=boundaries,
            horizon=horizon,
            initial_vmu_pid=world.initial_pids[world.pairs[target].pair.vmu.entity_id],
            initial_vt_pid=world.initial_pids[world.pairs[target].pair.vt.entity_id],
        )

    def _finalize(self, horizon: float) -> SimReport:
        cfg = self.config
        world = self.world

        # period-end return and shuffle of everything used
        for kind in (OwnerClass.VMU, OwnerClass.VT):
            for rsu in world.rsus:
                batch = []
                for ps in world.pairs:
                    entity = ps.pair.vmu if kind is OwnerClass.VMU else ps.pair.vt
                    if entity.region == rsu.rsu_id:
                        batch.extend(entity.pset.take_used())
                if batch:
                    seed = int(self._rng_shuffle.integers(0, 2**63))
                    world.chain.append(
                        return_and_shuffle(
                            rsu, batch, epoch=horizon, pool_kind=kind, perm_seed=seed
                        )
                    )

        vmu_rows: list[VmuResult] = []
        timelines = []
        utilities = []
        expected = []
        for ps in world.pairs:
            executed = len(ps.pair.vmu.change_epochs)
            leftover = ps.allocated - executed
            u = (
                cfg.beta * ps.utility_params.avg_entropy * executed
                - cfg.h_store * leftover
                - cfg.r_penalty * ps.shortage
            )
            eu = expected_utility(ps.allocated, ps.demand_model, ps.utility_params)
            utilities.append(u)
            expected.append(eu)
            vmu_rows.append(
                VmuResult(
                    index=ps.spec_index,
                    group=cfg.vmus[ps.spec_index].group,
                    frequency=cfg.vmus[ps.spec_index].frequency,
                    p=ps.entropy_params.p,
                    avg_entropy=ps.utility_params.avg_entropy,
                    allocated=ps.allocated,
                    demand=ps.demand,
                    executed=executed,
                    leftover=leftover,
                    shortage=ps.shortage,
                    utility=u,
                    expected_utility=eu,
                )
            )
            tl = timeline(ps.entropy_params, ps.pair.vmu.change_epochs, horizon)
            timelines.append(tl.breakpoints)

        attacker_rows = []
        for a_idx, spec in enumerate(cfg.attackers):
            seed = spec.seed
            if seed is None:
                seed = int(
                    _stream(cfg.master_seed, _STREAM_ATTACKER, a_idx).integers(0, 2**63)
                )
            record = adv.tracking_fraction(
                self._trace_for(spec.target, horizon),
                adv.AttackerConfig(
                    observe_physical=spec.observe_physical,
                    observe_virtual=spec.observe_virtual,
                    seed=seed,
                ),
            )
            attacker_rows.append(
                AttackerResult(
                    target=spec.target,
                    observe_physical=spec.observe_physical,
                    observe_virtual=spec.observe_virtual,
                    seed=seed,
                    tracked_fraction=record.tracked_fraction,
                    boundaries_survived=sum(
                        1 for b in record.boundaries if b.reidentified
                    ),
                    boundaries_total=len(record.boundaries),
                )
            )

        meta = new_report_meta()
        return SimReport(
            config=_echo_config(cfg),
            master_seed=cfg.master_seed,
            rng_algorithm=meta["rng_algorithm"],
            hash_algorithm=meta["hash_algorithm"],
            tool_version=meta["tool_version"],
            scheme=cfg.scheme,
            utility_mode="realized",
            budget=cfg.budget,
            allocation_total=world.plan.total,
            vmus=tuple(vmu_rows),
            mean_utility=float(np.mean(utilities)),
            mean_expected_utility=float(np.mean(expected)),
            attackers=tuple(attacker_rows),
            entropy_timelines=tuple(timelines),
            sim_horizon=horizon,
            migrations=tuple(world.migrations),
            ca_log=tuple(
                (r.epoch, r.entity_id, r.request_type, r.timestamp)
                for r in world.ca.log
            ),
            chain_digest=tuple(world.chain.digest_lines()),
            chain_ok=world.chain.verify() is None,
        )


def _echo_config(cfg: ScenarioConfig) -> dict:
    """Config echo in JSON-native types so report round-trips compare equal."""
    import json
    from dataclasses import asdict

    return json.loads(json.dumps(asdict(cfg)))


def run(config: ScenarioConfig) -> SimReport:
    """Run one scenario and return its report."""
    return SimulationEngine(config).run()
