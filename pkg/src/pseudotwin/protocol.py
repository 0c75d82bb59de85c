"""Dual-pseudonym lifecycle: pools, authentication, synchronized changes.

Covers the pseudonym state machine (pooled -> issued -> active -> used ->
returned -> pooled), mutual authentication between a user and its twin,
misbehavior reporting with blacklist revocation, the synchronized
change handshake, group changes, and return-and-shuffle back into pools.

Cryptography is abstracted: authentication is a set-membership plus
blacklist check, and a session token is a fresh random 128-bit value.
All state is owned by a single-threaded event loop; every operation is
all-or-nothing with respect to one event.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .ledger import ShuffleTransaction, commit


class OwnerClass(Enum):
    VMU = "vmu"
    VT = "vt"


class PseudonymStatus(Enum):
    POOLED = "pooled"
    ISSUED = "issued"
    ACTIVE = "active"
    USED = "used"
    RETURNED = "returned"


# The only legal lifecycle; shuffle closes the cycle back to POOLED.
_NEXT_STATUS = {
    PseudonymStatus.POOLED: PseudonymStatus.ISSUED,
    PseudonymStatus.ISSUED: PseudonymStatus.ACTIVE,
    PseudonymStatus.ACTIVE: PseudonymStatus.USED,
    PseudonymStatus.USED: PseudonymStatus.RETURNED,
    PseudonymStatus.RETURNED: PseudonymStatus.POOLED,
}


class ProtocolError(Exception):
    """Base class for protocol-level failures."""


class PoolExhausted(ProtocolError):
    """The RSU pool holds fewer pseudonyms than requested."""


class AuthFailure(ProtocolError):
    """Counterpart pseudonym not recognized or not active."""


class RevokedCounterpart(ProtocolError):
    """The counterpart twin is on the blacklist."""


class EvidenceMismatch(ProtocolError):
    """Report evidence does not match the authority's logs."""


class MissedDeadline(ProtocolError):
    """Change executed at a time other than the scheduled instant."""


class ReplayedSchedule(ProtocolError):
    """Change schedule already executed."""


class MixedKinds(ProtocolError):
    """Group members are not all of the requested kind."""


class NotCoLocated(ProtocolError):
    """Group members are not within one hot-spot region."""


class WrongStatus(ProtocolError):
    """Pseudonym is not in the status the operation requires."""


class NoSparePseudonym(ProtocolError):
    """Entity has no unused pseudonym left in its set."""


@dataclass(eq=False)
class Pseudonym:
    """Opaque 128-bit identifier with an owner class and lifecycle status."""

    id: int
    owner_class: OwnerClass
    status: PseudonymStatus = PseudonymStatus.POOLED

    def advance(self, to: PseudonymStatus) -> None:
        if _NEXT_STATUS[self.status] is not to:
            raise WrongStatus(
                f"pseudonym {self.id:#x} cannot go {self.status.value} -> {to.value}"
            )
        self.status = to

    def id_bytes(self) -> bytes:
        return self.id.to_bytes(16, "big")


@dataclass
class PseudonymSet:
    """Ordered pseudonym holdings of one entity."""

    owner: str
    pseudonyms: list[Pseudonym] = field(default_factory=list)
    capacity: int = 0

    def add(self, batch: list[Pseudonym]) -> None:
        known = {p.id for p in self.pseudonyms}
        for p in batch:
            if p.id in known:
                raise ValueError(f"duplicate pseudonym id {p.id:#x}")
            if self.pseudonyms and p.owner_class is not self.pseudonyms[0].owner_class:
                raise MixedKinds("pseudonym set must hold one owner class")
            known.add(p.id)
        self.pseudonyms.extend(batch)

    def unused(self) -> list[Pseudonym]:
        return [p for p in self.pseudonyms if p.status is PseudonymStatus.ISSUED]

    def take_used(self) -> list[Pseudonym]:
        """Remove and return all used pseudonyms (for return-and-shuffle)."""
        used = [p for p in self.pseudonyms if p.status is PseudonymStatus.USED]
        self.pseudonyms = [
            p for p in self.pseudonyms if p.status is not PseudonymStatus.USED
        ]
        return used


@dataclass
class EntityState:
    """One VMU or VT participant."""

    entity_id: str
    kind: OwnerClass
    region: int = 0
    clock: float = 0.0
    active_pseudonym: Pseudonym | None = None
    pset: PseudonymSet = None  # type: ignore[assignment]
    change_epochs: list[float] = field(default_factory=list)
    session_token: int | None = None

    def __post_init__(self) -> None:
        if self.pset is None:
            self.pset = PseudonymSet(owner=self.entity_id)


class ScheduleState(Enum):
    IDLE = "idle"
    REQUESTED = "requested"
    SCHEDULED = "scheduled"
    CHANGED = "changed"


@dataclass
class ChangeSchedule:
    """A preset synchronized change for one VMU-VT pair."""

    vmu_id: str
    vt_id: str
    t_star: float
    requested_at: float
    state: ScheduleState = ScheduleState.SCHEDULED


@dataclass(frozen=True)
class BlacklistEntry:
    true_identity: str
    evidence_ref: str
    revocation_epoch: float


@dataclass
class Blacklist:
    """Append-only revocation list of twin true identities."""

    entries: list[BlacklistEntry] = field(default_factory=list)
    _revoked: set[str] = field(default_factory=set)

    def add(self, entry: BlacklistEntry) -> None:
        if entry.true_identity in self._revoked:
            return  # idempotent: one entry per identity
        self.entries.append(entry)
        self._revoked.add(entry.true_identity)

    def is_revoked(self, entity_id: str) -> bool:
        return entity_id in self._revoked


@dataclass(frozen=True)
class CaLogRecord:
    """Append-only accountability record kept by the certificate authority."""

    epoch: float
    entity_id: str
    request_type: str
    timestamp: float


@dataclass(frozen=True)
class MisbehaviorEvidence:
    """A reported interaction: which pseudonym did what, and when."""

    timestamp: float
    pseudonym_id: int
    description: str = ""


@dataclass
class _Activation:
    entity_id: str
    start: float
    end: float | None = None


class CertificateAuthority:
    """Trusted root: mints pseudonyms, keeps logs, resolves identities."""

    def __init__(self) -> None:
        self._mint_counter = 0
        self.all_minted: list[Pseudonym] = []
        self.log: list[CaLogRecord] = []
        self.blacklist = Blacklist()
        self.entities: dict[str, EntityState] = {}
        self._activations: dict[int, list[_Activation]] = {}

    def mint(self, owner_class: OwnerClass, count: int) -> list[Pseudonym]:
        batch = []
        for _ in range(count):
            material = b"pseudonym:" + self._mint_counter.to_bytes(8, "big")
            pid = int.from_bytes(hashlib.sha256(material).digest()[:16], "big")
            self._mint_counter += 1
            p = Pseudonym(id=pid, owner_class=owner_class)
            self.all_minted.append(p)
            batch.append(p)
        return batch

    def register(self, entity: EntityState) -> None:
        self.entities[entity.entity_id] = entity

    def append_log(
        self, epoch: float, entity_id: str, request_type: str, timestamp: float
    ) -> None:
        self.log.append(
            CaLogRecord(
                epoch=epoch,
                entity_id=entity_id,
                request_type=request_type,
                timestamp=timestamp,
            )
        )

    def record_activation(self, pid: Pseudonym, entity_id: str, t: float) -> None:
        self._activations.setdefault(pid.id, []).append(
            _Activation(entity_id=entity_id, start=t)
        )

    def record_deactivation(self, pid: Pseudonym, t: float) -> None:
        spans = self._activations.get(pid.id, [])
        if spans and spans[-1].end is None:
            spans[-1].end = t

    def active_owner_at(self, pseudonym_id: int, t: float) -> str | None:
        """Entity that held this pseudonym active at time t, if any."""
        for span in self._activations.get(pseudonym_id, []):
            if span.start <= t and (span.end is None or t < span.end):
                return span.entity_id
        return None

    def census(self) -> Counter:
        """Pseudonym counts by status over everything ever minted."""
        return Counter(p.status for p in self.all_minted)


@dataclass
class PseudonymPool:
    """One RSU-side pool of pooled pseudonyms for one owner class."""

    owner_class: OwnerClass
    pooled: list[Pseudonym] = field(default_factory=list)
    restock_credit: float = 0.0

    def __len__(self) -> int:
        return len(self.pooled)

    def stock(self, batch: list[Pseudonym]) -> None:
        for p in batch:
            if p.owner_class is not self.owner_class:
                raise MixedKinds("pool accepts a single owner class")
        self.pooled.extend(batch)

    def draw(self, count: int) -> list[Pseudonym]:
        """Atomically remove `count` pseudonyms; the pool is untouched on failure."""
        if count > len(self.pooled):
            raise PoolExhausted(
                f"pool holds {len(self.pooled)} < requested {count}"
            )
        batch, self.pooled = self.pooled[:count], self.pooled[count:]
        return batch

    def accrue(self, dt: float, theta: float, ca: CertificateAuthority, now: float) -> int:
        """Continuous restock at rate theta, credited at event granularity."""
        self.restock_credit += dt * theta
        whole = int(self.restock_credit)
        if whole > 0:
            self.restock_credit -= whole
            self.stock(ca.mint(self.owner_class, whole))
            ca.append_log(now, f"pool-{self.owner_class.value}", "restock", now)
        return whole


@dataclass
class Rsu:
    """Roadside unit hosting twins and both pseudonym pools."""

    rsu_id: int
    vmu_pool: PseudonymPool = None  # type: ignore[assignment]
    vt_pool: PseudonymPool = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.vmu_pool is None:
            self.vmu_pool = PseudonymPool(owner_class=OwnerClass.VMU)
        if self.vt_pool is None:
            self.vt_pool = PseudonymPool(owner_class=OwnerClass.VT)

    def pool_for(self, kind: OwnerClass) -> PseudonymPool:
        return self.vmu_pool if kind is OwnerClass.VMU else self.vt_pool


@dataclass
class TwinPair:
    """A VMU and its hosted twin, plus their shared secure session."""

    vmu: EntityState
    vt: EntityState
    session_token: int | None = None

    def verify_message_token(self, token: int | None) -> bool:
        """Gate for intra-twin messages once a session is established."""
        return self.session_token is not None and token == self.session_token


# ---------------------------------------------------------------------------
# Operations


def request_pseudonym_set(
    entity: EntityState,
    count: int,
    pool: PseudonymPool,
    ca: CertificateAuthority,
    now: float = 0.0,
) -> PseudonymSet:
    """Issue `count` pseudonyms from the pool into the entity's set."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if pool.owner_class is not entity.kind:
        raise MixedKinds(
            f"{entity.kind.value} cannot draw from a {pool.owner_class.value} pool"
        )
    batch = pool.draw(count)
    for p in batch:
        p.advance(PseudonymStatus.ISSUED)
    entity.pset.add(batch)
    entity.pset.capacity = count
    ca.append_log(now, entity.entity_id, "set_request", now)
    return PseudonymSet(owner=entity.entity_id, pseudonyms=batch, capacity=count)


def activate_next(entity: EntityState, at: float, ca: CertificateAuthority) -> Pseudonym:
    """Retire the active pseudonym (if any) and activate the next unused one."""
    spare = entity.pset.unused()
    if not spare:
        raise NoSparePseudonym(f"{entity.entity_id} has no unused pseudonym")
    old = entity.active_pseudonym
    if old is not None:
        old.advance(PseudonymStatus.USED)
        ca.record_deactivation(old, at)
        entity.change_epochs.append(at)  # initial activation is not a change
    new = spare[0]
    new.advance(PseudonymStatus.ACTIVE)
    entity.active_pseudonym = new
    entity.clock = at
    ca.record_activation(new, entity.entity_id, at)
    return new


def mutual_authenticate(
    vmu: EntityState,
    vt: EntityState,
    ca: CertificateAuthority,
    rng: np.random.Generator,
) -> int:
    """Verify counterpart pseudonyms and mint a shared session token.

    Succeeds iff both active pseudonyms are live members of their holder's
    set and the twin is not blacklisted. Subsequent intra-twin messages
    must carry the returned token.
    """
    if ca.blacklist.is_revoked(vt.entity_id):
        raise RevokedCounterpart(f"{vt.entity_id} is blacklisted")
    for side in (vmu, vt):
        active = side.active_pseudonym
        if active is None or active.status is not PseudonymStatus.ACTIVE:
            raise AuthFailure(f"{side.entity_id} has no active pseudonym")
        if all(p.id != active.id for p in side.pset.pseudonyms):
            raise AuthFailure(
                f"{side.entity_id} presented a pseudonym outside its set"
            )
    token = int(rng.integers(0, 2**63)) << 64 | int(rng.integers(0, 2**63))
    vmu.session_token = token
    vt.session_token = token
    return token


def report_malicious(
    reporter_id: str,
    accused_pseudonym: int,
    evidence: MisbehaviorEvidence,
    ca: CertificateAuthority,
) -> BlacklistEntry:
    """Resolve a misbehaving twin's identity from CA logs and revoke it.

    The evidence must name the accused pseudonym and a timestamp at which
    the CA's activation log shows that pseudonym live; anything else is an
    EvidenceMismatch and the blacklist is untouched.
    """
    if reporter_id not in ca.entities:
        raise AuthFailure(f"unknown reporter {reporter_id}")
    if evidence.pseudonym_id != accused_pseudonym:
        raise EvidenceMismatch("evidence names a different pseudonym")
    owner = ca.active_owner_at(accused_pseudonym, evidence.timestamp)
    if owner is None:
        raise EvidenceMismatch(
            f"pseudonym {accused_pseudonym:#x} not active at t={evidence.timestamp}"
        )
    holder = ca.entities.get(owner)
    if holder is not None and holder.kind is not OwnerClass.VT:
        raise EvidenceMismatch(f"{owner} is not a twin; only twins are blacklisted")
    entry = BlacklistEntry(
        true_identity=owner,
        evidence_ref=f"{reporter_id}@{evidence.timestamp}",
        revocation_epoch=evidence.timestamp,
    )
    already = ca.blacklist.is_revoked(owner)
    ca.blacklist.add(entry)
    if not already:
        ca.append_log(evidence.timestamp, owner, "revocation", evidence.timestamp)
    return entry


def schedule_synchronous_change(
    pair: TwinPair,
    now: float,
    rsu: Rsu,
    ca: CertificateAuthority,
    delta_sync: float = 1.0,
    replenish_count: int | None = None,
) -> ChangeSchedule:
    """Record a change request and preset the synchronized change time.

    Either side with an empty set first requests a fresh pseudonym set from
    the RSU (PoolExhausted propagates and nothing is scheduled).
    """
    for entity in (pair.vmu, pair.vt):
        if not entity.pset.unused():
            count = replenish_count or max(entity.pset.capacity, 1)
            request_pseudonym_set(
                entity, count, rsu.pool_for(entity.kind), ca, now=now
            )
    t_star = now + delta_sync
    ca.append_log(t_star, pair.vmu.entity_id, "change_request", now)
    return ChangeSchedule(
        vmu_id=pair.vmu.entity_id,
        vt_id=pair.vt.entity_id,
        t_star=t_star,
        requested_at=now,
    )


def execute_change(
    schedule: ChangeSchedule,
    pair: TwinPair,
    at: float,
    ca: CertificateAuthority,
) -> tuple[EntityState, EntityState]:
    """Atomically swap both pseudonyms at exactly the preset instant."""
    if schedule.state is ScheduleState.CHANGED:
        raise ReplayedSchedule("schedule already executed")
    if schedule.state is not ScheduleState.SCHEDULED:
        raise ReplayedSchedule(f"schedule in state {schedule.state.value}")
    if at != schedule.t_star:
        raise MissedDeadline(f"execute at {at} != t* = {schedule.t_star}")
    # check both sides before touching either, so failure mutates nothing
    for entity in (pair.vmu, pair.vt):
        if not entity.pset.unused():
            raise NoSparePseudonym(f"{entity.entity_id} has no unused pseudonym")
    activate_next(pair.vmu, at, ca)
    activate_next(pair.vt, at, ca)
    schedule.state = ScheduleState.CHANGED
    return pair.vmu, pair.vt


def group_change(
    members: list[EntityState],
    kind: OwnerClass,
    t_star: float,
    ca: CertificateAuthority,
    hotspot_radius_regions: int = 0,
) -> int:
    """Change all members' pseudonyms together; returns the group size G.

    VT members must be co-hosted on one RSU; VMU members must sit within
    the hot-spot radius (in region units) of each other.
    """
    if not members:
        raise ValueError("group must have at least one member")
    for m in members:
        if m.kind is not kind:
            raise MixedKinds(f"{m.entity_id} is not a {kind.value}")
        if ca.blacklist.is_revoked(m.entity_id):
            raise RevokedCounterpart(f"{m.entity_id} is blacklisted")
    regions = [m.region for m in members]
    allowed = hotspot_radius_regions if kind is OwnerClass.VMU else 0
    if max(regions) - min(regions) > allowed:
        raise NotCoLocated(f"members span regions {sorted(set(regions))}")
    for m in members:
        if not m.pset.unused():
            raise NoSparePseudonym(f"{m.entity_id} has no unused pseudonym")
    for m in members:
        activate_next(m, t_star, ca)
    return len(members)


def return_and_shuffle(
    rsu: Rsu,
    used: list[Pseudonym],
    epoch: float,
    pool_kind: OwnerClass,
    perm_seed: int,
) -> ShuffleTransaction:
    """Recycle used pseudonyms into the pool in a seed-keyed random order."""
    for p in used:
        if p.status is not PseudonymStatus.USED:
            raise WrongStatus(f"pseudonym {p.id:#x} is {p.status.value}, not used")
        if p.owner_class is not pool_kind:
            raise WrongStatus(
                f"pseudonym {p.id:#x} is a {p.owner_class.value} pseudonym"
            )
    commitments = tuple(commit(p.id_bytes()) for p in used)
    rng = np.random.Generator(np.random.PCG64(perm_seed))
    order = rng.permutation(len(used)) if used else []
    for p in used:
        p.advance(PseudonymStatus.RETURNED)
    shuffled = [used[i] for i in order]
    for p in shuffled:
        p.advance(PseudonymStatus.POOLED)
    rsu.pool_for(pool_kind).stock(shuffled)
    return ShuffleTransaction(
        epoch=epoch,
        rsu_id=rsu.rsu_id,
        pool_kind=pool_kind.value,
        commitments=commitments,
        permutation_seed_commitment=commit(repr(int(perm_seed)).encode()),
    )
