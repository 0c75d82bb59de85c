"""Run report: every aggregate is recomputable from the raw series included.

Reports serialize to canonical JSON (sorted keys, tight separators, full
float repr) so identical runs produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass

from .. import __version__
from ..demand import RNG_ALGORITHM
from ..ledger import HASH_ALGORITHM


@dataclass(frozen=True)
class VmuResult:
    """Per-VMU outcome of one run."""

    index: int
    group: int
    frequency: float
    p: float
    avg_entropy: float
    allocated: int
    demand: int
    executed: int
    leftover: int
    shortage: int
    utility: float
    expected_utility: float


@dataclass(frozen=True)
class AttackerResult:
    target: int
    observe_physical: bool
    observe_virtual: bool
    seed: int
    tracked_fraction: float
    boundaries_survived: int
    boundaries_total: int


@dataclass(frozen=True)
class SimReport:
    """Complete machine-readable record of one scenario run."""

    config: dict
    master_seed: int
    rng_algorithm: str
    hash_algorithm: str
    tool_version: str
    scheme: str
    utility_mode: str
    budget: int
    allocation_total: int
    vmus: tuple[VmuResult, ...]
    mean_utility: float
    mean_expected_utility: float
    attackers: tuple[AttackerResult, ...]
    entropy_timelines: tuple[tuple[tuple[float, float], ...], ...]
    sim_horizon: float
    migrations: tuple[tuple[float, int, int, int], ...]
    ca_log: tuple[tuple[float, str, str, float], ...]
    chain_digest: tuple[str, ...]
    chain_ok: bool

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        """Canonical single-line JSON with a trailing newline."""
        return (
            json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
            + "\n"
        )

    def sha256(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()


def report_from_dict(data: dict) -> SimReport:
    """Rebuild a SimReport from decoded JSON."""
    return SimReport(
        config=data["config"],
        master_seed=data["master_seed"],
        rng_algorithm=data["rng_algorithm"],
        hash_algorithm=data["hash_algorithm"],
        tool_version=data["tool_version"],
        scheme=data["scheme"],
        utility_mode=data["utility_mode"],
        budget=data["budget"],
        allocation_total=data["allocation_total"],
        vmus=tuple(VmuResult(**v) for v in data["vmus"]),
        mean_utility=data["mean_utility"],
        mean_expected_utility=data["mean_expected_utility"],
        attackers=tuple(AttackerResult(**a) for a in data["attackers"]),
        entropy_timelines=tuple(
            tuple((t, v) for t, v in tl) for tl in data["entropy_timelines"]
        ),
        sim_horizon=data["sim_horizon"],
        migrations=tuple(tuple(m) for m in data["migrations"]),
        ca_log=tuple(tuple(r) for r in data["ca_log"]),
        chain_digest=tuple(data["chain_digest"]),
        chain_ok=data["chain_ok"],
    )


def new_report_meta() -> dict:
    """Constant metadata stamped on every report."""
    return {
        "rng_algorithm": RNG_ALGORITHM,
        "hash_algorithm": HASH_ALGORITHM,
        "tool_version": __version__,
    }
