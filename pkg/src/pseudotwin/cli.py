"""Command-line interface: config ingestion, runs, and report emission.

Configs are strict TOML: unknown keys abort before anything runs, and
omitted optional fields are filled with defaults and echoed back. Exit
codes: 0 success, 2 config error, 3 runtime error, 4 chain-verification
failure.

Report files carry the authority's accountability log under ``ca_log``:
an append-only array of records, each ``[epoch, entity_id, request_type,
timestamp]`` where ``epoch`` is the effective time of the action (the
preset change instant t* for change requests), ``entity_id`` names the
requesting entity, ``request_type`` is one of ``set_request``,
``change_request``, ``revocation``, ``restock``, and ``timestamp`` is when
the request was filed.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from . import __version__, adversary
from .allocator import (
    AllocationProblem,
    GAConfig,
    UtilityParams,
    equal_allocation,
    global_expected_utility,
    optimize_exact,
    optimize_ga,
)
from .demand import DemandModel
from .entropy import EntropyParams, average_entropy
from .ledger import Chain
from .sim import (
    AttackerSpec,
    ConfigError,
    ScenarioConfig,
    SimReport,
    VmuSpec,
    experiment_fig5a,
    experiment_fig5b,
    run,
    validate,
)
from .sim.engine import _STREAM_P_DRAWS, _stream

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_CHAIN = 4

SEED_ENV_VAR = "PSEUDOTWIN_SEED"

FORMATS = ("csv", "json-lines", "table")

_SCENARIO_KEYS = {
    "theta": float,
    "period": float,
    "mode": str,
    "scheme": str,
    "optimizer": str,
    "master_seed": int,
    "delta_sync": float,
    "vt_cadence_ratio": float,
    "vt_set_size": int,
}
_ROAD_KEYS = {"rsu_count": int, "coverage_length": float}
_ENTROPY_KEYS = {"h_max": float, "h_0": float, "h_min": float, "alpha": float}
_COSTS_KEYS = {"beta": float, "h_store": float, "r_penalty": float}
_VMU_KEYS = {
    "frequency": float,
    "position": float,
    "velocity": float,
    "p": float,
    "group": int,
}
_ATTACKER_KEYS = {
    "target": int,
    "observe_physical": bool,
    "observe_virtual": bool,
    "seed": int,
}
_GA_KEYS = {
    "population": int,
    "generations": int,
    "tournament_size": int,
    "crossover_rate": float,
    "mutation_rate": float,
    "elitism": int,
}
_ATTACK_EVAL_KEYS = {
    "kind": str,
    "vmu_period": float,
    "vt_period": float,
    "vmu_changes": int,
    "group_size": int,
    "boundaries": int,
    "spacing": float,
    "replays": int,
    "observe_physical": bool,
    "observe_virtual": bool,
    "seed": int,
}


def _coerce(value, want, path: str, errors: list[str]):
    if want is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            errors.append(f"{path}: expected a number")
            return None
        return float(value)
    if want is int:
        if isinstance(value, bool) or not isinstance(value, int):
            errors.append(f"{path}: expected an integer")
            return None
        return int(value)
    if not isinstance(value, want):
        errors.append(f"{path}: expected {want.__name__}")
        return None
    return value


def _take_table(raw: dict, name: str, keys: dict, errors: list[str]) -> dict:
    table = raw.get(name, {})
    if not isinstance(table, dict):
        errors.append(f"{name}: expected a table")
        return {}
    out = {}
    for key, value in table.items():
        if key not in keys:
            errors.append(f"{name}.{key}: unknown key")
            continue
        got = _coerce(value, keys[key], f"{name}.{key}", errors)
        if got is not None:
            out[key] = got
    return out


def parse_config_text(text: str) -> ScenarioConfig:
    """Parse and fully validate a scenario config from TOML text."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"TOML parse error: {exc}"]) from exc

    errors: list[str] = []
    known_tables = {"scenario", "road", "entropy", "costs", "vmu", "attacker", "ga"}
    for key in raw:
        if key not in known_tables:
            errors.append(f"{key}: unknown key")

    scenario = _take_table(raw, "scenario", _SCENARIO_KEYS, errors)
    road = _take_table(raw, "road", _ROAD_KEYS, errors)
    entropy = _take_table(raw, "entropy", _ENTROPY_KEYS, errors)
    costs = _take_table(raw, "costs", _COSTS_KEYS, errors)
    ga = _take_table(raw, "ga", _GA_KEYS, errors)

    vmus = []
    raw_vmus = raw.get("vmu", [])
    if not isinstance(raw_vmus, list):
        errors.append("vmu: expected an array of tables")
        raw_vmus = []
    for i, entry in enumerate(raw_vmus):
        fields = {}
        for key, value in entry.items():
            if key not in _VMU_KEYS:
                errors.append(f"vmu[{i}].{key}: unknown key")
                continue
            got = _coerce(value, _VMU_KEYS[key], f"vmu[{i}].{key}", errors)
            if got is not None:
                fields[key] = got
        if "frequency" not in fields:
            errors.append(f"vmu[{i}].frequency: required")
            continue
        vmus.append(VmuSpec(**fields))

    attackers = []
    raw_attackers = raw.get("attacker", [])
    if not isinstance(raw_attackers, list):
        errors.append("attacker: expected an array of tables")
        raw_attackers = []
    for i, entry in enumerate(raw_attackers):
        fields = {}
        for key, value in entry.items():
            if key not in _ATTACKER_KEYS:
                errors.append(f"attacker[{i}].{key}: unknown key")
                continue
            got = _coerce(value, _ATTACKER_KEYS[key], f"attacker[{i}].{key}", errors)
            if got is not None:
                fields[key] = got
        attackers.append(AttackerSpec(**fields))

    for required in ("theta", "period"):
        if required not in scenario:
            errors.append(f"scenario.{required}: required")
    if errors:
        raise ConfigError(errors)

    config = ScenarioConfig(
        vmus=tuple(vmus),
        attackers=tuple(attackers),
        ga=GAConfig(**ga) if ga else GAConfig(),
        **scenario,
        **road,
        **entropy,
        **costs,
    )
    return validate(config)


def parse_config(path: str | Path) -> ScenarioConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    return json.dumps(value)


def config_to_toml(config: ScenarioConfig) -> str:
    """Echo a config as TOML; parse_config_text() of the result is identity."""
    lines = ["[scenario]"]
    for key in _SCENARIO_KEYS:
        lines.append(f"{key} = {_toml_value(getattr(config, key))}")
    lines += ["", "[road]"]
    for key in _ROAD_KEYS:
        lines.append(f"{key} = {_toml_value(getattr(config, key))}")
    lines += ["", "[entropy]"]
    for key in _ENTROPY_KEYS:
        lines.append(f"{key} = {_toml_value(getattr(config, key))}")
    lines += ["", "[costs]"]
    for key in _COSTS_KEYS:
        lines.append(f"{key} = {_toml_value(getattr(config, key))}")
    lines += ["", "[ga]"]
    for key in _GA_KEYS:
        lines.append(f"{key} = {_toml_value(getattr(config.ga, key))}")
    for vmu in config.vmus:
        lines += ["", "[[vmu]]"]
        for key in _VMU_KEYS:
            value = getattr(vmu, key)
            if value is None:
                continue
            lines.append(f"{key} = {_toml_value(value)}")
    for atk in config.attackers:
        lines += ["", "[[attacker]]"]
        for key in _ATTACKER_KEYS:
            value = getattr(atk, key)
            if value is None:
                continue
            lines.append(f"{key} = {_toml_value(value)}")
    return "\n".join(lines) + "\n"


@dataclasses.dataclass(frozen=True)
class AttackEvalSpec:
    """Config of one constructed attack-evaluation scenario."""

    kind: str  # linkage_timeline | sync_groups
    vmu_period: float = 4.0
    vt_period: float = 1.0
    vmu_changes: int = 2
    group_size: int = 2
    boundaries: int = 6
    spacing: float = 1.0
    replays: int = 1000
    observe_physical: bool = True
    observe_virtual: bool = True
    seed: int = 0


def parse_attack_config(path: str | Path) -> AttackEvalSpec:
    try:
        raw = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"TOML parse error: {exc}"]) from exc
    errors: list[str] = []
    for key in raw:
        if key != "attack_eval":
            errors.append(f"{key}: unknown key")
    fields = _take_table(raw, "attack_eval", _ATTACK_EVAL_KEYS, errors)
    if "kind" not in fields:
        errors.append("attack_eval.kind: required")
    elif fields["kind"] not in ("linkage_timeline", "sync_groups"):
        errors.append("attack_eval.kind: must be linkage_timeline or sync_groups")
    if errors:
        raise ConfigError(errors)
    return AttackEvalSpec(**fields)


def run_attack_eval(spec: AttackEvalSpec) -> dict:
    """Replay the constructed scenario and aggregate survival statistics."""
    if spec.kind == "linkage_timeline":
        trace = adversary.linkage_mapping_trace(
            vmu_period=spec.vmu_period,
            vt_period=spec.vt_period,
            n_vmu_changes=spec.vmu_changes,
        )
    else:
        trace = adversary.synchronous_group_trace(
            group_size=spec.group_size, n_boundaries=spec.boundaries,
            spacing=spec.spacing,
        )
        # survival statistics need no observations: pair changes have no
        # cross-layer bridge, so strip them to keep big replay counts fast
        trace = dataclasses.replace(trace, observations=())
    n_boundaries = len(trace.boundaries)
    survivors = [0] * n_boundaries
    fractions = []
    for r in range(spec.replays):
        config = adversary.AttackerConfig(
            observe_physical=spec.observe_physical,
            observe_virtual=spec.observe_virtual,
            seed=(spec.seed, r),
        )
        record = adversary.tracking_fraction(trace, config)
        fractions.append(record.tracked_fraction)
        for j, b in enumerate(record.boundaries):
            if b.reidentified:
                survivors[j] += 1
            else:
                break
    result = {
        "kind": spec.kind,
        "replays": spec.replays,
        "horizon": trace.horizon,
        "boundaries": n_boundaries,
        "mean_tracked_fraction": float(np.mean(fractions)),
        "survival": [
            {
                "boundary": j + 1,
                "survivors": survivors[j],
                "empirical": survivors[j] / spec.replays,
            }
            for j in range(n_boundaries)
        ],
    }
    if spec.kind == "sync_groups":
        for row in result["survival"]:
            row["theory"] = spec.group_size ** -row["boundary"]
    else:
        for row in result["survival"]:
            row["theory"] = 1.0
    return result


# ---------------------------------------------------------------------------
# Report emission


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


def emit_sim_report(report: SimReport, fmt: str, out_dir: Path) -> list[Path]:
    """Write one run's outputs; returns the created file paths."""
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [_write(out_dir / "report.json", report.to_json())]
    if fmt == "csv":
        rows = ["vmu_index,frequency,scheme,utility,seed"]
        for v in report.vmus:
            rows.append(
                f"{v.index},{_fmt(v.frequency)},{report.scheme},"
                f"{_fmt(v.utility)},{report.master_seed}"
            )
        paths.append(_write(out_dir / "utilities.csv", "\n".join(rows) + "\n"))
        paths.append(
            _write(out_dir / "entropy_timelines.csv", _timeline_csv(report))
        )
    elif fmt == "json-lines":
        paths.append(_write(out_dir / "report.jsonl", report.to_json()))
    elif fmt == "table":
        paths.append(_write(out_dir / "report.txt", sim_report_table(report)))
    return paths


def _timeline_csv(report: SimReport) -> str:
    alpha = report.config["alpha"]
    h_min = report.config["h_min"]
    rows = ["vmu_index,time,entropy"]
    for idx, bps in enumerate(report.entropy_timelines):
        prev = None
        for t, v in bps:
            if prev is not None:
                t0, v0 = prev
                left = max(h_min, v0 - alpha * (t - t0))
                if abs(left - v) > 1e-12:
                    rows.append(f"{idx},{_fmt(t)},{_fmt(left)}")
            rows.append(f"{idx},{_fmt(t)},{_fmt(v)}")
            prev = (t, v)
        if prev is not None:
            t0, v0 = prev
            t_end = report.sim_horizon
            rows.append(
                f"{idx},{_fmt(t_end)},{_fmt(max(h_min, v0 - alpha * (t_end - t0)))}"
            )
    return "\n".join(rows) + "\n"


def sim_report_table(report: SimReport) -> str:
    lines = [
        f"pseudotwin {report.tool_version} | scheme={report.scheme} "
        f"seed={report.master_seed} hash={report.hash_algorithm} "
        f"rng={report.rng_algorithm}",
        f"budget={report.budget} allocated={report.allocation_total} "
        f"mean_utility={report.mean_utility:.4f}",
        "vmu  freq    p       H_avg   R     D     exec  short utility",
    ]
    for v in report.vmus:
        lines.append(
            f"{v.index:<4d} {v.frequency:<7.3g} {v.p:<7.4f} {v.avg_entropy:<7.4f} "
            f"{v.allocated:<5d} {v.demand:<5d} {v.executed:<5d} {v.shortage:<5d} "
            f"{v.utility:.4f}"
        )
    for a in report.attackers:
        lines.append(
            f"attacker target={a.target} phys={a.observe_physical} "
            f"virt={a.observe_virtual} tracked_fraction={a.tracked_fraction:.4f} "
            f"({a.boundaries_survived}/{a.boundaries_total} boundaries)"
        )
    lines.append(
        f"ledger: {len(report.chain_digest)} blocks, "
        f"{'intact' if report.chain_ok else 'INVALID'}"
    )
    return "\n".join(lines) + "\n"


def emit_fig5a(result, fmt: str, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    if fmt in ("csv", "json-lines"):
        if fmt == "csv":
            rows = ["vmu_index,frequency,scheme,utility,seed"]
            for r in result.rows:
                rows.append(
                    f"{r.vmu_index},{_fmt(r.frequency)},{r.scheme},"
                    f"{_fmt(r.utility)},{r.seed}"
                )
            paths.append(_write(out_dir / "fig5a.csv", "\n".join(rows) + "\n"))
        else:
            lines = [
                json.dumps(dataclasses.asdict(r), sort_keys=True) for r in result.rows
            ]
            paths.append(
                _write(out_dir / "fig5a.jsonl", "\n".join(lines) + "\n")
            )
    paths.append(_write(out_dir / "fig5a.txt", fig5a_table(result)))
    return paths


def fig5a_table(result) -> str:
    lines = [
        "scheme comparison: on-demand vs equal distribution",
        f"seeds: {len(result.seeds)}",
    ]
    od_mean = {}
    eq_mean = {}
    for r in result.rows:
        bucket = od_mean if r.scheme == "on_demand" else eq_mean
        bucket.setdefault(r.vmu_index, []).append(r.utility)
    lines.append("vmu  freq   on_demand  equal")
    for idx in sorted(od_mean):
        freq = next(r.frequency for r in result.rows if r.vmu_index == idx)
        lines.append(
            f"{idx:<4d} {freq:<6.3g} {np.mean(od_mean[idx]):<10.4f} "
            f"{np.mean(eq_mean[idx]):.4f}"
        )
    lines.append(
        f"mean improvement: {result.mean_improvement_pct:.1f}% "
        f"(reference: {result.reference_improvement_pct:.1f}%)"
    )
    lines.append(
        "improvement by seed: "
        + " ".join(f"{x:.1f}%" for x in result.improvement_pct_by_seed)
    )
    lines.append(
        f"per-VMU dominance share across seeds: "
        f"{result.per_vmu_dominance_share():.3f}"
    )
    return "\n".join(lines) + "\n"


def emit_fig5b(result, fmt: str, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    if fmt == "csv":
        rows = ["group,beta,global_utility,seed"]
        for r in result.rows:
            rows.append(
                f"{r.group},{_fmt(r.beta)},{_fmt(r.global_utility)},{r.seed}"
            )
        paths.append(_write(out_dir / "fig5b.csv", "\n".join(rows) + "\n"))
    elif fmt == "json-lines":
        lines = [
            json.dumps(dataclasses.asdict(r), sort_keys=True) for r in result.rows
        ]
        paths.append(_write(out_dir / "fig5b.jsonl", "\n".join(lines) + "\n"))
    paths.append(_write(out_dir / "fig5b.txt", fig5b_table(result)))
    return paths


def fig5b_table(result) -> str:
    lines = ["group utility vs change-profit coefficient (on-demand scheme)"]
    lines.append("beta    group1      group2      group3")
    for beta in result.beta_grid:
        means = []
        for grp in (1, 2, 3):
            vals = [
                r.global_utility
                for r in result.rows
                if r.beta == beta and r.group == grp
            ]
            means.append(float(np.mean(vals)))
        lines.append(
            f"{beta:<7.3g} {means[0]:<11.4f} {means[1]:<11.4f} {means[2]:.4f}"
        )
    lines.append(f"ordering share (g3>g2>g1): {result.ordering_share():.3f}")
    lines.append(f"monotone-in-beta share:    {result.monotone_share():.3f}")
    return "\n".join(lines) + "\n"


def write_manifest(
    out_dir: Path,
    config_echo: str,
    seeds: list[int],
    paths: list[Path],
    report_hash: str | None,
    seed_env_override: int | None,
) -> Path:
    files = {}
    for p in sorted(paths):
        files[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()
    manifest = {
        "tool_version": __version__,
        "config": config_echo,
        "seeds": seeds,
        "seed_env_override": seed_env_override,
        "outputs": files,
        "report_hash": report_hash,
    }
    path = out_dir / "manifest.json"
    path.write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return path


# ---------------------------------------------------------------------------
# Presets and entry point


def preset_text(name: str) -> str:
    from importlib import resources

    ref = resources.files("pseudotwin") / "presets" / f"{name}.toml"
    if not ref.is_file():
        raise ConfigError([f"unknown preset {name!r}"])
    return ref.read_text(encoding="utf-8")


def _seed_override(args) -> int | None:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError([f"{SEED_ENV_VAR}: not an integer"]) from exc
    return None


_MODE_FLAG = {"sync": "synchronous", "async": "asynchronous"}


def _apply_overrides(config: ScenarioConfig, args) -> ScenarioConfig:
    if args.mode:
        config = dataclasses.replace(config, mode=_MODE_FLAG[args.mode])
    if args.scheme:
        config = dataclasses.replace(config, scheme=args.scheme)
    seed = _seed_override(args)
    if seed is not None:
        config = config.with_seed(seed)
    return validate(config)


def _cmd_simulate(args) -> int:
    from .sim import SimulationEngine

    config = _apply_overrides(parse_config(args.config), args)
    engine = SimulationEngine(config)
    report = engine.run()
    out_dir = Path(args.out)
    paths = emit_sim_report(report, args.format, out_dir)
    chain_path = out_dir / "chain.bin"
    chain_path.write_bytes(engine.world.chain.to_bytes())
    paths.append(chain_path)
    write_manifest(
        out_dir,
        config_to_toml(config),
        [config.master_seed],
        paths,
        report.sha256(),
        _seed_override(args),
    )
    if args.format == "table":
        sys.stdout.write(sim_report_table(report))
    else:
        sys.stdout.write(f"wrote {len(paths) + 1} files to {out_dir}\n")
    return EXIT_OK


def _cmd_optimize(args) -> int:
    config = _apply_overrides(parse_config(args.config), args)
    rng_p = _stream(config.master_seed, _STREAM_P_DRAWS)
    vmus = []
    for spec in config.vmus:
        p = spec.p if spec.p is not None else 0.5 * (1.0 - float(rng_p.random()))
        ep = EntropyParams(
            h_max=config.h_max, h_0=config.h_0, h_min=config.h_min,
            alpha=config.alpha, p=p,
        )
        h_bar = (
            average_entropy(ep, 1.0 / spec.frequency)
            if spec.frequency > 0
            else config.h_min
        )
        vmus.append(
            (
                DemandModel(frequency=spec.frequency, period=config.period),
                UtilityParams(
                    beta=config.beta,
                    h_store=config.h_store,
                    r_penalty=config.r_penalty,
                    avg_entropy=h_bar,
                ),
            )
        )
    problem = AllocationProblem(vmus=tuple(vmus), budget=config.budget)
    exact = optimize_exact(problem)
    ga = optimize_ga(problem, config.ga, seed=config.master_seed)
    equal = equal_allocation(problem)
    lines = [
        f"budget: {problem.budget}",
        f"exact greedy : {list(exact.r)} objective="
        f"{global_expected_utility(problem, exact):.6f}",
        f"genetic      : {list(ga.r)} objective="
        f"{global_expected_utility(problem, ga):.6f}",
        f"equal        : {list(equal.r)} objective="
        f"{global_expected_utility(problem, equal):.6f}",
    ]
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_attack_eval(args) -> int:
    spec = parse_attack_config(args.config)
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    result = run_attack_eval(spec)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    if args.format == "csv":
        rows = ["boundary,survivors,replays,empirical,theory"]
        for row in result["survival"]:
            rows.append(
                f"{row['boundary']},{row['survivors']},{result['replays']},"
                f"{_fmt(row['empirical'])},{_fmt(row['theory'])}"
            )
        paths.append(_write(out_dir / "attack_eval.csv", "\n".join(rows) + "\n"))
    else:
        paths.append(
            _write(
                out_dir / "attack_eval.json",
                json.dumps(result, sort_keys=True, indent=2) + "\n",
            )
        )
    sys.stdout.write(
        f"{result['kind']}: mean tracked fraction "
        f"{result['mean_tracked_fraction']:.4f} over {result['replays']} replays\n"
    )
    echo_lines = ["[attack_eval]"] + [
        f"{key} = {_toml_value(getattr(spec, key))}" for key in _ATTACK_EVAL_KEYS
    ]
    write_manifest(out_dir, "\n".join(echo_lines) + "\n", [spec.seed], paths, None, None)
    return EXIT_OK


def _cmd_reproduce(args) -> int:
    out_dir = Path(args.out)
    if args.figure == "fig5a":
        config = parse_config_text(preset_text("paper_fig5a"))
        seeds = list(range(args.seeds if args.seeds else 30))
        result = experiment_fig5a(config, seeds)
        paths = emit_fig5a(result, args.format, out_dir)
        sys.stdout.write(fig5a_table(result))
    else:
        config = parse_config_text(preset_text("paper_fig5b"))
        seeds = list(range(args.seeds if args.seeds else 10))
        result = experiment_fig5b(config, seeds=seeds)
        paths = emit_fig5b(result, args.format, out_dir)
        sys.stdout.write(fig5b_table(result))
    write_manifest(
        out_dir, config_to_toml(config), seeds, paths, None, _seed_override(args)
    )
    return EXIT_OK


def _cmd_verify_chain(args) -> int:
    try:
        chain = Chain.from_bytes(Path(args.chain).read_bytes())
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"chain parse failure: {exc}\n")
        return EXIT_CHAIN
    bad = chain.verify()
    if bad is None:
        sys.stdout.write(f"ok: {len(chain)} blocks intact\n")
        return EXIT_OK
    sys.stderr.write(f"chain invalid at block {bad}\n")
    return EXIT_CHAIN


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pseudotwin",
        description="dual-pseudonym privacy simulator and allocator",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--seeds", type=int, default=None, help="number of seeds")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--format", choices=FORMATS, default="csv")
        p.add_argument("--mode", choices=("sync", "async"), default=None)
        p.add_argument("--scheme", choices=("on_demand", "equal"), default=None)

    p = sub.add_parser("simulate", help="run one scenario config")
    p.add_argument("config")
    common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("optimize", help="solve the allocation only, no event loop")
    p.add_argument("config")
    common(p)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("attack-eval", help="replay a constructed attack scenario")
    p.add_argument("config")
    common(p)
    p.set_defaults(func=_cmd_attack_eval)

    p = sub.add_parser("reproduce", help="rerun a bundled comparison")
    p.add_argument("figure", choices=("fig5a", "fig5b"))
    common(p)
    p.set_defaults(func=_cmd_reproduce)

    p = sub.add_parser("verify-chain", help="verify an exported shuffle ledger")
    p.add_argument("chain")
    common(p)
    p.set_defaults(func=_cmd_verify_chain)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for line in exc.errors:
            sys.stderr.write(f"config error: {line}\n")
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        sys.stderr.write(f"runtime error: {exc}\n")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
