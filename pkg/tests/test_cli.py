"""Tests for config ingestion, report emission, and the CLI entry point."""

import hashlib
import json

import pytest

from pseudotwin.cli import (
    EXIT_CHAIN,
    EXIT_CONFIG,
    EXIT_OK,
    SEED_ENV_VAR,
    AttackEvalSpec,
    config_to_toml,
    emit_fig5a,
    emit_sim_report,
    fig5a_table,
    main,
    parse_attack_config,
    parse_config,
    parse_config_text,
    preset_text,
    run_attack_eval,
)
from pseudotwin.sim import ConfigError, report_from_dict, run
from pseudotwin.sim.experiments import experiment_fig5a

MINIMAL = """
[scenario]
theta = 2.0
period = 10.0

[[vmu]]
frequency = 0.5
"""


class TestParseConfig:
    def test_minimal_defaults_filled(self):
        cfg = parse_config_text(MINIMAL)
        assert cfg.theta == 2.0
        assert cfg.mode == "synchronous"
        assert cfg.h_max == 1.5
        assert cfg.vmus[0].p is None

    def test_reference_preset(self):
        cfg = parse_config_text(preset_text("paper_fig5a"))
        assert len(cfg.vmus) == 6
        assert cfg.theta == 10.0
        assert cfg.period == 60.0
        assert (cfg.h_store, cfg.r_penalty) == (0.1, 0.3)
        assert (cfg.h_max, cfg.h_0, cfg.h_min, cfg.alpha) == (1.5, 1.0, 0.25, 1.0)
        assert [v.frequency for v in cfg.vmus] == [1.0, 1.2, 1.4, 1.6, 1.8, 2.0]

    def test_missing_theta_names_field(self):
        text = MINIMAL.replace("theta = 2.0", "")
        with pytest.raises(ConfigError) as err:
            parse_config_text(text)
        assert any("scenario.theta" in e for e in err.value.errors)

    def test_negative_frequency_rejected(self):
        text = MINIMAL.replace("frequency = 0.5", "frequency = -1.0")
        with pytest.raises(ConfigError) as err:
            parse_config_text(text)
        assert any("frequency" in e for e in err.value.errors)

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError) as err:
            parse_config_text(MINIMAL + "\nthetaxx = 3\n")
        assert any("unknown key" in e for e in err.value.errors)

    def test_unknown_nested_key_rejected(self):
        with pytest.raises(ConfigError) as err:
            parse_config_text(MINIMAL + "\n[entropy]\nh_mx = 1.0\n")
        assert any(e.startswith("entropy.h_mx") for e in err.value.errors)

    def test_type_errors_have_paths(self):
        with pytest.raises(ConfigError) as err:
            parse_config_text(MINIMAL.replace("theta = 2.0", 'theta = "lots"'))
        assert any(e.startswith("scenario.theta") for e in err.value.errors)

    def test_toml_syntax_error(self):
        with pytest.raises(ConfigError) as err:
            parse_config_text("[scenario\n")
        assert any("TOML parse error" in e for e in err.value.errors)

    def test_roundtrip_identity(self):
        cfg = parse_config_text(preset_text("paper_fig5a"))
        assert parse_config_text(config_to_toml(cfg)) == cfg

    def test_roundtrip_with_options(self):
        text = (
            MINIMAL
            + """
[ga]
population = 16
generations = 10

[[attacker]]
target = 0
observe_virtual = false
seed = 5
"""
        )
        cfg = parse_config_text(text)
        assert parse_config_text(config_to_toml(cfg)) == cfg

    def test_fig5b_preset_groups(self):
        cfg = parse_config_text(preset_text("paper_fig5b"))
        groups = [v.group for v in cfg.vmus]
        assert groups == [1, 1, 1, 2, 2, 2, 3, 3, 3]
        assert [v.frequency for v in cfg.vmus] == [
            1.0, 1.2, 1.4, 2.0, 2.2, 2.4, 3.0, 3.2, 3.4,
        ]


class TestAttackConfig:
    def test_linkage_preset(self, tmp_path):
        path = tmp_path / "atk.toml"
        path.write_text(preset_text("fig3_linkage"))
        spec = parse_attack_config(path)
        assert spec.kind == "linkage_timeline"
        assert spec.vmu_changes == 2

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "atk.toml"
        path.write_text("[attack_eval]\nkind = 'sync_groups'\nbogus = 1\n")
        with pytest.raises(ConfigError):
            parse_attack_config(path)

    def test_linkage_eval_fully_tracked(self):
        result = run_attack_eval(
            AttackEvalSpec(kind="linkage_timeline", replays=3)
        )
        assert result["mean_tracked_fraction"] == 1.0

    def test_sync_eval_matches_theory_shape(self):
        result = run_attack_eval(
            AttackEvalSpec(kind="sync_groups", group_size=2, boundaries=3, replays=2000)
        )
        assert result["survival"][0]["theory"] == 0.5
        assert abs(result["survival"][0]["empirical"] - 0.5) < 0.05


@pytest.fixture(scope="module")
def report():
    cfg = parse_config_text(MINIMAL).with_seed(3)
    return run(cfg)


class TestEmission:

    def test_csv_files(self, report, tmp_path):
        paths = emit_sim_report(report, "csv", tmp_path)
        names = {p.name for p in paths}
        assert {"report.json", "utilities.csv", "entropy_timelines.csv"} <= names
        header = (tmp_path / "utilities.csv").read_text().splitlines()[0]
        assert header == "vmu_index,frequency,scheme,utility,seed"
        text = (tmp_path / "utilities.csv").read_text()
        assert text.endswith("\n")

    def test_jsonl_roundtrip(self, report, tmp_path):
        emit_sim_report(report, "json-lines", tmp_path)
        line = (tmp_path / "report.jsonl").read_text().strip()
        again = report_from_dict(json.loads(line))
        assert again == report

    def test_fig5a_row_arithmetic(self, tmp_path):
        cfg = parse_config_text(preset_text("paper_fig5a"))
        result = experiment_fig5a(cfg, seeds=[0, 1, 2])
        paths = emit_fig5a(result, "csv", tmp_path)
        csv_path = next(p for p in paths if p.name == "fig5a.csv")
        lines = csv_path.read_text().splitlines()
        assert lines[0] == "vmu_index,frequency,scheme,utility,seed"
        assert len(lines) == 1 + 6 * 2 * 3  # header + vmus x schemes x seeds

    def test_table_improvement_one_decimal(self, tmp_path):
        cfg = parse_config_text(preset_text("paper_fig5a"))
        result = experiment_fig5a(cfg, seeds=[0])
        table = fig5a_table(result)
        assert "reference: 33.8%" in table
        assert "mean improvement:" in table

    def test_nine_significant_digits(self, report, tmp_path):
        emit_sim_report(report, "csv", tmp_path)
        rows = (tmp_path / "utilities.csv").read_text().splitlines()[1:]
        for row in rows:
            utility = row.split(",")[3]
            mantissa = utility.replace("-", "").replace(".", "").split("e")[0]
            assert len(mantissa.lstrip("0")) <= 9


class TestMain:
    def test_simulate_and_manifest(self, tmp_path):
        cfg_path = tmp_path / "cfg.toml"
        cfg_path.write_text(MINIMAL)
        out = tmp_path / "out"
        assert main(["simulate", str(cfg_path), "--out", str(out)]) == EXIT_OK
        manifest = json.loads((out / "manifest.json").read_text())
        report_bytes = (out / "report.json").read_bytes()
        assert manifest["report_hash"] == hashlib.sha256(report_bytes).hexdigest()
        assert manifest["outputs"]["report.json"] == manifest["report_hash"]

    def test_config_error_exit_code(self, tmp_path):
        cfg_path = tmp_path / "bad.toml"
        cfg_path.write_text("[scenario]\nperiod = 10.0\n[[vmu]]\nfrequency = 1.0\n")
        assert main(["simulate", str(cfg_path)]) == EXIT_CONFIG

    def test_missing_file_exit_code(self, tmp_path):
        assert main(["simulate", str(tmp_path / "nope.toml")]) == EXIT_CONFIG

    def test_verify_chain_roundtrip(self, tmp_path):
        cfg_path = tmp_path / "cfg.toml"
        cfg_path.write_text(MINIMAL)
        out = tmp_path / "out"
        main(["simulate", str(cfg_path), "--out", str(out)])
        assert main(["verify-chain", str(out / "chain.bin")]) == EXIT_OK
        data = bytearray((out / "chain.bin").read_bytes())
        data[len(data) // 2] ^= 0x10
        bad = tmp_path / "bad.bin"
        bad.write_bytes(bytes(data))
        assert main(["verify-chain", str(bad)]) == EXIT_CHAIN

    def test_seed_flag_changes_report(self, tmp_path):
        cfg_path = tmp_path / "cfg.toml"
        cfg_path.write_text(MINIMAL)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["simulate", str(cfg_path), "--out", str(out1), "--seed", "1"])
        main(["simulate", str(cfg_path), "--out", str(out2), "--seed", "2"])
        assert (out1 / "report.json").read_bytes() != (out2 / "report.json").read_bytes()

    def test_env_seed_override_echoed(self, tmp_path, monkeypatch):
        cfg_path = tmp_path / "cfg.toml"
        cfg_path.write_text(MINIMAL)
        out = tmp_path / "out"
        monkeypatch.setenv(SEED_ENV_VAR, "77")
        main(["simulate", str(cfg_path), "--out", str(out)])
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed_env_override"] == 77
        assert manifest["seeds"] == [77]

    def test_scheme_override(self, tmp_path):
        cfg_path = tmp_path / "cfg.toml"
        cfg_path.write_text(MINIMAL)
        out = tmp_path / "out"
        main(["simulate", str(cfg_path), "--out", str(out), "--scheme", "equal"])
        report = json.loads((out / "report.json").read_text())
        assert report["scheme"] == "equal"

    def test_mode_override_short_forms(self, tmp_path):
        cfg_path = tmp_path / "cfg.toml"
        cfg_path.write_text(MINIMAL)
        out = tmp_path / "out"
        main(["simulate", str(cfg_path), "--out", str(out), "--mode", "async"])
        report = json.loads((out / "report.json").read_text())
        assert report["config"]["mode"] == "asynchronous"

    def test_optimize_runs(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.toml"
        cfg_path.write_text(MINIMAL)
        assert main(["optimize", str(cfg_path)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "exact greedy" in out and "genetic" in out and "equal" in out

    def test_attack_eval_cli(self, tmp_path):
        cfg_path = tmp_path / "atk.toml"
        cfg_path.write_text(
            "[attack_eval]\nkind = \"sync_groups\"\ngroup_size = 2\n"
            "boundaries = 2\nreplays = 50\n"
        )
        out = tmp_path / "out"
        assert main(["attack-eval", str(cfg_path), "--out", str(out)]) == EXIT_OK
        assert (out / "attack_eval.csv").exists()
