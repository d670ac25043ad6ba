"""End-to-end tests for the batch driver: configs, exit codes, reports."""

import csv
import json
import shutil
import subprocess

import pytest

from gaussjn.cli import ExperimentConfig, ConfigError, main as cli_main


def run_cli(subcommand, cfg_obj, tmp_path, *extra):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(cfg_obj), encoding="utf-8")
    out = tmp_path / "out"
    code = cli_main(
        [subcommand, "--config", str(cfg_path), "--out", str(out), *extra]
    )
    return code, out


def read_json(out_dir, subcommand):
    return json.loads((out_dir / f"{subcommand}.json").read_text(encoding="utf-8"))


def read_csv(out_dir, subcommand):
    with open(out_dir / f"{subcommand}.csv", newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


# ---------------------------------------------------------------------------
# contract examples
# ---------------------------------------------------------------------------


def test_covering_depth_one_produces_three_cubes(tmp_path):
    code, out = run_cli(
        "covering", {"dimension": 1, "depth": 1, "coverage_points": 5000}, tmp_path
    )
    assert code == 0
    payload = read_json(out, "covering")
    assert payload["ok"] is True
    assert payload["report"]["cube_count"] == 3
    rows = read_csv(out, "covering")
    assert rows[0] == ["layer", "side", "c1"]
    assert len(rows) == 4  # header + one central + two first-shell cubes
    assert sorted(r[0] for r in rows[1:]) == ["0", "1", "1"]


def test_jnp_constant_field_scores_zero(tmp_path):
    cfg = {
        "dimension": 1,
        "depth": 2,
        "candidate_depth": 2,
        "p": 2.0,
        "q": 1.5,
        "fields": ["const_one"],
    }
    code, out = run_cli("jnp", cfg, tmp_path)
    assert code == 0
    payload = read_json(out, "jnp")
    assert payload["ok"] is True
    assert payload["estimates"][0]["value"] == 0.0


def test_duality_conjugate_mismatch_is_a_config_error(tmp_path, capsys):
    cfg = {"duality": {"p": 1.5, "p_prime": 2.9}}
    code, _ = run_cli("duality", cfg, tmp_path)
    assert code == 2
    err = capsys.readouterr().err
    assert "config error" in err
    assert "not conjugate" in err


# ---------------------------------------------------------------------------
# config validation
# ---------------------------------------------------------------------------


def test_unknown_config_key_is_rejected(tmp_path, capsys):
    code, _ = run_cli("covering", {"zeta": 1}, tmp_path)
    assert code == 2
    assert "unknown config keys" in capsys.readouterr().err


def test_unknown_corpus_field_is_rejected(tmp_path, capsys):
    code, _ = run_cli("jnp", {"fields": ["nope"]}, tmp_path)
    assert code == 2
    assert "unknown corpus fields" in capsys.readouterr().err


def test_malformed_json_is_rejected(tmp_path, capsys):
    cfg_path = tmp_path / "broken.json"
    cfg_path.write_text("{", encoding="utf-8")
    code = cli_main(["covering", "--config", str(cfg_path)])
    assert code == 2
    assert "not valid JSON" in capsys.readouterr().err


def test_missing_config_file_is_rejected(tmp_path, capsys):
    code = cli_main(["covering", "--config", str(tmp_path / "absent.json")])
    assert code == 2
    assert "not found" in capsys.readouterr().err


def test_exponent_order_is_enforced_per_subcommand(tmp_path, capsys):
    # p <= q only matters for the oscillation-functional subcommands
    code, _ = run_cli("jnp", {"p": 1.5, "q": 2.0}, tmp_path)
    assert code == 2
    assert "1 < q < p" in capsys.readouterr().err
    code, out = run_cli(
        "covering", {"p": 1.5, "q": 2.0, "depth": 1, "coverage_points": 2000}, tmp_path
    )
    assert code == 0


def test_config_object_round_trip():
    cfg = ExperimentConfig.from_obj({"dimension": 2, "p": 3.0, "q": 2.0, "seed": 9})
    obj = cfg.to_obj()
    assert obj["dimension"] == 2
    assert obj["seed"] == 9
    assert obj["a"] is None
    assert obj["a_value"] == pytest.approx(2.0 * 2.0**0.5)
    assert obj["backend"] in ("numba", "numpy")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_obj({"dimension": 5})


# ---------------------------------------------------------------------------
# failure verdicts (exit status 1)
# ---------------------------------------------------------------------------


def test_jn_tail_on_constant_field_fails_with_advice(tmp_path, capsys):
    cfg = {
        "depth": 2,
        "candidate_depth": 2,
        "p": 2.0,
        "q": 1.5,
        "fields": ["const_one"],
    }
    code, out = run_cli("jn-tail", cfg, tmp_path)
    assert code == 1
    captured = capsys.readouterr()
    assert "drop it from the config" in captured.out
    assert "checks failed" in captured.err
    payload = read_json(out, "jn-tail")
    assert payload["ok"] is False


# ---------------------------------------------------------------------------
# determinism and overrides
# ---------------------------------------------------------------------------


def test_rerun_reproduces_reports_byte_for_byte(tmp_path):
    cfg = {"embed": {"trials": 8}, "seed": 123}
    code, out = run_cli("embed", cfg, tmp_path)
    assert code == 0
    first_json = (out / "embed.json").read_bytes()
    first_csv = (out / "embed.csv").read_bytes()
    code, out = run_cli("embed", cfg, tmp_path)
    assert code == 0
    assert (out / "embed.json").read_bytes() == first_json
    assert (out / "embed.csv").read_bytes() == first_csv


def test_seed_override_is_recorded_and_changes_draws(tmp_path):
    cfg = {"embed": {"trials": 8}, "seed": 123}
    code, out = run_cli("embed", cfg, tmp_path)
    assert code == 0
    base_rows = read_csv(out, "embed")
    code, out7 = run_cli("embed", cfg, tmp_path, "--seed", "7")
    assert code == 0
    payload = read_json(out7, "embed")
    assert payload["config"]["seed"] == 7
    assert read_csv(out7, "embed") != base_rows


def test_verbosity_zero_silences_passing_checks(tmp_path, capsys):
    code, _ = run_cli(
        "covering",
        {"depth": 1, "coverage_points": 2000},
        tmp_path,
        "--verbosity",
        "0",
    )
    assert code == 0
    assert "[PASS]" not in capsys.readouterr().out


# ---------------------------------------------------------------------------
# every subcommand on a small d=1 configuration
# ---------------------------------------------------------------------------

SMALL_CONFIGS = {
    "covering": {"depth": 3, "coverage_points": 20000},
    "jnp": {
        "depth": 3,
        "candidate_depth": 3,
        "p": 2.0,
        "q": 1.5,
        "fields": ["sign0", "radius_sq"],
    },
    "bmo": {
        "depth": 3,
        "candidate_depth": 3,
        "p": 2.0,
        "q": 1.5,
        "fields": ["sign0", "radius_sq"],
    },
    "jn-tail": {
        "depth": 3,
        "candidate_depth": 3,
        "p": 2.0,
        "q": 1.5,
        "fields": ["radius_sq"],
    },
    "p-scan": {
        "depth": 3,
        "candidate_depth": 3,
        "q": 1.5,
        "fields": ["sign0"],
        "p_grid": [2.0, 3.0, 4.0],
    },
    "embed": {"embed": {"trials": 10}},
    "subdivide": {"fields": ["radius_sq"], "subdivide": {"a_target": 1.0}},
    "duality": {"fields": ["sign0", "radius_sq"]},
}


@pytest.mark.parametrize("subcommand", sorted(SMALL_CONFIGS))
def test_subcommand_runs_green_and_writes_both_reports(subcommand, tmp_path):
    code, out = run_cli(subcommand, SMALL_CONFIGS[subcommand], tmp_path)
    assert code == 0
    payload = read_json(out, subcommand)
    assert payload["ok"] is True
    assert payload["checks"]
    assert all(c["ok"] for c in payload["checks"])
    assert (out / f"{subcommand}.csv").is_file()


def test_csv_reports_are_rectangular(tmp_path):
    code, out = run_cli("jnp", SMALL_CONFIGS["jnp"], tmp_path)
    assert code == 0
    rows = read_csv(out, "jnp")
    assert rows[0] == ["field", "p", "q", "value", "family_size", "candidates"]
    assert len(rows) == 3
    assert all(len(r) == len(rows[0]) for r in rows)


def test_console_script_entry_point(tmp_path):
    exe = shutil.which("gaussjn")
    assert exe is not None, "console script should be installed with the package"
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(
        json.dumps({"depth": 1, "coverage_points": 2000}), encoding="utf-8"
    )
    out = tmp_path / "out"
    proc = subprocess.run(
        [exe, "covering", "--config", str(cfg_path), "--out", str(out)],
        capture_output=True,
        text=True,
        timeout=300,
    )
    assert proc.returncode == 0, proc.stderr
    assert (out / "covering.json").is_file()
