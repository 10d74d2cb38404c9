import json

from click.testing import CliRunner

from cobosim import __version__
from cobosim.cli import cli


def _write_config(tmp_path, **train):
    raw = {
        "task": {"kind": "clustered_quadratics", "K": 2, "c": 2, "d": 4},
        "algorithms": ["local", "cobo"],
        "train": dict({"T": 30, "auto_gamma": True, "snapshot_every": 10}, **train),
    }
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(raw))
    return path


def test_version():
    result = CliRunner().invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output


def test_run_writes_outputs(tmp_path):
    config = _write_config(tmp_path)
    out = tmp_path / "out"
    result = CliRunner().invoke(cli, ["run", str(config), "--output", str(out), "--quiet"])
    assert result.exit_code == 0, result.output
    names = sorted(p.name for p in out.iterdir())
    assert names == [
        "cobo_W_0.json", "cobo_W_10.json", "cobo_W_20.json", "cobo_W_30.json",
        "cobo_metrics.csv", "config.json", "local_metrics.csv",
    ]
    saved = json.loads((out / "config.json").read_text())
    assert saved["output_dir"] == str(out)
    assert "Algorithm Comparison" in result.output


def test_run_is_byte_identical(tmp_path):
    config = _write_config(tmp_path)
    runner = CliRunner()
    for name in ("a", "b"):
        result = runner.invoke(cli, ["run", "--config", str(config), "-o", str(tmp_path / name), "-q"])
        assert result.exit_code == 0, result.output
    for csv_name in ("cobo_metrics.csv", "local_metrics.csv"):
        assert (tmp_path / "a" / csv_name).read_bytes() == (tmp_path / "b" / csv_name).read_bytes()


def test_run_seed_override(tmp_path):
    config = _write_config(tmp_path)
    runner = CliRunner()
    runner.invoke(cli, ["run", str(config), "-o", str(tmp_path / "a"), "-q"])
    result = runner.invoke(cli, ["run", str(config), "-o", str(tmp_path / "b"), "-q", "--seed", "5"])
    assert result.exit_code == 0
    assert json.loads((tmp_path / "b" / "config.json").read_text())["train"]["seed"] == 5
    assert (tmp_path / "a" / "cobo_metrics.csv").read_bytes() != (tmp_path / "b" / "cobo_metrics.csv").read_bytes()


def test_run_simplex_writes_ema(tmp_path):
    config = _write_config(tmp_path, mode="simplex")
    out = tmp_path / "out"
    result = CliRunner().invoke(cli, ["run", str(config), "-o", str(out), "-q", "--json"])
    assert result.exit_code == 0, result.output
    assert (out / "cobo_weights_ema.csv").exists()
    summary = json.loads(result.output)
    assert [row["algorithm"] for row in summary["rows"]] == ["local", "cobo"]


def test_invalid_config_exits_one(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"train": {"eta": -1}}))
    result = CliRunner().invoke(cli, ["run", str(path), "-o", str(tmp_path / "out")])
    assert result.exit_code == 1
    assert "train.eta" in result.output
    assert not (tmp_path / "out").exists()


def test_unparsable_config_exits_one(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{")
    result = CliRunner().invoke(cli, ["inspect", str(path)])
    assert result.exit_code == 1


def test_compare_writes_summary(tmp_path):
    config = _write_config(tmp_path)
    out = tmp_path / "cmp"
    result = CliRunner().invoke(cli, ["compare", str(config), "-o", str(out), "-q", "--json"])
    assert result.exit_code == 0, result.output
    summary = json.loads(result.output)
    assert {row["algorithm"] for row in summary["rows"]} == {
        "local", "fedavg", "finetune_fedavg", "ditto", "ifca", "oracle", "cobo",
    }
    assert (out / "summary.csv").exists()
    assert json.loads((out / "summary.json").read_text())["ranking_by_loss"] == summary["ranking_by_loss"]


def test_verify_theory_noiseless_exceeds_rate_bounds(tmp_path):
    path = tmp_path / "theory.json"
    path.write_text(json.dumps({"task": {"K": 2, "c": 2, "d": 4, "sigma": 0.0}, "train": {"T": 300}}))
    out = tmp_path / "theory"
    result = CliRunner().invoke(cli, ["verify-theory", str(path), "-o", str(out), "-q"])
    assert result.exit_code == 2, result.output
    report = json.loads((out / "theory_report.json").read_text())
    assert report["consensus_bound_rhs"] == 0.0
    assert report["gradnorm_bound_rhs"] == 0.0
    assert report["corollary_rhs"] == 0.0
    assert report["measured_lhs"]["gradnorm"] > 0.0
    assert report["conditions_hold"] is True
    assert report["bounds_hold"] is False
    assert report["explicit_bounds_hold"] is True
    assert report["passed"] is False


def test_verify_theory_rejects_classification(tmp_path):
    path = tmp_path / "cls.json"
    path.write_text(json.dumps({"task": {"kind": "label_permuted", "K": 2, "c": 1, "n_per_client": 20}}))
    result = CliRunner().invoke(cli, ["verify-theory", str(path), "-o", str(tmp_path / "o"), "-q"])
    assert result.exit_code == 1
    assert "quadratic" in result.output


def test_inspect_json(tmp_path):
    config = _write_config(tmp_path)
    result = CliRunner().invoke(cli, ["inspect", str(config), "--json"])
    assert result.exit_code == 0, result.output
    info = json.loads(result.output)
    assert info["n_clients"] == 4
    assert info["clusters"] == [[0, 1], [2, 3]]
    assert info["min_center_distance"] >= 10.0 - 1e-9
    assert len(info["pairs"]) == 6


def test_inspect_preset_text():
    result = CliRunner().invoke(cli, ["inspect", "--preset", "classification"])
    assert result.exit_code == 0, result.output
    assert "label_permuted" in result.output


def test_config_and_argument_conflict(tmp_path):
    config = _write_config(tmp_path)
    result = CliRunner().invoke(cli, ["inspect", str(config), "--config", str(config)])
    assert result.exit_code == 1
    assert "--config" in result.output


def test_config_show_applies_preset_and_file(tmp_path):
    path = tmp_path / "override.yaml"
    path.write_text("train:\n  T: 77\n")
    result = CliRunner().invoke(cli, ["config", "show", str(path), "--preset", "simplex", "--json"])
    assert result.exit_code == 0, result.output
    shown = json.loads(result.output)
    assert shown["train"]["T"] == 77
    assert shown["train"]["mode"] == "simplex"


def test_config_init(tmp_path):
    target = tmp_path / "new.yaml"
    runner = CliRunner()
    result = runner.invoke(cli, ["config", "init", str(target), "--preset", "theory"])
    assert result.exit_code == 0, result.output
    assert target.exists()
    assert runner.invoke(cli, ["config", "init", str(target)]).exit_code == 1
    assert runner.invoke(cli, ["config", "init", str(target), "--overwrite"]).exit_code == 0


def test_presets_lists_names():
    result = CliRunner().invoke(cli, ["presets"])
    assert result.exit_code == 0
    for name in ("quadratic-benchmark", "theory", "classification", "simplex"):
        assert name in result.output
