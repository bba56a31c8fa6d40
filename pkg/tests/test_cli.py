"""End-to-end command-line tests: synth artifacts, the audit subcommands,
exit-code contract, and report determinism."""

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from proxyaudit import report
from proxyaudit.cli import main
from proxyaudit.models import BuiltinModelHandle, DecisionRule, ModelSpec, decide

EPOCH = {"SOURCE_DATE_EPOCH": "1700000000"}


@pytest.fixture()
def runner():
    return CliRunner()


def synth_out(runner, tmp_path, name, rows=2000, seed=None):
    out = tmp_path / name
    args = ["synth", "--preset", name, "--rows", str(rows), "--out", str(out)]
    if seed is not None:
        args += ["--seed", str(seed)]
    result = runner.invoke(main, args)
    assert result.exit_code == 0, result.output
    return out


def read_report(out_dir):
    return json.loads((Path(out_dir) / "report.json").read_text())


# --- synth ----------------------------------------------------------------------


def test_synth_writes_complete_scenario(runner, tmp_path):
    out = synth_out(runner, tmp_path, "james", rows=500)
    for name in (
        "data.csv", "schema.json", "config.json", "graph.json",
        "ground_truth.json", "model_use.json", "model_ignore.json",
    ):
        assert (out / name).exists(), name
    rows = (out / "data.csv").read_text().strip().splitlines()
    assert len(rows) == 501  # header + data
    config = json.loads((out / "config.json").read_text())
    assert config["protected"] == ["sex"]
    assert config["model_path"] == "model_use.json"
    assert config["decision_rule"]["favourable_direction"] == "score_above"


def test_synth_is_deterministic(runner, tmp_path):
    a = synth_out(runner, tmp_path, "confounder", rows=300, seed=9)
    b_dir = tmp_path / "confounder_b"
    result = runner.invoke(
        main,
        ["synth", "--preset", "confounder", "--rows", "300", "--seed", "9",
         "--out", str(b_dir)],
    )
    assert result.exit_code == 0
    assert (a / "data.csv").read_bytes() == (b_dir / "data.csv").read_bytes()


def test_synth_unknown_preset_exits_2(runner, tmp_path):
    result = runner.invoke(
        main, ["synth", "--preset", "nonesuch", "--out", str(tmp_path / "x")]
    )
    assert result.exit_code == 2
    assert "unknown preset" in result.output


def test_synth_rejects_bad_rows(runner, tmp_path):
    result = runner.invoke(
        main,
        ["synth", "--preset", "james", "--rows", "0", "--out", str(tmp_path / "x")],
    )
    assert result.exit_code == 2


# --- full pipeline on james ------------------------------------------------------


@pytest.fixture(scope="module")
def james_dir(tmp_path_factory):
    runner = CliRunner()
    out = tmp_path_factory.mktemp("cli") / "james"
    result = runner.invoke(
        main,
        ["synth", "--preset", "james", "--rows", "2500", "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    return out


def run_full(runner, james_dir, out_name, *extra):
    out = james_dir / out_name
    result = runner.invoke(
        main,
        [
            "full",
            "--config", str(james_dir / "config.json"),
            "--data", str(james_dir / "data.csv"),
            "--out", str(out),
            *extra,
        ],
        env=EPOCH,
    )
    return result, out


def test_full_finds_exactly_one_red_flag(runner, james_dir):
    result, out = run_full(runner, james_dir, "run_use")
    assert result.exit_code == 0, result.output
    rpt = read_report(out)
    assert rpt["red_flag_count"] == 1
    (flag,) = [
        f for f in rpt["red_flags"] if f["label"] == report.RED_FLAG_LABEL
    ]
    assert flag["protected_target"] == ["sex", "male"]
    assert flag["use"]["direction_of_harm"] == "toward_unfavourable"
    assert flag["holdout_capacity"]["value"] == 1.0
    report.validate_report(rpt)
    assert (out / "report.md").exists()


def test_full_with_ignore_model_has_zero_red_flags(runner, james_dir):
    result, out = run_full(
        runner, james_dir, "run_ignore",
        "--model", str(james_dir / "model_ignore.json"),
    )
    assert result.exit_code == 0, result.output
    rpt = read_report(out)
    assert rpt["red_flag_count"] == 0
    assert rpt["red_flags"], "capacity findings must still be reported"
    assert all(
        f["label"] == report.CAPACITY_ONLY_LABEL for f in rpt["red_flags"]
    )


def test_full_reports_are_byte_identical(runner, james_dir):
    _r1, out1 = run_full(runner, james_dir, "determinism_a")
    _r2, out2 = run_full(runner, james_dir, "determinism_b")
    assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()
    assert (out1 / "report.md").read_bytes() == (out2 / "report.md").read_bytes()


def test_fail_on_red_flag_exits_4(runner, james_dir):
    result, _out = run_full(
        runner, james_dir, "run_flagged", "--fail-on-red-flag"
    )
    assert result.exit_code == 4
    result_ok, _ = run_full(
        runner, james_dir, "run_flag_ignore",
        "--model", str(james_dir / "model_ignore.json"),
        "--fail-on-red-flag",
    )
    assert result_ok.exit_code == 0


def test_full_without_model_skips_use(runner, james_dir, tmp_path):
    config = json.loads((james_dir / "config.json").read_text())
    del config["model_path"]
    stripped = james_dir / "config_nomodel.json"
    stripped.write_text(json.dumps(config))
    out = tmp_path / "run_nomodel"
    result = runner.invoke(
        main,
        ["full", "--config", str(stripped), "--data", str(james_dir / "data.csv"),
         "--out", str(out)],
        env=EPOCH,
    )
    assert result.exit_code == 0, result.output
    rpt = read_report(out)
    assert rpt["sections"]["use"] == "skipped"
    assert rpt["red_flag_count"] == 0
    assert all(f["use"] == "skipped" for f in rpt["red_flags"])


# --- capacity / discover / use subcommands ----------------------------------------


def test_capacity_command_and_json_only_format(runner, tmp_path):
    out = synth_out(runner, tmp_path, "school", rows=2000)
    run = tmp_path / "cap"
    result = runner.invoke(
        main,
        ["capacity", "--config", str(out / "config.json"),
         "--data", str(out / "data.csv"), "--out", str(run),
         "--format", "json"],
        env=EPOCH,
    )
    assert result.exit_code == 0, result.output
    assert (run / "report.json").exists()
    assert not (run / "report.md").exists()
    rpt = read_report(run)
    assert rpt["sections"]["capacity"]["scan"]
    assert rpt["sections"]["capacity"]["predictive"]
    # the school candidates reconstruct sex at >= 0.9 normalized capacity
    (pred,) = rpt["sections"]["capacity"]["predictive"]
    assert pred["value"] >= 0.85


def test_capacity_empty_candidates_ok(runner, tmp_path):
    out = synth_out(runner, tmp_path, "james", rows=300)
    config = json.loads((out / "config.json").read_text())
    config["candidates"] = []
    config["proxy_sets"] = []
    path = out / "config_empty.json"
    path.write_text(json.dumps(config))
    run = out / "cap_empty"
    result = runner.invoke(
        main,
        ["capacity", "--config", str(path), "--data", str(out / "data.csv"),
         "--out", str(run)],
        env=EPOCH,
    )
    assert result.exit_code == 0, result.output
    assert read_report(run)["sections"]["capacity"]["scan"] == []


def test_discover_independence_validates_nothing(runner, tmp_path):
    out = synth_out(runner, tmp_path, "independence", rows=2000, seed=4)
    run = tmp_path / "disc"
    result = runner.invoke(
        main,
        ["discover", "--config", str(out / "config.json"),
         "--data", str(out / "data.csv"), "--out", str(run)],
        env=EPOCH,
    )
    assert result.exit_code == 0, result.output
    rpt = read_report(run)
    assert rpt["sections"]["discovery"]["validated"] == []
    assert rpt["red_flag_count"] == 0


def test_use_command_capacity_no_use(runner, tmp_path):
    out = synth_out(runner, tmp_path, "capacity_no_use", rows=1500)
    config = json.loads((out / "config.json").read_text())
    config["use"] = {"assignments": [{"column": "P", "value": "a0"}],
                     "ice_columns": ["X"], "ice_row": 0}
    config["model_path"] = "model_no_use.json"
    path = out / "config_use.json"
    path.write_text(json.dumps(config))
    run = out / "use_zero"
    result = runner.invoke(
        main,
        ["use", "--config", str(path), "--data", str(out / "data.csv"),
         "--out", str(run)],
        env=EPOCH,
    )
    assert result.exit_code == 0, result.output
    rpt = read_report(run)
    (summary,) = rpt["sections"]["use"]["summaries"]
    assert summary["flip_rate"] == 0.0
    assert summary["mean_abs_delta"] == 0.0
    assert not summary["significant_influence_flag"]
    assert rpt["sections"]["use"]["ice"]
    # the use-variant model crosses the threshold for the protected group
    run2 = out / "use_nonzero"
    result2 = runner.invoke(
        main,
        ["use", "--config", str(path), "--data", str(out / "data.csv"),
         "--model", str(out / "model_use.json"), "--out", str(run2)],
        env=EPOCH,
    )
    assert result2.exit_code == 0, result2.output
    (summary2,) = read_report(run2)["sections"]["use"]["summaries"]
    assert summary2["significant_influence_flag"]
    assert summary2["flip_count"] > 0
    # oracle: brute-force the flip count from the raw data and model
    spec = ModelSpec.load(out / "model_use.json")
    rule = DecisionRule.from_json(config["decision_rule"])
    rows = [
        line.split(",") for line in
        (out / "data.csv").read_text().strip().splitlines()[1:]
    ]
    header = (out / "data.csv").read_text().splitlines()[0].split(",")
    a_idx, p_idx, x_idx = header.index("A"), header.index("P"), header.index("X")
    with BuiltinModelHandle(spec) as m:
        expected = 0
        for cells in rows:
            base_row = {"P": cells[p_idx], "X": float(cells[x_idx])}
            cf_row = dict(base_row, P="a0")
            base, cf = m.predict_batch([base_row, cf_row])
            if decide(rule, base) != decide(rule, cf):
                expected += 1
    assert summary2["flip_count"] == expected


def test_use_without_model_exits_2(runner, tmp_path):
    out = synth_out(runner, tmp_path, "capacity_no_use", rows=400)
    config = json.loads((out / "config.json").read_text())
    config["use"] = {"assignments": [{"column": "P", "value": "a0"}]}
    del config["model_path"]
    path = out / "config_nm.json"
    path.write_text(json.dumps(config))
    result = runner.invoke(
        main,
        ["use", "--config", str(path), "--data", str(out / "data.csv"),
         "--out", str(out / "x")],
    )
    assert result.exit_code == 2
    assert "model" in result.output


def test_use_without_assignments_exits_2(runner, tmp_path):
    out = synth_out(runner, tmp_path, "capacity_no_use", rows=400)
    result = runner.invoke(
        main,
        ["use", "--config", str(out / "config.json"),
         "--data", str(out / "data.csv"), "--out", str(out / "x")],
    )
    assert result.exit_code == 2
    assert "assignments" in result.output


# --- config and format error paths ------------------------------------------------


def test_config_column_mismatch_exits_2(runner, tmp_path):
    out = synth_out(runner, tmp_path, "james", rows=300)
    config = json.loads((out / "config.json").read_text())
    config["candidates"] = ["no_such_column"]
    path = out / "config_bad.json"
    path.write_text(json.dumps(config))
    result = runner.invoke(
        main,
        ["capacity", "--config", str(path), "--data", str(out / "data.csv"),
         "--out", str(out / "x")],
    )
    assert result.exit_code == 2
    assert "no_such_column" in result.output


def test_malformed_config_json_exits_2(runner, tmp_path):
    out = synth_out(runner, tmp_path, "james", rows=300)
    bad = out / "broken.json"
    bad.write_text("{not json")
    result = runner.invoke(
        main,
        ["capacity", "--config", str(bad), "--data", str(out / "data.csv"),
         "--out", str(out / "x")],
    )
    assert result.exit_code == 2


def test_unknown_format_exits_2(runner, tmp_path):
    out = synth_out(runner, tmp_path, "james", rows=300)
    result = runner.invoke(
        main,
        ["capacity", "--config", str(out / "config.json"),
         "--data", str(out / "data.csv"), "--out", str(out / "x"),
         "--format", "pdf"],
    )
    assert result.exit_code == 2


def test_missing_model_file_exits_2(runner, tmp_path):
    out = synth_out(runner, tmp_path, "james", rows=300)
    result = runner.invoke(
        main,
        ["full", "--config", str(out / "config.json"),
         "--data", str(out / "data.csv"),
         "--model", str(out / "no_model.json"), "--out", str(out / "x")],
    )
    assert result.exit_code == 2


def test_version_option(runner):
    result = runner.invoke(main, ["--version"])
    assert result.exit_code == 0
    assert "proxyaudit" in result.output
