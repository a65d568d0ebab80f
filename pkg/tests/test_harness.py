import json
import math

import numpy as np
import pytest

from lcmoments.cli import main
from lcmoments.errors import InvalidArgumentError
from lcmoments.harness import (
    CSV_COLUMNS,
    WORKERS_ENV,
    ExperimentConfig,
    coefficient_profile,
    row_from_csv_fields,
    rows_to_csv_bytes,
    run_experiment,
    worker_count,
    write_report,
    _cell_seed,
)

SMALL = dict(
    families=("exp", "cube"),
    profiles=("flat", "one_hot"),
    n_list=(3,),
    p_grid=(2.0, 4.0),
    n_samples=10_000,
    seed=13,
)


# -- config --------------------------------------------------------------------------

def test_config_accepts_small_grid():
    config = ExperimentConfig(**SMALL)
    assert config.output_dir == "out"


@pytest.mark.parametrize("patch", [
    dict(families=()),
    dict(profiles=()),
    dict(n_list=()),
    dict(p_grid=()),
    dict(n_list=(0,)),
    dict(p_grid=(1.5, 4.0)),
    dict(p_grid=(2.0, 40.0)),
    dict(p_grid=(4.0, 2.0)),
    dict(p_grid=(2.0, 2.0)),
    dict(n_samples=9_999),
])
def test_config_rejects_bad_fields(patch):
    with pytest.raises(InvalidArgumentError):
        ExperimentConfig(**{**SMALL, **patch})


def test_config_from_mapping_checks_keys():
    data = {k: list(v) if isinstance(v, tuple) else v for k, v in SMALL.items()}
    config = ExperimentConfig.from_mapping(data)
    assert config.families == ("exp", "cube")
    assert config.p_grid == (2.0, 4.0)
    with pytest.raises(InvalidArgumentError, match="unknown config keys"):
        ExperimentConfig.from_mapping({**data, "typo": 1})
    short = dict(data)
    del short["seed"]
    with pytest.raises(InvalidArgumentError, match="missing config keys"):
        ExperimentConfig.from_mapping(short)


def test_config_from_json_file(tmp_path):
    data = {k: list(v) if isinstance(v, tuple) else v for k, v in SMALL.items()}
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    assert ExperimentConfig.from_json_file(path) == ExperimentConfig(**SMALL)
    path.write_text("{not json")
    with pytest.raises(InvalidArgumentError, match="not valid JSON"):
        ExperimentConfig.from_json_file(path)
    path.write_text("[1, 2]")
    with pytest.raises(InvalidArgumentError, match="JSON object"):
        ExperimentConfig.from_json_file(path)


# -- profiles ------------------------------------------------------------------------

def test_profiles_materialize():
    np.testing.assert_array_equal(coefficient_profile("one_hot", 3), [1.0, 0.0, 0.0])
    flat = coefficient_profile("flat", 4)
    np.testing.assert_allclose(flat, 0.5)
    assert math.isclose(float(np.sum(flat ** 2)), 1.0)
    np.testing.assert_allclose(coefficient_profile("geometric:rho=0.5", 3),
                               [1.0, 0.5, 0.25])
    np.testing.assert_allclose(coefficient_profile("power:alpha=1", 3),
                               [1.0, 0.5, 1.0 / 3.0])
    np.testing.assert_array_equal(coefficient_profile("explicit:2,0,1", 3), [2.0, 0.0, 1.0])


def test_explicit_profile_length_mismatch_is_inapplicable():
    assert coefficient_profile("explicit:1,2", 3) is None


@pytest.mark.parametrize("spec", [
    "nope", "geometric:rho=0", "geometric:rho=1", "geometric:alpha=0.5",
    "power:alpha=0", "power:alpha=x", "explicit:1,zz", "geometric:rho=",
])
def test_profile_rejects_malformed_specs(spec):
    with pytest.raises(InvalidArgumentError):
        coefficient_profile(spec, 3)


def test_profile_rejects_bad_dimension():
    with pytest.raises(InvalidArgumentError):
        coefficient_profile("flat", 0)


# -- experiment runs ------------------------------------------------------------------

def test_run_experiment_grid_order_and_summary():
    result = run_experiment(ExperimentConfig(**SMALL))
    assert len(result.rows) == 8
    assert result.summary["cells"] == 8
    assert result.summary["skipped"] == 0
    assert [r.family for r in result.rows] == ["exp"] * 4 + ["cube"] * 4
    assert [r.p for r in result.rows[:2]] == [2.0, 4.0]
    for row in result.rows:
        assert row.ratio_lo == row.mc_value / row.hitczenko
        assert row.ratio_hi == row.bn_upper / row.mc_value
        assert row.band_lo <= row.band_up_indep
    envelopes = result.summary["families"]
    assert envelopes["exp"]["reference"] == "gk"
    assert envelopes["cube"]["reference"] == "momunc"
    for env in envelopes.values():
        assert env["cells"] == 4
        assert 0.0 < env["c_lo"]
        assert 0.0 < env["c_hi"] <= 1.0 + 1e-12


def test_run_experiment_skips_inapplicable_cells(caplog):
    config = ExperimentConfig(
        families=("exp",), profiles=("explicit:1,1",), n_list=(2, 3),
        p_grid=(2.0,), n_samples=10_000, seed=4)
    with caplog.at_level("INFO", logger="lcmoments.harness"):
        result = run_experiment(config)
    assert len(result.rows) == 1
    assert result.rows[0].n == 2
    assert result.summary["skipped"] == 1
    assert any("skipped" in rec.message for rec in caplog.records)


def test_run_experiment_skips_invalid_family_dimension():
    # a two-tail product spec only applies at n = 2; other slices are skipped
    config = ExperimentConfig(
        families=("product:exp,exp",), profiles=("flat",), n_list=(2, 3),
        p_grid=(2.0,), n_samples=10_000, seed=4)
    result = run_experiment(config)
    assert len(result.rows) == 1
    assert result.rows[0].n == 2
    assert result.summary["skipped"] == 1


def test_report_bytes_identical_across_worker_counts(monkeypatch):
    config = ExperimentConfig(**SMALL)
    blobs = []
    for workers in ("1", "4"):
        monkeypatch.setenv(WORKERS_ENV, workers)
        blobs.append(rows_to_csv_bytes(run_experiment(config).rows))
    assert blobs[0] == blobs[1]


# -- serialization --------------------------------------------------------------------

def test_csv_round_trip_is_exact(monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "1")
    rows = run_experiment(ExperimentConfig(**SMALL)).rows
    blob = rows_to_csv_bytes(rows)
    lines = blob.decode("ascii").split("\n")
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[-1] == ""
    parsed = [row_from_csv_fields(line.split(",")) for line in lines[1:-1]]
    assert tuple(parsed) == rows
    cube_row = next(r for r in rows if r.family == "cube")
    assert cube_row.gk is None and cube_row.bqn is None
    assert cube_row.momunc is not None


def test_row_from_csv_fields_checks_width():
    with pytest.raises(InvalidArgumentError):
        row_from_csv_fields(["exp", "2"])


def test_write_report_outputs(tmp_path, monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "2")
    result = run_experiment(ExperimentConfig(**SMALL))
    csv_path, summary_path = write_report(result, tmp_path / "out")
    assert csv_path.read_bytes() == rows_to_csv_bytes(result.rows)
    assert json.loads(summary_path.read_text()) == result.summary


# -- workers and seeds ----------------------------------------------------------------

def test_worker_count_env(monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    assert worker_count() >= 1
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert worker_count() == 3
    monkeypatch.setenv(WORKERS_ENV, "zero")
    with pytest.raises(InvalidArgumentError):
        worker_count()
    monkeypatch.setenv(WORKERS_ENV, "0")
    with pytest.raises(InvalidArgumentError):
        worker_count()


def test_cell_seeds_are_stable_and_distinct():
    seeds = [_cell_seed(13, k) for k in range(50)]
    assert seeds == [_cell_seed(13, k) for k in range(50)]
    assert len(set(seeds)) == 50
    assert _cell_seed(13, 0) != _cell_seed(14, 0)


# -- command line ---------------------------------------------------------------------

def test_cli_estimate_prints_rows_and_csv(tmp_path, capsys):
    csv_path = tmp_path / "cell.csv"
    rc = main(["estimate", "--family", "exp", "--n", "2", "--profile", "flat",
               "--p", "2,4", "--samples", "10000", "--seed", "1",
               "--csv", str(csv_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "p=2 " in out and "p=4 " in out
    assert "hitczenko=" in out and "gk=" in out
    lines = csv_path.read_bytes().decode("ascii").strip().split("\n")
    assert len(lines) == 3
    assert row_from_csv_fields(lines[1].split(",")).p == 2.0


def test_cli_estimate_invalid_inputs(capsys):
    assert main(["estimate", "--family", "nope", "--n", "2", "--profile", "flat",
                 "--p", "2"]) == 2
    assert main(["estimate", "--family", "exp", "--n", "3",
                 "--profile", "explicit:1,2", "--p", "2"]) == 2
    assert main(["estimate", "--family", "exp", "--n", "2", "--profile", "flat",
                 "--p", "2,bad"]) == 2
    assert "error:" in capsys.readouterr().err


def test_cli_report_runs_config(tmp_path, capsys):
    data = {k: list(v) if isinstance(v, tuple) else v for k, v in SMALL.items()}
    data["n_samples"] = 10_000
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(data))
    out_dir = tmp_path / "report"
    rc = main(["report", "--config", str(config_path), "--out", str(out_dir)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "8 rows" in out and "0 skipped" in out
    assert (out_dir / "report.csv").exists()
    summary = json.loads((out_dir / "summary.json").read_text())
    assert summary["cells"] == 8


def test_cli_report_invalid_config(tmp_path):
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps({"families": ["exp"]}))
    assert main(["report", "--config", str(config_path)]) == 2


def test_cli_verify_reports_pass_and_fail(monkeypatch, tmp_path, capsys):
    import lcmoments.acceptance as acceptance

    fake = [acceptance.CheckResult("alpha", True, {"m": 1.0}, 0.01),
            acceptance.CheckResult("beta", False, {"m": 9.0}, 0.20)]
    monkeypatch.setattr(acceptance, "run_suite", lambda suite, seed: fake)
    json_path = tmp_path / "verdicts.json"
    rc = main(["verify", "--suite", "core", "--json", str(json_path)])
    assert rc == 1
    captured = capsys.readouterr()
    assert "[PASS] alpha" in captured.out
    assert "[FAIL] beta" in captured.out
    assert "failed checks: beta" in captured.err
    payload = json.loads(json_path.read_text())
    assert [entry["name"] for entry in payload] == ["alpha", "beta"]

    monkeypatch.setattr(acceptance, "run_suite", lambda suite, seed: fake[:1])
    assert main(["verify", "--suite", "core"]) == 0


def test_cli_verify_unknown_suite(capsys):
    assert main(["verify", "--suite", "everything"]) == 2
    assert "unknown suite" in capsys.readouterr().err
