import csv
import json
import math
import subprocess
import sys

import pytest

from reset_ldp.cli import _merge_negative_values, main
from reset_ldp.harness import (
    ConfigError,
    ExperimentConfig,
    _chunk_bounds,
    _kernel_from_spec,
    build_config,
    parse_config_file,
)
from reset_ldp.plotting import plot_rate_curve
from reset_ldp.rare_event import CSV_FIELDS, EstimateResult


def _result(**kw) -> EstimateResult:
    base = dict(
        method="direct",
        T=4.0,
        epsilon=0.25,
        lam=0.5,
        kernel_name="uniform",
        n_replicas=100,
        estimate=0.01,
        ci_low=0.005,
        ci_high=0.02,
        empirical_rate=1.15,
        rate_lo=0.98,
        rate_hi=1.32,
        ess=100.0,
        seed=0,
    )
    base.update(kw)
    return EstimateResult(**base)


def test_parse_config_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(
        "# comment line\n"
        "lambda = 0.5\n"
        "\n"
        "T = 4,8   # trailing comment\n"
        "kernel=uniform\n"
    )
    assert parse_config_file(str(p)) == {"lambda": "0.5", "T": "4,8", "kernel": "uniform"}
    bad = tmp_path / "bad.cfg"
    bad.write_text("lambda 0.5\n")
    with pytest.raises(ConfigError, match="key = value"):
        parse_config_file(str(bad))
    empty = tmp_path / "empty.cfg"
    empty.write_text("lambda =\n")
    with pytest.raises(ConfigError, match="empty"):
        parse_config_file(str(empty))


def test_build_config_precedence(monkeypatch):
    monkeypatch.delenv("RESET_LDP_SEED", raising=False)
    cfg = build_config(
        "estimate",
        {"lambda": "1.0", "epsilon": "0.4", "seed": "5"},
        {"epsilon": "0.5"},
    )
    assert cfg.lam == 1.0
    assert cfg.epsilon == 0.5  # flag beats file
    assert cfg.master_seed == 5
    monkeypatch.setenv("RESET_LDP_SEED", "99")
    cfg = build_config("estimate", {"seed": "5"}, {"seed": "7"})
    assert cfg.master_seed == 99  # env beats both


def test_build_config_parses_types(monkeypatch):
    monkeypatch.delenv("RESET_LDP_SEED", raising=False)
    cfg = build_config("converge", {}, {"T": "4,8,16", "n": "500", "probes": "-2,-1,1"})
    assert cfg.T_grid == (4.0, 8.0, 16.0)
    assert cfg.T is None
    assert cfg.n_replicas == 500
    assert cfg.probes == (-2.0, -1.0, 1.0)
    cfg = build_config("estimate", {}, {"T": "4"})
    assert cfg.T == 4.0 and cfg.T_grid is None
    with pytest.raises(ConfigError, match="bad value"):
        build_config("estimate", {}, {"T": "four"})
    with pytest.raises(ConfigError, match="unknown flag key"):
        build_config("estimate", {}, {"bogus": "1"})
    with pytest.raises(ConfigError, match="unknown config-file key"):
        build_config("estimate", {"bogus": "1"}, {})


def test_experiment_config_validation():
    with pytest.raises(ConfigError, match="unknown experiment"):
        ExperimentConfig(experiment="nope")
    with pytest.raises(ConfigError, match="epsilon"):
        ExperimentConfig(experiment="estimate", epsilon=0.0)
    with pytest.raises(ConfigError, match="strictly increasing"):
        ExperimentConfig(experiment="converge", T_grid=(4.0, 4.0))
    with pytest.raises(ConfigError, match="workers"):
        ExperimentConfig(experiment="estimate", workers=0)
    with pytest.raises(ConfigError, match="method"):
        ExperimentConfig(experiment="estimate", method="guess")
    with pytest.raises(ConfigError, match="is-mode"):
        ExperimentConfig(experiment="estimate", is_mode="jumpy")
    with pytest.raises(ConfigError, match="delta"):
        ExperimentConfig(experiment="bound-check", delta=1.0)
    with pytest.raises(ConfigError, match="seed"):
        ExperimentConfig(experiment="estimate", master_seed=-1)
    with pytest.raises(ConfigError, match="probes"):
        ExperimentConfig(experiment="validate-kernel", probes=())


def test_kernel_from_spec():
    assert _kernel_from_spec("uniform").name == "uniform"
    assert _kernel_from_spec("deterministic").name == "deterministic_zero"
    assert _kernel_from_spec("power:2").name == "power:2"
    with pytest.raises(ConfigError, match="power:ALPHA"):
        _kernel_from_spec("power:x")
    with pytest.raises(ConfigError, match="unknown kernel"):
        _kernel_from_spec("gauss")


def test_chunk_bounds_cover_range():
    bounds = _chunk_bounds(0, 10, 4)
    assert bounds == [(0, 3), (3, 6), (6, 8), (8, 10)]
    assert _chunk_bounds(5, 7, 4) == [(5, 6), (6, 7)]  # workers > range
    bounds = _chunk_bounds(0, 100, 7)
    assert bounds[0][0] == 0 and bounds[-1][1] == 100
    assert all(a[1] == b[0] for a, b in zip(bounds, bounds[1:]))


def test_merge_negative_values():
    argv = ["validate-kernel", "--probes", "-1000,-1,1,1000", "--kernel", "uniform"]
    merged = _merge_negative_values(argv)
    assert merged == ["validate-kernel", "--probes=-1000,-1,1,1000", "--kernel", "uniform"]
    # option-like tokens are left alone
    assert _merge_negative_values(["--a", "--b"]) == ["--a", "--b"]
    assert _merge_negative_values(["--c", "-.5"]) == ["--c=-.5"]


def test_plot_rate_curve_svg():
    results = [_result(T=4.0), _result(T=8.0, empirical_rate=1.3)]
    svg = plot_rate_curve(results, predicted=1.25)
    assert svg.startswith("<svg")
    assert svg.endswith("\n")
    assert 'stroke-dasharray="6,4"' in svg
    assert svg.count("<circle") == 2
    assert plot_rate_curve(results, 1.25) == svg  # deterministic
    single = plot_rate_curve([_result()], predicted=1.25)
    assert single.count("<circle") == 1
    capped = plot_rate_curve([_result(rate_hi=math.inf)], predicted=1.25)
    assert "inf" not in capped
    with pytest.raises(ValueError):
        plot_rate_curve([], predicted=1.0)
    with pytest.raises(ValueError):
        plot_rate_curve([_result()], predicted=math.nan)


def test_simulate_writes_reloadable_csv(tmp_path, capsys):
    out_csv = tmp_path / "path.csv"
    out_json = tmp_path / "path.json"
    rc = main(
        [
            "simulate",
            "--T", "2",
            "--lambda", "1",
            "--grid-points", "32",
            "--seed", "3",
            "--csv", str(out_csv),
            "--json", str(out_json),
        ]
    )
    assert rc == 0
    stdout = capsys.readouterr().out
    assert "knots=" in stdout and "resets=" in stdout and "final=" in stdout
    text = out_csv.read_text()
    assert text.splitlines()[0] == "t,v"
    from reset_ldp.path_analysis import parse_path_spec

    reloaded = parse_path_spec(str(out_csv))
    payload = json.loads(out_json.read_text())
    assert payload["T"] == 2.0 and payload["lambda"] == 1.0
    assert payload["values"] == list(reloaded.values)
    assert len(payload["resets"]) == int(stdout.split("resets=")[1].split()[0])


def test_estimate_csv_json_round_trip(tmp_path, capsys):
    out_csv = tmp_path / "est.csv"
    out_json = tmp_path / "est.json"
    out_svg = tmp_path / "est.svg"
    rc = main(
        [
            "estimate",
            "--path", "linear:0.5",
            "--epsilon", "0.4",
            "--T", "2",
            "--lambda", "0.5",
            "--n", "300",
            "--grid-points", "64",
            "--seed", "11",
            "--csv", str(out_csv),
            "--json", str(out_json),
            "--svg", str(out_svg),
        ]
    )
    assert rc == 0
    assert "estimate=" in capsys.readouterr().out
    with open(out_csv, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(CSV_FIELDS)
    assert len(rows) == 2
    payload = json.loads(out_json.read_text())
    json_row = payload["rows"][0]
    for field, cell in zip(CSV_FIELDS, rows[1]):
        if field in ("method", "kernel"):
            assert cell == json_row[field]
        else:
            assert float(cell) == pytest.approx(json_row[field], rel=0, abs=0)
    assert payload["predicted_rate"] == pytest.approx(0.625)
    assert out_svg.read_text().startswith("<svg")


def test_converge_summary_row(tmp_path):
    out_csv = tmp_path / "curve.csv"
    out_json = tmp_path / "curve.json"
    rc = main(
        [
            "converge",
            "--path", "linear:0.5",
            "--epsilon", "0.4",
            "--T", "2,4",
            "--lambda", "0.5",
            "--method", "importance",
            "--n", "400",
            "--grid-points", "64",
            "--csv", str(out_csv),
            "--json", str(out_json),
        ]
    )
    assert rc == 0
    with open(out_csv, newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 4  # header, two horizons, summary
    summary = rows[-1]
    assert summary[0] == "summary"
    assert float(summary[6]) == pytest.approx(0.625)  # predicted in estimate column
    assert summary[7] == "" and summary[8] == "" and summary[12] == ""
    payload = json.loads(out_json.read_text())
    assert payload["predicted_rate"] == pytest.approx(0.625)
    assert len(payload["rows"]) == 2
    assert payload["summary"]["method"] == "summary"
    assert payload["summary"]["ci_low"] is None
    for csv_row, json_row in zip(rows[1:3], payload["rows"]):
        for field, cell in zip(CSV_FIELDS, csv_row):
            if field in ("method", "kernel"):
                assert cell == json_row[field]
            else:
                assert float(cell) == json_row[field]


def test_rate_command(tmp_path, capsys):
    out_json = tmp_path / "rate.json"
    rc = main(["rate", "--path", "linear:1", "--lambda", "1", "--json", str(out_json)])
    assert rc == 0
    assert "predicted_rate=1.5" in capsys.readouterr().out
    payload = json.loads(out_json.read_text())
    assert payload["predicted_rate"] == pytest.approx(1.5)
    assert payload["action_f_plus"] == pytest.approx(0.5)
    assert payload["action_f_minus"] == 0.0
    assert payload["total_variation"] == pytest.approx(1.0)
    assert main(["rate", "--path", "linear:1", "--csv", "x.csv"]) == 2


def test_bound_check_command(tmp_path, capsys):
    out_csv = tmp_path / "bound.csv"
    rc = main(
        ["bound-check", "--lambda", "1", "--delta", "0.25", "--c", "0.5", "--T", "10",
         "--csv", str(out_csv)]
    )
    assert rc == 0
    assert "holds=True" in capsys.readouterr().out
    with open(out_csv, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["lambda", "delta", "c", "T", "exact_cdf", "bound", "holds"]
    assert rows[1][6] == "True"


def test_sup_law_single_horizon(tmp_path):
    out_csv = tmp_path / "sup.csv"
    rc = main(
        ["sup-law", "--lambda", "1", "--T", "100", "--n", "30",
         "--grid-points", "64", "--csv", str(out_csv)]
    )
    assert rc == 0
    with open(out_csv, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["T", "phi_value", "median", "q90"]
    assert len(rows) == 2
    assert float(rows[1][1]) == pytest.approx(math.log(100.0))


def test_validate_kernel_command(tmp_path, capsys):
    out_json = tmp_path / "report.json"
    rc = main(
        ["validate-kernel", "--kernel", "uniform", "--probes", "-1,1", "--json", str(out_json)]
    )
    assert rc == 0
    assert "all_pass=True" in capsys.readouterr().out
    payload = json.loads(out_json.read_text())
    assert payload["all_pass"] is True
    assert payload["A0"] == "pass"
    assert abs(payload["measured_delta"] - 1.0) <= 1e-6


def test_exit_codes_and_error_json(tmp_path, capsys):
    rc = main(["estimate", "--path", "linear:1", "--epsilon", "-1", "--T", "1"])
    assert rc == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["exit_code"] == 2
    assert "epsilon" in err["error"]["message"]

    rc = main(["estimate", "--path", "linear:1", "--T", "1"])  # missing epsilon
    assert rc == 2

    rc = main(["estimate", "--frobnicate", "1"])  # unknown flag via argparse
    assert rc == 2

    cfg = tmp_path / "bad.cfg"
    cfg.write_text("bogus = 1\n")
    rc = main(["rate", "--path", "linear:1", "--config", str(cfg)])
    assert rc == 2

    rc = main(["rate", "--path", "linear:1", "--config", str(tmp_path / "missing.cfg")])
    assert rc == 2  # OSError from the config file

    capsys.readouterr()
    rc = main(
        ["estimate", "--path", "tent:0.5,0.5", "--epsilon", "0.3", "--T", "2",
         "--lambda", "1", "--kernel", "deterministic", "--method", "importance",
         "--is-mode", "staircase", "--n", "50"]
    )
    assert rc == 3
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["exit_code"] == 3
    assert err["error"]["type"] == "EstimationError"


def test_env_seed_lands_in_output(tmp_path, monkeypatch):
    monkeypatch.setenv("RESET_LDP_SEED", "99")
    out_csv = tmp_path / "est.csv"
    rc = main(
        ["estimate", "--path", "linear:0.5", "--epsilon", "0.5", "--T", "1",
         "--n", "100", "--grid-points", "32", "--seed", "5", "--csv", str(out_csv)]
    )
    assert rc == 0
    with open(out_csv, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[1][CSV_FIELDS.index("seed")] == "99"


def test_config_file_drives_run(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "path = linear:0.5\nepsilon = 0.4\nT = 1\nlambda = 0.5\nn = 100\ngrid-points = 32\n"
    )
    rc = main(["estimate", "--config", str(cfg), "--epsilon", "0.6"])
    assert rc == 0
    assert "estimate=" in capsys.readouterr().out


def test_workers_do_not_change_artifacts(tmp_path):
    def run_with(workers: str, tag: str) -> tuple[bytes, bytes, bytes]:
        paths = {ext: tmp_path / f"{tag}.{ext}" for ext in ("csv", "json", "svg")}
        rc = main(
            [
                "converge",
                "--path", "linear:0.5",
                "--epsilon", "0.3",
                "--T", "2,4",
                "--lambda", "0.5",
                "--method", "importance",
                "--n", "600",
                "--grid-points", "64",
                "--seed", "42",
                "--workers", workers,
                "--csv", str(paths["csv"]),
                "--json", str(paths["json"]),
                "--svg", str(paths["svg"]),
            ]
        )
        assert rc == 0
        return tuple(paths[ext].read_bytes() for ext in ("csv", "json", "svg"))

    serial = run_with("1", "w1")
    parallel = run_with("4", "w4")
    assert serial == parallel


def test_module_entry_point_subprocess():
    proc = subprocess.run(
        [sys.executable, "-m", "reset_ldp", "rate", "--path", "linear:1", "--lambda", "1"],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert proc.returncode == 0
    assert "predicted_rate=1.5" in proc.stdout
