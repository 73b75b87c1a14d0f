import csv
import json
import math
from fractions import Fraction

import pytest

from cokernel_lab.cli import main
from cokernel_lab.errors import ConfigError
from cokernel_lab.experiments import ExperimentConfig, build_report, collect, dumps_report, run_experiment, write_outputs
from cokernel_lab.experiments.report import ROW_FIELDS, parse_class_key, wilson_interval
from cokernel_lab.experiments.verify import BATTERY, run_verify
from cokernel_lab.oracle import general_sur_moment_z2

GENERAL_2 = 0.2887880950868651


def cfg(**kw):
    base = {"kind": "cok-dist", "n": [30], "trials": 200, "master_seed": 7}
    base.update(kw)
    return ExperimentConfig.from_json(base)


# ---------------------------------------------------------------- config


@pytest.mark.parametrize(
    "bad",
    [
        {"kind": "nope"},
        {"trials": 0},
        {"n": [0]},
        {"p": 4},
        {"d": 0},
        {"master_seed": -1},
        {"matrix": "hermitian"},
        {"unknown_key": 1},
        {"c": None},
        {"targets": [[2]], "d": 2},
        {"targets": [{"p": 3, "lambda": [1]}]},
        {"z": 0},
    ],
)
def test_config_rejects(bad):
    with pytest.raises(ConfigError):
        cfg(**bad)


def test_config_graph_needs_one_beta():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json({"kind": "sandpile", "graph": {"n": 10}})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json({"kind": "sandpile", "graph": {"n": 10, "beta": 0.5, "beta_schedule": {"c0": 1}}})


def test_config_moment_level_guard():
    with pytest.raises(ConfigError):
        cfg(kind="moment", d=1, G=[2])


def test_config_echo_omits_workers():
    a = cfg(workers=1).to_json()
    b = cfg(workers=4).to_json()
    assert a == b and "workers" not in a


# ---------------------------------------------------------------- estimates


def test_single_trial_smoke():
    report, _ = run_experiment(cfg(trials=1))
    assert len(report["rows"]) == 1
    assert report["rows"][0]["estimate"] in (0.0, 1.0)


def test_histogram_partitions_the_sample():
    c = cfg(trials=300, n=[20, 21], matrix="symmetric")
    camp = collect(c)
    for n in c.n:
        hist = camp.histograms[n]
        assert sum(hist.values()) == c.trials
        assert sum(Fraction(v, c.trials) for v in hist.values()) == 1


def test_rank_rows_cover_the_sample():
    c = cfg(kind="rank-dist", trials=400, max_corank=12)
    report, _ = run_experiment(c)
    assert sum(r["estimate"] for r in report["rows"]) == pytest.approx(1.0, abs=1e-12)


def test_ci_half_width_scales_like_inverse_root():
    widths = []
    for trials in (1000, 2000, 4000):
        report, _ = run_experiment(cfg(n=[20], trials=trials))
        row = report["rows"][0]
        widths.append(row["ci_high"] - row["estimate"])
    for a, b in zip(widths, widths[1:]):
        assert a / b == pytest.approx(math.sqrt(2), rel=0.2)


def test_alternating_odd_rank_parity():
    c = cfg(kind="rank-dist", matrix="alternating", n=[21], trials=300, d=1)
    camp = collect(c)
    for key in camp.histograms[21]:
        assert parse_class_key(key, 2, 1).corank % 2 == 1


def test_alternating_even_z3_target_is_rare():
    c = cfg(matrix="alternating", n=[40], p=3, d=2, targets=[[1]], trials=500, alpha=0.5)
    report, _ = run_experiment(c)
    row = report["rows"][0]
    assert row["limit"] == 0
    assert row["estimate"] <= 0.02


def test_triangle_sandpile_is_z3():
    for p, target, expected in ((2, [], 1.0), (3, [1], 1.0), (3, [], 0.0)):
        c = ExperimentConfig.from_json(
            {"kind": "sandpile", "graph": {"n": 3, "beta": 1}, "p": p, "d": 2, "targets": [target], "trials": 20}
        )
        report, _ = run_experiment(c)
        assert report["rows"][0]["estimate"] == 0.0
        assert report["rows"][1]["estimate"] == expected


def test_sharpness_single_zero_column():
    c = ExperimentConfig.from_json({"kind": "sharpness", "n": [3000], "trials": 2000, "k": 1})
    report, _ = run_experiment(c)
    mean, tail = report["rows"]
    assert mean["estimate"] == pytest.approx(1.0, abs=0.1)
    assert tail["estimate"] >= 0.45
    assert tail["bound"] == 0.5


def test_moment_rows_have_limits():
    report, _ = run_experiment(cfg(kind="moment", matrix="alternating", n=[30, 31], trials=100))
    by_n = {(r["n"], r["quantity"][:5]): r["limit"] for r in report["rows"]}
    assert by_n[30, "E#Sur"] == 2
    assert by_n[30, "E#Hom"] == 3
    assert by_n[31, "E#Sur"] is None


def test_general_moment_matches_finite_n_value():
    # the Monte Carlo mean estimates the exact finite-n moment, not only its limit
    c = cfg(kind="moment", n=[60], trials=4000, G=[1], d=1)
    row = run_experiment(c)[0]["rows"][0]
    exact = general_sur_moment_z2(60, c.alpha_at(60))
    assert abs(row["estimate"] - exact) <= 4 * row["se"]


@pytest.mark.parametrize("matrix, limit", [("general", 1), ("symmetric", 1), ("alternating", 2)])
def test_dense_moments_sit_on_their_limits(matrix, limit):
    # with dense entries the finite-n correction is exponentially small
    c = cfg(kind="moment", matrix=matrix, n=[40], trials=4000, G=[1], d=2, alpha=0.5)
    row = run_experiment(c)[0]["rows"][0]
    assert row["limit"] == limit
    assert abs(row["estimate"] - limit) <= 4 * row["se"]


def test_wilson_interval_contains_estimate():
    lo, hi = wilson_interval(30, 100, 3.0)
    assert lo < 0.3 < hi
    assert wilson_interval(0, 0, 3.0) == (0.0, 1.0)


# ---------------------------------------------------------------- outputs


def test_reports_identical_across_worker_counts(tmp_path):
    texts = []
    for workers in (1, 3):
        c = cfg(n=[16, 17], matrix="alternating", trials=120, workers=workers, d=3, targets=[[], [1]])
        report, _ = run_experiment(c)
        out = tmp_path / f"w{workers}"
        write_outputs(report, out, figure=False)
        texts.append(((out / "report.json").read_bytes(), (out / "rows.csv").read_bytes()))
    assert texts[0] == texts[1]


def test_output_files(tmp_path):
    report, camp = run_experiment(cfg(trials=50))
    paths = write_outputs(report, tmp_path, seconds=camp.seconds)
    assert set(paths) == {"report", "rows", "figure", "timing"}
    assert json.loads(paths["report"].read_text()) == json.loads(dumps_report(report))
    with open(paths["rows"], newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == ROW_FIELDS
    assert len(rows) == 1 + len(report["rows"])
    assert paths["figure"].read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_figure_bytes_are_stable(tmp_path):
    report, _ = run_experiment(cfg(trials=50))
    write_outputs(report, tmp_path / "a")
    write_outputs(report, tmp_path / "b")
    assert (tmp_path / "a" / "figure.png").read_bytes() == (tmp_path / "b" / "figure.png").read_bytes()


def test_report_rejects_broken_histogram():
    c = cfg(trials=10)
    camp = collect(c)
    camp.histograms[30]["|"] += 1
    with pytest.raises(AssertionError):
        build_report(camp)


# ---------------------------------------------------------------- verify


def test_verify_default_battery():
    report = run_verify()
    assert report["all_pass"]
    assert {r["check"] for r in report["checks"]} == set(BATTERY)
    for record in report["checks"]:
        assert set(record) == {"check", "case", "computed", "expected", "pass"}
    json.dumps(report)


def test_verify_negative_control():
    report = run_verify({"aut_order": {"2:1,1": 7}}, only=["aut_order"])
    assert not report["all_pass"]
    assert report["failed_checks"] == ["aut_order"]


# ---------------------------------------------------------------- CLI


def _write(tmp_path, obj):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.mark.parametrize(
    "command, obj",
    [
        ("cok-dist", {"n": 20, "trials": 30}),
        ("rank-dist", {"n": 20, "trials": 30, "matrix": "symmetric"}),
        ("moment", {"n": 20, "trials": 30, "G": [1]}),
        ("sandpile", {"graph": {"n": 20, "beta": 0.5}, "trials": 30}),
        ("sharpness", {"n": 200, "trials": 30}),
    ],
)
def test_cli_campaigns(tmp_path, capsys, command, obj):
    out = tmp_path / "out"
    code = main([command, "--config", _write(tmp_path, obj), "--seed", "3", "--workers", "2", "--out", str(out)])
    assert code == 0
    assert {p.name for p in out.iterdir()} == {"report.json", "rows.csv", "figure.png", "timing.json"}
    report = json.loads((out / "report.json").read_text())
    assert report["seed_lineage"]["master_seed"] == 3
    assert capsys.readouterr().out.splitlines()[0][:4] in ("PASS", "FAIL", "----")


def test_cli_formulas(capsys):
    assert main(["formulas", "eval", "--kind", "general", "--H", '{"p": 2, "lambda": []}']) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["value"] == pytest.approx(GENERAL_2, abs=1e-12)
    for what in ("rank", "corank", "tail"):
        assert main(["formulas", what, "--kind", "symmetric", "--p", "3", "--k", "1"]) == 0
        assert 0 < json.loads(capsys.readouterr().out)["value"] < 1
    assert main(["formulas", "moment", "--kind", "alternating-even", "--G", '{"p": 2, "lambda": [1]}']) == 0
    assert json.loads(capsys.readouterr().out)["value"] == 2


def test_cli_verify(tmp_path, capsys):
    assert main(["verify", "constants", "sine_sum"]) == 0
    assert json.loads(capsys.readouterr().out)["all_pass"]
    bad = _write(tmp_path, {"inject": {"aut_order": {"2:1,1": 7}}, "checks": ["aut_order"]})
    assert main(["verify", "--config", bad]) == 1
    assert json.loads(capsys.readouterr().out)["failed_checks"] == ["aut_order"]
    assert main(["verify", "no_such_check"]) == 2


def test_cli_bad_config(tmp_path, capsys):
    assert main(["cok-dist", "--config", _write(tmp_path, {"p": 6}), "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err
