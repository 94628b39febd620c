import csv
import json
import math
from pathlib import Path

import pytest

from domstab.cli import main
from domstab.ingest import filter_low_reads, parse_table, split_subjects
from domstab.metrics import community_dominance
from domstab.report import (
    RunConfig,
    cmd_compare_indices,
    cmd_fit_select,
    cmd_metrics,
    cmd_simulate,
    report_all,
)
from domstab.svgplot import Curve, curve_chart

SMALL = """species_id,400_010106,400_010506,400_010806,400_011206,401_010106,401_010506
OTU1,40,40,35,28,12,15
OTU2,12,8,11,20,30,28
OTU3,0,4,2,1,0,0
OTU4,25,22,20,18,0,11
"""


@pytest.fixture()
def small_input(tmp_path: Path) -> Path:
    path = tmp_path / "counts.csv"
    path.write_text(SMALL)
    return path


def read_rows(path: Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_metrics_tables_match_direct_computation(small_input, tmp_path):
    config = RunConfig(input_path=small_input, out_dir=tmp_path / "out")
    paths = {p.name: p for p in cmd_metrics(config)}
    assert set(paths) == {"metrics_400.csv", "metrics_401.csv"}

    (series,) = [
        filter_low_reads(s, 10)
        for s in split_subjects(parse_table(SMALL))
        if s.subject_id == "400"
    ]
    rows = read_rows(paths["metrics_400.csv"])
    assert [r["sample_id"] for r in rows] == list(series.sample_ids)
    for t, row in enumerate(rows):
        expected = community_dominance(series.sample_vector(t))
        assert float(row["community_dominance"]) == expected  # repr round-trip


def test_metrics_sentinel_column_names_replaced_species(small_input, tmp_path):
    config = RunConfig(input_path=small_input, out_dir=tmp_path / "out")
    paths = {p.name: p for p in cmd_metrics(config)}
    rows = read_rows(paths["metrics_401.csv"])
    # OTU4 is absent from 401's first sample: distance stays inf, dominance
    # takes the subject-wide floor, and the row records the replacement
    assert rows[0]["distance_OTU4"] == "inf"
    assert rows[0]["sentinel_replaced"] == "OTU4"
    floor = float(rows[0]["dominance_OTU4"])
    finite = [
        float(r[k])
        for r in rows
        for k in r
        if k.startswith("dominance_") and r[k] not in ("inf", "-inf")
    ]
    assert floor == min(finite)
    assert rows[1]["sentinel_replaced"] == ""


def test_compare_indices_layout(small_input, tmp_path):
    config = RunConfig(input_path=small_input, out_dir=tmp_path / "out")
    rows = read_rows(cmd_compare_indices(config))
    by_subject: dict[str, list[dict[str, str]]] = {}
    for row in rows:
        by_subject.setdefault(row["subject"], []).append(row)
    assert set(by_subject) == {"400", "401", "mean"}
    assert [r["index"] for r in by_subject["400"]] == [
        "simpson", "shannon", "shannon-evenness", "berger-parker", "simpson-evenness"
    ]
    # subject 401 has two samples: regression needs three
    assert all(r["note"] == "too-few-samples" for r in by_subject["401"])
    assert all(r["slope"] == "" for r in by_subject["401"])
    assert all(r["note"] == "cross-subject mean" for r in by_subject["mean"])
    # the simpson regression on one subject is exactly linear
    simpson = by_subject["400"][0]
    assert abs(float(simpson["correlation"])) > 0.999


def test_fit_tables_have_validity_columns(small_input, tmp_path):
    config = RunConfig(input_path=small_input, out_dir=tmp_path / "out")
    paths = {p.name: p for p in cmd_fit_select(config)}
    assert {
        "fit_linear.csv",
        "fit_logistic.csv",
        "fit_logistic_sine.csv",
        "fit_linear_quadratic.csv",
        "fit_quadratic_quadratic.csv",
        "selection_summary.csv",
        "resilience.csv",
        "run_config.json",
    } <= set(paths)
    rows = read_rows(paths["fit_linear.csv"])
    assert [r["subject"] for r in rows] == ["400", "401"]
    assert {"a", "b", "se_a", "se_b", "r2", "pearson_r", "converged", "valid"} <= set(rows[0])
    # subject 401 has a single stability point: every fit reports the failure
    assert rows[1]["error"] != ""
    assert rows[1]["a"] == ""


def test_piecewise_tables_report_insufficient_support(small_input, tmp_path):
    config = RunConfig(input_path=small_input, out_dir=tmp_path / "out")
    paths = {p.name: p for p in cmd_fit_select(config)}
    rows = read_rows(paths["fit_linear_quadratic.csv"])
    # three stability points cannot host a breakpoint grid
    assert all(row["error"] != "" for row in rows)
    assert {"b1", "c1", "c2"} <= set(rows[0])


def test_selection_summary_error_rows(small_input, tmp_path):
    config = RunConfig(input_path=small_input, out_dir=tmp_path / "out")
    paths = {p.name: p for p in cmd_fit_select(config)}
    rows = {r["subject"]: r for r in read_rows(paths["selection_summary.csv"])}
    assert set(rows) == {"400", "401"}
    assert rows["401"]["model"] == ""
    assert rows["401"]["error"] != ""


def test_resilience_rows_cover_all_subjects(small_input, tmp_path):
    config = RunConfig(input_path=small_input, out_dir=tmp_path / "out")
    paths = {p.name: p for p in cmd_fit_select(config)}
    rows = {r["subject"]: r for r in read_rows(paths["resilience.csv"])}
    slope = float(rows["400"]["slope"])
    assert float(rows["400"]["magnitude"]) == abs(slope)
    assert rows["401"]["error"] != ""


def test_run_manifest_is_sorted_json(small_input, tmp_path):
    config = RunConfig(input_path=small_input, out_dir=tmp_path / "out", seed=7)
    paths = {p.name: p for p in cmd_fit_select(config)}
    manifest = json.loads(paths["run_config.json"].read_text())
    assert manifest["seed"] == 7
    assert manifest["min_total_reads"] == 10
    assert manifest["models"][0] == "linear"
    assert list(manifest) == sorted(manifest)


def test_no_temp_files_left_behind(small_input, tmp_path):
    out = tmp_path / "out"
    report_all(RunConfig(input_path=small_input, out_dir=out))
    leftovers = [p for p in out.iterdir() if p.suffix not in (".csv", ".json", ".svg")]
    assert leftovers == []


def test_simulate_without_selection_writes_reason(small_input, tmp_path):
    config = RunConfig(input_path=small_input, out_dir=tmp_path / "out")
    paths = cmd_simulate(config, "401")
    (trajectory,) = paths
    rows = read_rows(trajectory)
    assert len(rows) == 1
    assert rows[0]["status"] != ""


def test_simulate_unknown_subject_raises_key_error(small_input, tmp_path):
    config = RunConfig(input_path=small_input, out_dir=tmp_path / "out")
    with pytest.raises(KeyError):
        cmd_simulate(config, "999")


def test_simulate_trajectory_and_fixed_points(tmp_path, cohort_path):
    config = RunConfig(input_path=cohort_path, out_dir=tmp_path / "out")
    paths = {p.name: p for p in cmd_simulate(config, "103", start=30.0, steps=80)}
    rows = read_rows(paths["simulate_103_trajectory.csv"])
    assert rows[0]["step"] == "0"
    assert float(rows[0]["dominance"]) == 30.0
    assert rows[-1]["status"] != ""
    assert all(r["status"] == "" for r in rows[:-1])
    fp_rows = read_rows(paths["simulate_103_fixed_points.csv"])
    for row in fp_rows:
        assert row["verdict"] in ("stable", "unstable", "marginal")


def test_svg_chart_structure():
    svg = curve_chart(
        "subject <400>",
        [Curve("fit & data", [1.0, 2.0, 3.0], [0.1, math.nan, 0.3])],
        points=[(1.0, 0.15), (2.0, 0.2)],
    )
    assert svg.startswith("<svg")
    assert svg.count("<circle") == 2
    assert "subject &lt;400&gt;" in svg
    assert "fit &amp; data" in svg
    # the nan splits the polyline into two pen-down segments
    assert svg.count("M ") == 2


def test_report_all_with_plots_writes_svg(small_input, tmp_path):
    out = tmp_path / "out"
    paths = report_all(RunConfig(input_path=small_input, out_dir=out, plot=True))
    names = {p.name for p in paths}
    assert "response_400.svg" in names
    svg = (out / "response_400.svg").read_text()
    assert "<svg" in svg and "</svg>" in svg


# ------------------------------------------------------------------- CLI


def test_cli_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as exit_info:
        main(["--help"])
    assert exit_info.value.code == 0
    assert "report-all" in capsys.readouterr().out


def test_cli_metrics_success(small_input, tmp_path, capsys):
    code = main(["metrics", "--input", str(small_input), "--out", str(tmp_path / "out")])
    assert code == 0
    out = capsys.readouterr().out
    assert "metrics_400.csv" in out
    assert (tmp_path / "out" / "metrics_400.csv").exists()


def test_cli_missing_input_is_input_error(tmp_path, capsys):
    code = main(["metrics", "--input", str(tmp_path / "absent.csv"), "--out", str(tmp_path)])
    assert code == 1
    assert "input error" in capsys.readouterr().err


def test_cli_ragged_table_is_input_error(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("species_id,400_a\nOTU1,1,2\n")
    code = main(["metrics", "--input", str(bad), "--out", str(tmp_path / "out")])
    assert code == 1


def test_cli_unknown_model_is_input_error(small_input, tmp_path, capsys):
    code = main([
        "fit", "--input", str(small_input), "--out", str(tmp_path / "out"),
        "--models", "cubic",
    ])
    assert code == 1
    assert "unknown model kind" in capsys.readouterr().err


def test_cli_unknown_subject_is_input_error(small_input, tmp_path, capsys):
    code = main([
        "simulate", "--input", str(small_input), "--out", str(tmp_path / "out"),
        "--subject", "999",
    ])
    assert code == 1


def test_cli_zero_sample_is_analysis_error(tmp_path, capsys):
    text = "species_id,700_a,700_b,700_c\nOTU1,5,0,6\nOTU2,3,0,2\n"
    src = tmp_path / "zero.csv"
    src.write_text(text)
    code = main(["metrics", "--input", str(src), "--out", str(tmp_path / "out")])
    assert code == 2
    assert "analysis error" in capsys.readouterr().err


def test_cli_custom_id_rule(tmp_path, capsys):
    text = "species_id,400-a,400-b\nOTU1,5,6\nOTU2,12,9\n"
    src = tmp_path / "dash.csv"
    src.write_text(text)
    code = main([
        "metrics", "--input", str(src), "--out", str(tmp_path / "out"),
        "--id-rule", "-",
    ])
    assert code == 0
    assert (tmp_path / "out" / "metrics_400.csv").exists()


def test_cli_select_models_subset(small_input, tmp_path):
    code = main([
        "fit", "--input", str(small_input), "--out", str(tmp_path / "out"),
        "--models", "linear",
    ])
    assert code == 0
    out_names = {p.name for p in (tmp_path / "out").iterdir()}
    assert "fit_linear.csv" in out_names
    assert "fit_logistic.csv" not in out_names
