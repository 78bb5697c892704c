"""End-to-end runs of the command-line interface."""

import json

import pytest

from wedgekit import cli
from wedgekit.dataset import synthesize, write_json


@pytest.fixture(scope="module")
def data_json(tmp_path_factory):
    d = synthesize(classes=4, per_class=5, wedge_range=(1, 3), seed=9)
    path = tmp_path_factory.mktemp("data") / "synth.json"
    write_json(d, path)
    return path


def run_ok(argv, capsys):
    rc = cli.run(argv)
    captured = capsys.readouterr()
    assert rc == 0, captured.err
    return captured.out


class TestParsing:
    def test_help_exits_zero(self, capsys):
        assert cli.run(["--help"]) == 0
        assert "SUBCOMMAND" in capsys.readouterr().out

    def test_version_exits_zero(self, capsys):
        assert cli.run(["--version"]) == 0
        assert capsys.readouterr().out.startswith("wedgekit ")

    def test_missing_subcommand_is_usage_error(self, capsys):
        assert cli.run([]) == 2

    def test_unknown_flag_is_usage_error(self, capsys):
        assert cli.run(["stats", "--frobnicate"]) == 2


class TestRunRecords:
    def test_config_and_manifest_written(self, data_json, tmp_path, capsys):
        out = tmp_path / "run"
        run_ok(["stats", "--data", str(data_json), "--out", str(out)], capsys)
        config = json.load((out / "config.json").open())
        assert config["subcommand"] == "stats"
        assert config["data"] == str(data_json)
        manifest = json.load((out / "manifest.json").open())
        assert manifest["package"]["name"] == "wedgekit"
        assert set(manifest["dependencies"]) == {"numpy", "scipy", "numba"}
        assert data_json.name in manifest["inputs"]["files"]
        assert "stats.csv" in manifest["outputs"]
        assert "summary.json" in manifest["outputs"]
        assert "manifest.json" not in manifest["outputs"]

    def test_env_var_supplies_default_dataset(self, data_json, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("WEDGEKIT_DATA", str(data_json))
        out = tmp_path / "run"
        text = run_ok(["stats", "--out", str(out)], capsys)
        assert "20 graphs" in text

    def test_builtin_corpus_is_the_fallback(self, tmp_path, capsys, monkeypatch):
        monkeypatch.delenv("WEDGEKIT_DATA", raising=False)
        out = tmp_path / "run"
        run_ok(["stats", "--out", str(out)], capsys)
        summary = json.load((out / "summary.json").open())
        assert summary["total_graphs"] == 267
        assert summary["total_vertices"] == 5680
        assert summary["total_edges"] == 23922
        manifest = json.load((out / "manifest.json").open())
        assert "builtin" in manifest["inputs"]


class TestSubcommands:
    def test_ingest_round_trip_layout(self, data_json, tmp_path, capsys):
        out = tmp_path / "run"
        text = run_ok(
            ["ingest", "--data", str(data_json), "--out", str(out),
             "--format", "tu", "--dataset-name", "synth"],
            capsys,
        )
        assert "ingested 20 graphs, 4 classes" in text
        assert (out / "synth_graph_labels.txt").exists()

    def test_dist_writes_matrix(self, data_json, tmp_path, capsys):
        out = tmp_path / "run"
        run_ok(
            ["dist", "--data", str(data_json), "--out", str(out), "--method", "apx1"],
            capsys,
        )
        assert (out / "dist_apx1.csv").exists()
        payload = json.load((out / "dist_apx1.json").open())
        assert payload["method"] == "APX1"

    def test_rank_reports_aucs(self, data_json, tmp_path, capsys):
        out = tmp_path / "run"
        text = run_ok(
            ["rank", "--data", str(data_json), "--out", str(out), "--method", "apx2"],
            capsys,
        )
        assert "references" in text
        summary = json.load((out / "summary.json").open())
        assert len(summary["aucs"]) == 4
        assert all(0.0 <= a <= 1.0 for a in summary["aucs"].values())

    def test_rank_accepts_explicit_references(self, data_json, tmp_path, capsys):
        out = tmp_path / "run"
        run_ok(
            ["rank", "--data", str(data_json), "--out", str(out),
             "--method", "apx1", "--reference-ids", "0,5"],
            capsys,
        )
        assert len(json.load((out / "summary.json").open())["aucs"]) == 2

    def test_knn_cross_validation(self, data_json, tmp_path, capsys):
        out = tmp_path / "run"
        text = run_ok(
            ["knn", "--data", str(data_json), "--out", str(out),
             "--method", "apx2", "--folds", "4", "--seed", "3"],
            capsys,
        )
        assert "4-fold 3-NN" in text
        summary = json.load((out / "summary.json").open())
        assert summary["seed"] == 3
        assert len(summary["fold_accuracies"]) == 4

    def test_bench_fits_scaling_line(self, data_json, tmp_path, capsys):
        out = tmp_path / "run"
        run_ok(
            ["bench", "--data", str(data_json), "--out", str(out),
             "--fractions", "50,100", "--repeats", "2"],
            capsys,
        )
        summary = json.load((out / "summary.json").open())
        assert set(summary["linear_r2"]) == {"APX1", "APX2"}
        assert (out / "bench.csv").exists()


class TestTrainPredict:
    def train_args(self, data_json, out):
        return [
            "train", "--data", str(data_json), "--out", str(out),
            "--epochs", "3", "--augment", "--seed", "1",
        ]

    def test_train_rerun_is_byte_identical(self, data_json, tmp_path, capsys):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        run_ok(self.train_args(data_json, out_a), capsys)
        run_ok(self.train_args(data_json, out_b), capsys)
        assert (out_a / "checkpoint.bin").read_bytes() == (out_b / "checkpoint.bin").read_bytes()
        assert (out_a / "trace.csv").read_text() == (out_b / "trace.csv").read_text()

    def test_predict_from_checkpoint(self, data_json, tmp_path, capsys):
        train_out, pred_out = tmp_path / "t", tmp_path / "p"
        run_ok(self.train_args(data_json, train_out), capsys)
        text = run_ok(
            ["predict", "--data", str(data_json), "--out", str(pred_out),
             "--checkpoint", str(train_out / "checkpoint.bin")],
            capsys,
        )
        assert "predicted 20 graphs" in text
        summary = json.load((pred_out / "summary.json").open())
        assert 0.0 <= summary["accuracy"] <= 100.0

    def test_class_count_mismatch_fails(self, data_json, tmp_path, capsys):
        train_out = tmp_path / "t"
        run_ok(self.train_args(data_json, train_out), capsys)
        rc = cli.run(
            ["predict", "--out", str(tmp_path / "p"),
             "--checkpoint", str(train_out / "checkpoint.bin")],
        )
        assert rc == 1
        err = capsys.readouterr().err
        assert err.startswith("error: ValueError:")


class TestErrorMapping:
    def test_size_bound_exceeded_names_the_pair(self, data_json, tmp_path, capsys):
        rc = cli.run(
            ["knn", "--data", str(data_json), "--out", str(tmp_path / "r"),
             "--method", "exact", "--max-wedges", "2", "--folds", "4"],
        )
        assert rc == 1
        err = capsys.readouterr().err.strip()
        assert err.count("\n") == 0  # single machine-parsable line
        assert err.startswith("error: SizeBoundExceeded:")
        assert "graphs" in err

    def test_bad_fraction_is_usage_error(self, data_json, tmp_path, capsys):
        rc = cli.run(
            ["bench", "--data", str(data_json), "--out", str(tmp_path / "r"),
             "--fractions", "150"],
        )
        assert rc == 2
        assert capsys.readouterr().err.startswith("error: UsageError:")

    def test_bad_reference_ids_are_usage_error(self, data_json, tmp_path, capsys):
        rc = cli.run(
            ["rank", "--data", str(data_json), "--out", str(tmp_path / "r"),
             "--reference-ids", "zero,one"],
        )
        assert rc == 2

    def test_missing_data_path_fails_cleanly(self, tmp_path, capsys):
        rc = cli.run(["stats", "--data", str(tmp_path / "nope.json"),
                      "--out", str(tmp_path / "r")])
        assert rc == 1
