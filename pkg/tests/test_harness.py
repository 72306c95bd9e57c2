import json
from pathlib import Path

import numpy as np
import pytest

from regroupbench.harness import (
    ExperimentConfig,
    HarnessError,
    MethodKind,
    aggregate,
    config_hash,
    load_config,
    load_source,
    run_experiment,
    run_grid,
    write_results,
)
from regroupbench.trainer import TrainConfig

FAST = TrainConfig(epochs=5, batch_size=64)


def tiny_cfg(methods, seeds=(0,), dataset=None, **kwargs):
    return ExperimentConfig(
        dataset=dataset or {"builtin": "rg-favorable"},
        methods=tuple(MethodKind(m) if isinstance(m, str) else m for m in methods),
        seeds=seeds,
        train=FAST,
        hidden_dims=(),
        **kwargs,
    )


def strip_timing(csv_text):
    out = []
    for line in csv_text.strip().splitlines():
        cells = line.split(",")
        del cells[-2]  # wall_time_s
        out.append(",".join(cells))
    return "\n".join(out)


class TestRunExperiment:
    def test_rg_with_k1_matches_plain_ce(self):
        cfg = tiny_cfg(["CE"])
        ce = run_experiment(cfg, MethodKind("CE"), 0)
        rg = run_experiment(cfg, MethodKind("RG+CE", k_override=1), 0)
        assert rg.accuracy == ce.accuracy
        assert rg.balanced_accuracy == ce.balanced_accuracy
        assert rg.ap_per_class == ce.ap_per_class
        assert rg.macro_ap == ce.macro_ap

    def test_ros_train_size_logged(self):
        cfg = tiny_cfg(["ROS+CE"])
        row = run_experiment(cfg, MethodKind("ROS+CE"), 0)
        # train split is (80, 720); ROS brings class 0 up to 720
        assert row.train_size == 1440

    def test_rg_records_k(self):
        cfg = tiny_cfg(["RG+CE"])
        row = run_experiment(cfg, MethodKind("RG+CE"), 0)
        assert row.k_groups == 9  # 720 / 80

    def test_determinism(self):
        cfg = tiny_cfg(["RG+CE"])
        a = run_experiment(cfg, MethodKind("RG+CE"), 3)
        b = run_experiment(cfg, MethodKind("RG+CE"), 3)
        assert a.ap_per_class == b.ap_per_class
        assert a.accuracy == b.accuracy

    def test_config_hash_recorded(self):
        cfg = tiny_cfg(["CE"])
        row = run_experiment(cfg, MethodKind("CE"), 0)
        assert row.config_hash == config_hash(cfg)

    @pytest.mark.parametrize("name", ["WCE", "Focal", "LDAM", "RUS+CE", "SMOTE+CE"])
    def test_all_methods_run(self, name):
        cfg = tiny_cfg([name])
        row = run_experiment(cfg, MethodKind(name), 0)
        assert row.error == ""
        assert 0.0 <= row.macro_ap <= 1.0


class TestRunGrid:
    def test_cardinality_and_aggregates(self):
        cfg = tiny_cfg(["CE", "RG+CE"], seeds=(0, 1, 2))
        rows, aggs = run_grid(cfg)
        assert len(rows) == 6
        assert [a.method for a in aggs] == ["CE", "RG+CE"]
        assert all(a.n_runs == 3 for a in aggs)

    def test_aggregate_mean_recomputation(self):
        cfg = tiny_cfg(["CE"], seeds=(0, 1, 2))
        rows, aggs = run_grid(cfg)
        vals = np.array([r.macro_ap for r in rows])
        assert aggs[0].mean_macro_ap == pytest.approx(vals.mean(), abs=1e-12)
        assert aggs[0].std_macro_ap == pytest.approx(vals.std(), abs=1e-12)

    def test_failed_cell_recorded_and_grid_continues(self):
        # minority train split has a single sample -> SMOTE has no neighbor
        dataset = {
            "mixture": {
                "minority": {"mean": [0.0, 0.0], "stddev": 1.0, "count": 2},
                "majority_components": [{"mean": [5.0, 0.0], "stddev": 1.0, "count": 40}],
                "seed": 0,
            }
        }
        cfg = tiny_cfg(["SMOTE+CE", "CE"], dataset=dataset, test_fraction=0.5)
        rows, aggs = run_grid(cfg)
        assert len(rows) == 2
        assert "single sample" in rows[0].error
        assert rows[1].error == ""
        assert [a.method for a in aggs] == ["CE"]

    def test_results_csv_deterministic_modulo_timing(self, tmp_path):
        cfg = tiny_cfg(["CE", "RG+CE"], seeds=(0, 1))
        texts = []
        for run in range(2):
            rows, aggs = run_grid(cfg)
            results, _ = write_results(rows, aggs, tmp_path / f"run{run}")
            texts.append(strip_timing(results.read_text()))
        assert texts[0] == texts[1]

    def test_summary_written(self, tmp_path):
        cfg = tiny_cfg(["CE"], seeds=(0,))
        rows, aggs = run_grid(cfg)
        _, summary = write_results(rows, aggs, tmp_path)
        text = summary.read_text()
        assert "CE" in text and "minority AP" in text


class TestConfigIO:
    def test_load_config_round_trip(self, tmp_path):
        doc = {
            "dataset": {"builtin": "overlap"},
            "methods": [{"name": "CE"}, {"name": "Focal", "gamma": 1.5}],
            "seeds": [0, 1],
            "test_fraction": 0.25,
            "standardize": False,
            "hidden_dims": [16],
            "train": {"epochs": 3, "batch_size": 32},
            "output_dir": "results",
        }
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps(doc))
        cfg = load_config(p)
        assert cfg.methods[1].gamma == 1.5
        assert cfg.test_fraction == 0.25
        assert not cfg.standardize
        assert cfg.train.epochs == 3

    def test_unknown_method_rejected(self):
        with pytest.raises(HarnessError):
            MethodKind("GAN")

    def test_bad_source_rejected(self):
        with pytest.raises(HarnessError):
            load_source({"parquet": "x"}, 0)

    def test_hash_sensitive_to_config(self):
        a = tiny_cfg(["CE"])
        b = tiny_cfg(["CE"], test_fraction=0.3)
        assert config_hash(a) != config_hash(b)

    def test_seed_offsets_synthetic_draw(self):
        a = load_source({"builtin": "rg-favorable"}, 0)
        b = load_source({"builtin": "rg-favorable"}, 1)
        assert not np.array_equal(a.features, b.features)


class TestCli:
    def test_run_and_synth_and_metrics(self, tmp_path, capsys):
        from regroupbench.cli import main

        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"builtin": "rg-favorable", "seed": 1}))
        out_csv = tmp_path / "synth.csv"
        assert main(["synth", "--spec", str(spec), "--out", str(out_csv)]) == 0
        assert out_csv.exists()

        cfg = {
            "dataset": {"csv": str(out_csv)},
            "methods": [{"name": "CE"}],
            "seeds": [0],
            "hidden_dims": [],
            "train": {"epochs": 3},
            "output_dir": str(tmp_path / "out"),
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        assert main(["run", "--config", str(cfg_path)]) == 0
        assert (tmp_path / "out" / "results.csv").exists()
        assert (tmp_path / "out" / "summary.txt").exists()

        pred = tmp_path / "pred.csv"
        pred.write_text("s0,s1,truth\n0.9,0.1,0\n0.2,0.8,1\n0.6,0.4,1\n")
        capsys.readouterr()
        assert main(["metrics", "--pred", str(pred), "--truth-col", "truth"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["accuracy"] == pytest.approx(2 / 3)

    def test_run_seed_override(self, tmp_path):
        from regroupbench.cli import main

        cfg = {
            "dataset": {"builtin": "rg-favorable"},
            "methods": [{"name": "CE"}],
            "seeds": [0, 1, 2],
            "hidden_dims": [],
            "train": {"epochs": 2},
            "output_dir": str(tmp_path / "o"),
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        assert main(["run", "--config", str(cfg_path), "--seeds", "5"]) == 0
        lines = (tmp_path / "o" / "results.csv").read_text().strip().splitlines()
        assert len(lines) == 2  # header + one row
        assert lines[1].split(",")[1] == "5"
