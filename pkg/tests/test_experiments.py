import os
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from config.config import AGGREGATE_FILENAME, CONFIGS_DIR, PARETO_FILENAME, RUNS_FILENAME
from config.loader import load_sweep_config
from data.dataset import split_dataset
from data.streams import Strategy, expected_side_examples
from data.synthetic import SynthConfig
from experiments.bench import BenchConfig, run_scaling_bench, throughput_ratio
from experiments.sweep import (
    DataSource,
    SweepCell,
    SweepConfig,
    SweepReport,
    aggregate_runs,
    ci_half_width,
    emit_report,
    run_cell,
    run_seed,
    run_sweep,
    sweep_cells,
)
from regularizers.mmd import KernelConfig
import storage.report_storage as report_storage
from storage.report_storage import ReportStorage
from training.train_config import TrainConfig
from utils.exceptions import ConfigurationException, ReportStorageException

DIM = 32


def _source() -> DataSource:
    return DataSource(
        synthetic=SynthConfig(
            num_tasks=2,
            num_groups=2,
            n=300,
            dim=DIM,
            group_prevalence=0.3,
            positive_rate=0.15,
            bias=[[0.5, 0.0], [0.5, 0.0]],
            neutral_tokens=4,
            neutral_vocab=30,
        )
    )


def _sweep(tmp_path, strategies, lambdas, runs: int, **overrides) -> SweepConfig:
    settings = dict(
        source=_source(),
        strategies=strategies,
        lambdas=lambdas,
        runs_per_point=runs,
        output_dir=tmp_path / "out",
        training=TrainConfig(dim=DIM, hidden=4, epochs=1, main_batch=32, side_batch=4, kernel=KernelConfig(1.0)),
    )
    settings.update(overrides)
    return SweepConfig(**settings)


def _read(path) -> pd.DataFrame:
    return pd.read_csv(path)


def test_run_seed_is_stable() -> None:
    seed = run_seed(0, Strategy.INTERLEAVED, 0.3, 2)
    assert seed == run_seed(0, "interleaved", 0.3, 2)
    assert run_seed(100, Strategy.INTERLEAVED, 0.3, 2) == seed + 100
    assert 0 <= seed < 2 ** 31
    assert seed != run_seed(0, Strategy.INTERLEAVED, 0.3, 3)
    assert seed != run_seed(0, Strategy.BASELINE, 0.3, 2)


def test_sweep_cells_enumerate_the_grid(tmp_path) -> None:
    cfg = _sweep(tmp_path, (Strategy.NONE, Strategy.DIRECT), (0.0, 1.0, 3.0), runs=2)
    cells = sweep_cells(cfg)
    assert len(cells) == 2 * 3 * 2
    assert len({c.seed for c in cells}) == len(cells)


def test_single_point_sweep_writes_two_runs_and_one_aggregate(tmp_path) -> None:
    cfg = _sweep(tmp_path, (Strategy.NONE,), (0.0,), runs=2)
    report = run_sweep(cfg)
    assert len(report.rows) == 2
    runs = _read(cfg.output_dir / RUNS_FILENAME)
    aggregate = _read(cfg.output_dir / AGGREGATE_FILENAME)
    assert len(runs) == 2
    assert (runs["status"] == "ok").all()
    assert len(aggregate) == 1
    assert aggregate.loc[0, "n_runs"] == 2
    assert "system_roc_auc_ci95" in aggregate.columns
    assert "group_0" in (cfg.output_dir / PARETO_FILENAME).read_text(encoding="utf-8")


def test_lambda_sweep_row_counts(tmp_path) -> None:
    cfg = _sweep(tmp_path, (Strategy.INTERLEAVED,), (0.0, 1.0), runs=5)
    run_sweep(cfg)
    assert len(_read(cfg.output_dir / RUNS_FILENAME)) == 10
    aggregate = _read(cfg.output_dir / AGGREGATE_FILENAME)
    assert aggregate["lam"].tolist() == [0.0, 1.0]
    assert aggregate["n_runs"].tolist() == [5, 5]


def test_sweep_is_deterministic_apart_from_timing(tmp_path) -> None:
    strategies = (Strategy.BASELINE, Strategy.DIRECT)
    first = run_sweep(_sweep(tmp_path, strategies, (1.0,), runs=2), write=False).runs_frame()
    second = run_sweep(_sweep(tmp_path, strategies, (1.0,), runs=2), write=False).runs_frame()
    pd.testing.assert_frame_equal(
        first.drop(columns=["steps_per_sec"]),
        second.drop(columns=["steps_per_sec"]),
    )


def test_direct_strategy_reports_overall_head(tmp_path) -> None:
    report = run_sweep(_sweep(tmp_path, (Strategy.DIRECT,), (1.0,), runs=1), write=False)
    row = report.rows[0]
    assert row["status"] == "ok"
    assert "overall_aucpr" in row
    assert "task_0__group_0_d_eo" not in row


def test_empty_report_writes_headers_only(tmp_path) -> None:
    report = SweepReport(rows=[], task_names=["t0"], group_names=["g0"])
    emit_report(report, tmp_path)
    runs = _read(tmp_path / RUNS_FILENAME)
    aggregate = _read(tmp_path / AGGREGATE_FILENAME)
    assert runs.empty and "g0_d_eo" in runs.columns
    assert aggregate.empty and "g0_d_eo_mean" in aggregate.columns
    assert "(no successful runs)" in (tmp_path / PARETO_FILENAME).read_text(encoding="utf-8")


def test_ci_half_width_uses_student_t() -> None:
    values = [1.0, 2.0, 3.0, 4.0, 5.0]
    expected = 2.776 * np.std(values, ddof=1) / np.sqrt(5)
    assert ci_half_width(values) == pytest.approx(expected, rel=1e-3)
    assert ci_half_width([0.7]) is None


def test_aggregate_uses_successful_runs_only() -> None:
    rows = [
        {"strategy": "none", "lam": 0.0, "run_index": i, "seed": i, "status": "ok", "reason": "",
         "system_roc_auc": v, "g_d_eo": None}
        for i, v in enumerate([0.8, 0.82, 0.84, 0.86, 0.88])
    ]
    rows.append({"strategy": "none", "lam": 0.0, "run_index": 5, "seed": 5, "status": "failed",
                 "reason": "TrainingDivergedException: nan", "system_roc_auc": None, "g_d_eo": None})
    aggregate = aggregate_runs(pd.DataFrame(rows))
    assert len(aggregate) == 1
    row = aggregate.iloc[0]
    assert row["n_runs"] == 5
    assert row["system_roc_auc_mean"] == pytest.approx(0.84)
    assert row["system_roc_auc_ci95"] == pytest.approx(2.776 * np.std([0.8, 0.82, 0.84, 0.86, 0.88], ddof=1) / np.sqrt(5), rel=1e-3)
    assert pd.isna(row["g_d_eo_mean"])


def test_failed_cell_carries_a_reason() -> None:
    source = _source()
    splits = tuple(split_dataset(source.load(0), (0.7, 0.1, 0.2), seed=0))
    cell = SweepCell(Strategy.NONE, 0.0, 0, 1)
    row = run_cell(cell, splits, TrainConfig(dim=DIM * 2, hidden=4, epochs=1), 0.05)
    assert row["status"] == "failed"
    assert row["reason"].startswith("ConfigurationException")


def test_sweep_config_validation(tmp_path) -> None:
    with pytest.raises(ConfigurationException):
        _sweep(tmp_path, (Strategy.NONE,), (-1.0,), runs=1)
    with pytest.raises(ConfigurationException):
        _sweep(tmp_path, (Strategy.NONE,), (0.0,), runs=1, splits=(0.8, 0.2))
    with pytest.raises(ConfigurationException):
        _sweep(tmp_path, (Strategy.NONE,), (0.0,), runs=1, training=TrainConfig(dim=DIM + 1))
    with pytest.raises(ConfigurationException):
        DataSource()


def test_unwritable_output_leaves_no_files(tmp_path) -> None:
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory", encoding="utf-8")
    report = SweepReport(rows=[], task_names=["t0"], group_names=["g0"])
    with pytest.raises(ReportStorageException):
        emit_report(report, blocker / "out")

    storage = ReportStorage(tmp_path / "partial")

    def broken(path) -> None:
        raise OSError("disk full")

    with pytest.raises(ReportStorageException):
        storage.write_atomic({RUNS_FILENAME: storage.text_writer("a,b\n"), PARETO_FILENAME: broken})
    assert list((tmp_path / "partial").iterdir()) == []


def test_bench_side_sizes_are_exact() -> None:
    budget = BenchConfig(
        steps=12,
        timing_runs=1,
        n=300,
        dim=DIM,
        hidden=4,
        main_batch=32,
        side_batch=4,
        synthetic={"group_prevalence": 0.3, "positive_rate": 0.1, "neutral_tokens": 4},
    )
    strategies = (Strategy.NONE, Strategy.BASELINE, Strategy.OVERCONDITIONED, Strategy.INTERLEAVED)
    table = run_scaling_bench((2, 3), (2, 3), strategies, budget)
    assert len(table) == 2 * 2 * 4
    assert (table["side_examples"] == table["expected_side_examples"]).all()
    row = table[(table["num_tasks"] == 3) & (table["num_groups"] == 2) & (table["strategy"] == "baseline")]
    assert row["side_examples"].item() == 2 * 4 * 3 * 2
    assert (table["steps_per_sec"] > 0).all()
    # 300 examples in batches of 32 give 10 steps per epoch, so 12 steps round up to 2 epochs
    assert (table["total_steps"] == 20).all()


def test_bench_config_validation() -> None:
    with pytest.raises(ConfigurationException):
        BenchConfig(steps=5)
    with pytest.raises(ConfigurationException):
        BenchConfig(lam=0.0)


@pytest.mark.slow
def test_interleaving_is_fastest_remediation() -> None:
    strategies = (Strategy.NONE, Strategy.BASELINE, Strategy.OVERCONDITIONED, Strategy.INTERLEAVED)
    table = run_scaling_bench((3,), (4,), strategies, BenchConfig(side_batch=16))
    assert expected_side_examples(Strategy.BASELINE, 3, 4, 16) == 384
    assert throughput_ratio(table, 3, 4, Strategy.INTERLEAVED, Strategy.OVERCONDITIONED) > 1.0
    assert throughput_ratio(table, 3, 4, Strategy.OVERCONDITIONED, Strategy.BASELINE) > 1.0
    assert throughput_ratio(table, 3, 4, Strategy.INTERLEAVED, Strategy.NONE) > 0.7


@pytest.mark.slow
def test_remediation_closes_the_fpr_gap_on_synthetic_bias(tmp_path) -> None:
    cfg = load_sweep_config(CONFIGS_DIR / "synthetic_sweep.yaml", out=tmp_path)
    lambdas = (0.0, max(cfg.lambdas))
    cfg = replace(cfg, strategies=(Strategy.INTERLEAVED,), lambdas=lambdas, runs_per_point=3)
    runs = run_sweep(cfg).runs_frame()
    medians = runs[runs["status"] == "ok"].groupby("lam").median(numeric_only=True)

    before, after = medians.loc[lambdas[0]], medians.loc[lambdas[1]]
    for group in ("group_a", "group_c"):
        assert before[f"{group}_r_eo"] > 1.5
        assert after[f"{group}_d_eo"] <= 0.6 * before[f"{group}_d_eo"]
    assert before["system_roc_auc"] - after["system_roc_auc"] < 0.05


def test_failed_rename_restores_previous_reports(tmp_path, monkeypatch) -> None:
    storage = ReportStorage(tmp_path / "reports")
    originals = {RUNS_FILENAME: "run v1\n", AGGREGATE_FILENAME: "aggregate v1\n", PARETO_FILENAME: "pareto v1\n"}
    storage.write_atomic({name: storage.text_writer(text) for name, text in originals.items()})

    real_replace = os.replace
    failed = []

    def flaky_replace(src, dst) -> None:
        if Path(dst).name == PARETO_FILENAME and not failed:
            failed.append(dst)
            raise OSError("device busy")
        real_replace(src, dst)

    monkeypatch.setattr(report_storage.os, "replace", flaky_replace)
    updated = {name: storage.text_writer(text.replace("v1", "v2")) for name, text in originals.items()}
    with pytest.raises(ReportStorageException):
        storage.write_atomic(updated)

    assert failed
    assert sorted(p.name for p in storage.base_dir.iterdir()) == sorted(originals)
    for name, text in originals.items():
        assert storage.get_path(name).read_text(encoding="utf-8") == text


def test_aggregates_recompute_from_runs_csv(tmp_path) -> None:
    cfg = _sweep(tmp_path, (Strategy.NONE, Strategy.INTERLEAVED), (0.0, 1.0), runs=2)
    run_sweep(cfg)
    storage = ReportStorage(cfg.output_dir)
    runs = storage.load_csv(RUNS_FILENAME, required_columns=["strategy", "lam", "status"])
    written = storage.load_csv(AGGREGATE_FILENAME)

    recomputed = aggregate_runs(runs)
    assert list(recomputed.columns) == list(written.columns)
    numeric = [c for c in written.columns if c != "strategy"]
    recomputed[numeric] = recomputed[numeric].apply(pd.to_numeric)
    written[numeric] = written[numeric].apply(pd.to_numeric)
    pd.testing.assert_frame_equal(recomputed, written, check_dtype=False, rtol=1e-9)
    assert storage.load_csv("missing.csv") is None
