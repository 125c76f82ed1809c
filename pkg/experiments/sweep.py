"""
Lambda-sweep experiment harness
Trains every (strategy, lambda, run) cell, calibrates on validation, evaluates
on test, and aggregates runs into means with Student-t 95% CIs
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import stats

from config.config import (
    AGGREGATE_FILENAME,
    AGGREGATE_KEYS,
    DEFAULT_BASE_SEED,
    DEFAULT_LAMBDA_GRID,
    DEFAULT_OUTPUT_DIR,
    DEFAULT_RUNS_PER_POINT,
    DEFAULT_SPLITS,
    DEFAULT_TARGET_FPR,
    PARETO_FILENAME,
    RUN_BASE_COLUMNS,
    RUNS_FILENAME,
)
from data.dataset import CsvSchema, Dataset, load_csv, split_dataset
from data.streams import Strategy
from data.synthetic import SynthConfig, synthesize
from metrics.composition import calibrate_thresholds
from metrics.evaluation import evaluate
from model.hashing import fnv1a_64
from storage.report_storage import ReportStorage
from training.train_config import TrainConfig
from training.trainer import train
from utils.exceptions import ConfigurationException
from utils.logger import setup_logger

logger = setup_logger(__name__)

STATUS_OK = "ok"
STATUS_FAILED = "failed"

# Per-run columns that are identifiers or bookkeeping, not aggregated metrics
NON_METRIC_COLUMNS = {"strategy", "lam", "run_index", "seed", "status", "reason", "total_steps", "n_eval"}


@dataclass
class DataSource:
    """Either a CSV file with its column schema or a synthetic generator config"""
    csv_path: Optional[Path] = None
    schema: Optional[CsvSchema] = None
    synthetic: Optional[SynthConfig] = None

    def __post_init__(self):
        if (self.csv_path is None) == (self.synthetic is None):
            raise ConfigurationException("Data source needs exactly one of a CSV path or a synthetic config")
        if self.csv_path is not None:
            self.csv_path = Path(self.csv_path)
            if self.schema is None:
                raise ConfigurationException("A CSV data source needs a column schema")

    @property
    def dim(self) -> int:
        return self.schema.dim if self.schema is not None else self.synthetic.dim

    def load(self, seed: int) -> Dataset:
        if self.csv_path is not None:
            return load_csv(self.csv_path, self.schema)
        return synthesize(self.synthetic, seed)

    def describe(self) -> str:
        if self.csv_path is not None:
            return f"csv {self.csv_path}"
        s = self.synthetic
        return f"synthetic (n={s.n}, T={s.num_tasks}, groups={s.num_groups})"


@dataclass
class SweepConfig:
    """
    One sweep

    training is the template every cell starts from; strategy, lam and seed
    are replaced per cell.
    """
    source: DataSource
    strategies: Tuple[Strategy, ...] = tuple(Strategy)
    lambdas: Tuple[float, ...] = tuple(DEFAULT_LAMBDA_GRID)
    runs_per_point: int = DEFAULT_RUNS_PER_POINT
    splits: Tuple[float, ...] = DEFAULT_SPLITS
    base_seed: int = DEFAULT_BASE_SEED
    output_dir: Path = DEFAULT_OUTPUT_DIR
    training: TrainConfig = field(default_factory=TrainConfig)
    target_fpr: float = DEFAULT_TARGET_FPR
    workers: int = 1

    def __post_init__(self):
        self.strategies = tuple(Strategy.parse(s) for s in self.strategies)
        self.lambdas = tuple(float(lam) for lam in self.lambdas)
        self.splits = tuple(float(f) for f in self.splits)
        self.output_dir = Path(self.output_dir)

        if not self.strategies:
            raise ConfigurationException("A sweep needs at least one strategy")
        if not self.lambdas or any(not lam >= 0 for lam in self.lambdas):
            raise ConfigurationException(f"Lambdas must be non-negative and non-empty: {self.lambdas}")
        if self.runs_per_point < 1:
            raise ConfigurationException(f"runs_per_point must be positive, got {self.runs_per_point}")
        if len(self.splits) != 3 or any(f <= 0 for f in self.splits) or not np.isclose(sum(self.splits), 1.0):
            raise ConfigurationException(
                f"Splits must be three positive train/validation/test fractions summing to 1: {self.splits}"
            )
        if not 0.0 <= self.target_fpr <= 1.0:
            raise ConfigurationException(f"target_fpr must be in [0, 1], got {self.target_fpr}")
        if self.workers < 1:
            raise ConfigurationException(f"workers must be positive, got {self.workers}")
        if self.training.dim != self.source.dim:
            raise ConfigurationException(
                f"Training dim {self.training.dim} does not match data dim {self.source.dim}"
            )
        if self.runs_per_point < 2:
            logger.warning("runs_per_point < 2: confidence intervals will not be emitted")


@dataclass(frozen=True)
class SweepCell:
    strategy: Strategy
    lam: float
    run_index: int
    seed: int


def run_seed(base_seed: int, strategy: Strategy, lam: float, run_index: int) -> int:
    """
    Seed of one sweep cell

    base_seed + FNV-1a 64 of "strategy|lam|run_index" modulo 2**31, with lam
    written as a Python float repr. Stable across processes and platforms.
    """
    key = f"{Strategy.parse(strategy).value}|{float(lam)!r}|{int(run_index)}"
    return int(base_seed) + fnv1a_64(key.encode("utf-8")) % (2 ** 31)


def sweep_cells(cfg: SweepConfig) -> List[SweepCell]:
    return [
        SweepCell(strategy, lam, run, run_seed(cfg.base_seed, strategy, lam, run))
        for strategy in cfg.strategies
        for lam in cfg.lambdas
        for run in range(cfg.runs_per_point)
    ]


def run_cell(
    cell: SweepCell,
    splits: Tuple[Dataset, Dataset, Dataset],
    template: TrainConfig,
    target_fpr: float,
) -> Dict[str, object]:
    """
    Train, calibrate and evaluate one cell

    Returns:
        Flat row; a failed cell carries status 'failed' and the reason
    """
    train_ds, val_ds, test_ds = splits
    row: Dict[str, object] = {
        "strategy": cell.strategy.value,
        "lam": cell.lam,
        "run_index": cell.run_index,
        "seed": cell.seed,
    }
    try:
        cfg = replace(template, strategy=cell.strategy, lam=cell.lam, seed=cell.seed)
        result = train(train_ds, cfg)
        thresholds = calibrate_thresholds(result.params, val_ds, target_fpr)
        report = evaluate(result.params, test_ds, thresholds)
    except Exception as e:
        logger.error(f"Cell {cell.strategy.value} lam={cell.lam} run={cell.run_index} failed: {str(e)}")
        row.update(status=STATUS_FAILED, reason=f"{type(e).__name__}: {e}")
        return row

    row.update(
        status=STATUS_OK,
        reason="",
        steps_per_sec=result.steps_per_sec,
        total_steps=result.total_steps,
    )
    row.update(report.to_record())
    return row


def metric_columns(task_names: Sequence[str], group_names: Sequence[str]) -> List[str]:
    """Every per-group and per-head column an EvalReport record can carry"""
    columns: List[str] = []
    for g in group_names:
        columns += [f"{g}_fpr_member", f"{g}_fpr_nonmember", f"{g}_d_eo", f"{g}_r_eo"]
    for head in [*task_names, "overall"]:
        columns += [f"{head}_aucpr", f"{head}_roc_auc"]
    columns += [f"{t}__{g}_d_eo" for t in task_names for g in group_names]
    return columns


@dataclass
class SweepReport:
    rows: List[Dict[str, object]] = field(default_factory=list)
    task_names: List[str] = field(default_factory=list)
    group_names: List[str] = field(default_factory=list)

    @property
    def columns(self) -> List[str]:
        return RUN_BASE_COLUMNS + metric_columns(self.task_names, self.group_names)

    @property
    def failures(self) -> List[Dict[str, object]]:
        return [row for row in self.rows if row.get("status") == STATUS_FAILED]

    @property
    def successes(self) -> List[Dict[str, object]]:
        return [row for row in self.rows if row.get("status") == STATUS_OK]

    def runs_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=self.columns)

    def aggregate(self) -> pd.DataFrame:
        return aggregate_runs(self.runs_frame())

    def pareto_summary(self) -> str:
        return pareto_summary(self.aggregate(), self.group_names)


def ci_half_width(values: Sequence[float]) -> Optional[float]:
    """t_{0.975, n-1} * s / sqrt(n); None below two values"""
    vals = np.asarray(values, dtype=np.float64)
    n = vals.size
    if n < 2:
        return None
    return float(stats.t.ppf(0.975, n - 1) * vals.std(ddof=1) / np.sqrt(n))


def aggregate_runs(runs: pd.DataFrame) -> pd.DataFrame:
    """
    Per-(strategy, lam) mean and 95% CI half-width of every metric

    Uses successful rows only and ignores missing values per metric, so the
    result is recomputable from the per-run CSV alone.
    """
    metrics = [c for c in runs.columns if c not in NON_METRIC_COLUMNS]
    columns = AGGREGATE_KEYS + ["n_runs"] + [f"{m}_{suffix}" for m in metrics for suffix in ("mean", "ci95")]

    ok = runs[runs["status"] == STATUS_OK]
    records = []
    for (strategy, lam), group in ok.groupby(AGGREGATE_KEYS, sort=False):
        record = {"strategy": strategy, "lam": lam, "n_runs": len(group)}
        for m in metrics:
            values = pd.to_numeric(group[m], errors="coerce").dropna()
            record[f"{m}_mean"] = float(values.mean()) if len(values) else None
            record[f"{m}_ci95"] = ci_half_width(values)
        records.append(record)

    aggregate = pd.DataFrame(records, columns=columns)
    if not aggregate.empty:
        aggregate = aggregate.sort_values(AGGREGATE_KEYS, kind="mergesort").reset_index(drop=True)
    return aggregate


def _fmt(value, ci=None, digits: int = 4) -> str:
    if value is None or pd.isna(value):
        return "n/a"
    text = f"{value:.{digits}f}"
    if ci is not None and not pd.isna(ci):
        text += f" ± {ci:.{digits}f}"
    return text


def pareto_summary(aggregate: pd.DataFrame, group_names: Sequence[str]) -> str:
    """Per group and strategy: (lam, mean d_eo, mean system AUC) sorted by lam"""
    lines = ["Pareto summary (mean ± 95% CI half-width)"]
    for g in group_names:
        lines.append("")
        lines.append(f"[group] {g}")
        if aggregate.empty:
            lines.append("  (no successful runs)")
            continue
        for strategy, rows in aggregate.groupby("strategy", sort=True):
            lines.append(f"  strategy: {strategy}")
            lines.append(f"    {'lambda':>8}  {'d_eo':>20}  {'system_auc':>20}")
            for _, row in rows.sort_values("lam").iterrows():
                d_eo = _fmt(row.get(f"{g}_d_eo_mean"), row.get(f"{g}_d_eo_ci95"))
                auc = _fmt(row.get("system_roc_auc_mean"), row.get("system_roc_auc_ci95"))
                lines.append(f"    {row['lam']:>8g}  {d_eo:>20}  {auc:>20}")
    return "\n".join(lines) + "\n"


def emit_report(report: SweepReport, path: Union[str, Path]) -> List[Path]:
    """
    Write runs.csv, aggregate.csv and pareto.txt into path

    All three files are staged and renamed together; a failed write leaves
    the directory as it was.

    Raises:
        ReportStorageException: If the directory or a file cannot be written
    """
    storage = ReportStorage(path)
    runs = report.runs_frame()
    aggregate = aggregate_runs(runs)
    return storage.write_atomic({
        RUNS_FILENAME: storage.csv_writer(runs),
        AGGREGATE_FILENAME: storage.csv_writer(aggregate),
        PARETO_FILENAME: storage.text_writer(pareto_summary(aggregate, report.group_names)),
    })


def run_sweep(cfg: SweepConfig, write: bool = True) -> SweepReport:
    """
    Run every (strategy, lambda, run) cell of a sweep

    The dataset is loaded (or synthesized) and split once with base_seed.
    Failed cells are recorded with a reason and the sweep continues. With
    workers > 1 cells run in a process pool; rows keep cell order.

    Args:
        cfg: Sweep configuration
        write: Emit the report files into cfg.output_dir

    Returns:
        SweepReport with one row per cell
    """
    ds = cfg.source.load(cfg.base_seed)
    train_ds, val_ds, test_ds = split_dataset(ds, cfg.splits, seed=cfg.base_seed)
    splits = (train_ds, val_ds, test_ds)
    cells = sweep_cells(cfg)
    logger.info(
        f"Sweep over {cfg.source.describe()}: {len(cells)} cells "
        f"(train {train_ds.n}, validation {val_ds.n}, test {test_ds.n})"
    )

    if cfg.workers > 1:
        logger.warning("Parallel cells share the machine; steps/sec is not comparable across workers")
        with ProcessPoolExecutor(max_workers=cfg.workers) as executor:
            futures = [executor.submit(run_cell, cell, splits, cfg.training, cfg.target_fpr) for cell in cells]
            rows = [future.result() for future in futures]
    else:
        rows = []
        for i, cell in enumerate(cells, start=1):
            logger.info(f"[{i}/{len(cells)}] {cell.strategy.value} lam={cell.lam} run={cell.run_index}")
            rows.append(run_cell(cell, splits, cfg.training, cfg.target_fpr))

    report = SweepReport(rows=rows, task_names=list(ds.task_names), group_names=list(ds.group_names))
    logger.info(f"Sweep finished: {len(report.successes)} ok, {len(report.failures)} failed")
    if write:
        emit_report(report, cfg.output_dir)
    return report
