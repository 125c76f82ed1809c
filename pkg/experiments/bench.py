"""
Batch-size and throughput scaling benchmark
Measures exact side examples per batch and median steps/sec per
(T, groups, strategy) cell on synthetic data; cells run one after another
"""
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config.config import (
    DEFAULT_DIM,
    DEFAULT_HIDDEN,
    DEFAULT_MAIN_BATCH,
    DEFAULT_SIDE_BATCH,
    DEFAULT_TIMING_RUNS,
    WARMUP_STEPS,
)
from data.streams import Strategy, build_streams, expected_side_examples, next_batch
from data.synthetic import SynthConfig, synthesize
from training.train_config import TrainConfig
from training.trainer import train
from utils.exceptions import ConfigurationException, DataValidationException
from utils.logger import setup_logger

logger = setup_logger(__name__)

BENCH_COLUMNS = [
    "num_tasks",
    "num_groups",
    "strategy",
    "side_examples",
    "expected_side_examples",
    "side_pools",
    "steps_per_sec",
    "steps_per_sec_min",
    "steps_per_sec_max",
    "timed_runs",
    "total_steps",
]


@dataclass
class BenchConfig:
    """
    steps: SGD step budget per timed run, rounded up to whole epochs
        (the table reports the steps actually run in total_steps)
    lam: regularizer strength during timing; must be positive so side pairs are evaluated
    """
    t_list: Tuple[int, ...] = (2, 3, 4)
    g_list: Tuple[int, ...] = (2, 3, 4)
    strategies: Tuple[Strategy, ...] = (
        Strategy.NONE,
        Strategy.BASELINE,
        Strategy.OVERCONDITIONED,
        Strategy.INTERLEAVED,
    )
    steps: int = 200
    timing_runs: int = DEFAULT_TIMING_RUNS
    n: int = 4000
    dim: int = DEFAULT_DIM
    hidden: int = DEFAULT_HIDDEN
    main_batch: int = DEFAULT_MAIN_BATCH
    side_batch: int = DEFAULT_SIDE_BATCH
    lam: float = 1.0
    seed: int = 0
    synthetic: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        self.t_list = tuple(int(t) for t in self.t_list)
        self.g_list = tuple(int(g) for g in self.g_list)
        self.strategies = tuple(Strategy.parse(s) for s in self.strategies)
        if not self.t_list or not self.g_list or min(self.t_list + self.g_list) < 1:
            raise ConfigurationException(f"T and group lists must hold positive values: {self.t_list}, {self.g_list}")
        if self.steps <= WARMUP_STEPS:
            raise ConfigurationException(f"steps must exceed the {WARMUP_STEPS} warmup steps, got {self.steps}")
        if self.timing_runs < 1:
            raise ConfigurationException(f"timing_runs must be positive, got {self.timing_runs}")
        if not self.lam > 0:
            raise ConfigurationException(f"Benchmark lambda must be positive, got {self.lam}")

    def synth_config(self, num_tasks: int, num_groups: int) -> SynthConfig:
        return SynthConfig(num_tasks=num_tasks, num_groups=num_groups, n=self.n, dim=self.dim, **self.synthetic)

    def train_config(self, strategy: Strategy, steps_per_epoch: int) -> TrainConfig:
        return TrainConfig(
            strategy=strategy,
            lam=self.lam if strategy.remediates else 0.0,
            epochs=math.ceil(self.steps / steps_per_epoch),
            hidden=self.hidden,
            dim=self.dim,
            main_batch=self.main_batch,
            side_batch=self.side_batch,
            seed=self.seed,
        )


def measure_side_examples(ds, cfg: TrainConfig, batches: int = 3) -> Tuple[int, int]:
    """
    Side examples per batch and number of side pools for a strategy

    Raises:
        DataValidationException: If consecutive batches differ in side size
    """
    streams = build_streams(ds, cfg.stream_spec(), seed=cfg.seed)
    sizes = {next_batch(streams).side_size for _ in range(batches)}
    if len(sizes) != 1:
        raise DataValidationException(f"Side size varies across batches: {sorted(sizes)}")
    return sizes.pop(), streams.num_side_pools


def run_scaling_bench(
    t_list: Sequence[int],
    g_list: Sequence[int],
    strategies: Sequence[Strategy],
    budget: Optional[BenchConfig] = None,
) -> pd.DataFrame:
    """
    Scaling table over every (T, groups, strategy) cell

    Each cell reports the exact side examples per batch and the median
    steps/sec of timing_runs training runs of the fixed step budget.

    Args:
        t_list: Task counts
        g_list: Group counts
        strategies: Strategies to time
        budget: Fixed batch sizes, network size and step budget

    Returns:
        DataFrame with BENCH_COLUMNS, one row per cell
    """
    base = budget or BenchConfig()
    cfg = replace(base, t_list=tuple(t_list), g_list=tuple(g_list), strategies=tuple(strategies))

    rows: List[Dict[str, object]] = []
    for T in cfg.t_list:
        for G in cfg.g_list:
            ds = synthesize(cfg.synth_config(T, G), seed=cfg.seed)
            steps_per_epoch = math.ceil(ds.n / cfg.main_batch)
            for strategy in cfg.strategies:
                train_cfg = cfg.train_config(strategy, steps_per_epoch)
                side, pools = measure_side_examples(ds, train_cfg)
                expected = expected_side_examples(strategy, T, G, cfg.side_batch)

                results = [train(ds, replace(train_cfg, seed=cfg.seed + r)) for r in range(cfg.timing_runs)]
                rates = [result.steps_per_sec for result in results]
                rows.append({
                    "num_tasks": T,
                    "num_groups": G,
                    "strategy": strategy.value,
                    "side_examples": side,
                    "expected_side_examples": expected,
                    "side_pools": pools,
                    "steps_per_sec": float(np.median(rates)),
                    "steps_per_sec_min": float(np.min(rates)),
                    "steps_per_sec_max": float(np.max(rates)),
                    "timed_runs": len(rates),
                    "total_steps": results[0].total_steps,
                })
                logger.info(
                    f"T={T} groups={G} {strategy.value}: {side} side examples/batch, "
                    f"median {np.median(rates):.1f} steps/sec"
                )

    return pd.DataFrame(rows, columns=BENCH_COLUMNS)


def throughput_ratio(table: pd.DataFrame, num_tasks: int, num_groups: int, strategy: Strategy, reference: Strategy) -> float:
    """Median steps/sec of strategy relative to reference within one (T, groups) cell"""
    cell = table[(table["num_tasks"] == num_tasks) & (table["num_groups"] == num_groups)]
    rate = cell.set_index("strategy")["steps_per_sec"]
    return float(rate[Strategy.parse(strategy).value] / rate[Strategy.parse(reference).value])
