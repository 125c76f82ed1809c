from .bench import BENCH_COLUMNS, BenchConfig, measure_side_examples, run_scaling_bench, throughput_ratio
from .sweep import (
    DataSource,
    SweepCell,
    SweepConfig,
    SweepReport,
    aggregate_runs,
    ci_half_width,
    emit_report,
    pareto_summary,
    run_cell,
    run_seed,
    run_sweep,
    sweep_cells,
)
