"""
Compositional Fairness Remediation Engine - Main Application
Lambda sweeps, batch/throughput scaling benchmark, property verification
and synthetic dataset generation for five remediation strategies
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional

from config.config import BENCH_FILENAME, CONFIGS_DIR, DEFAULT_BASE_SEED
from config.loader import load_bench_config, load_sweep_config, load_synth_config
from data.synthetic import schema_for, synthesize, write_dataset_csv
from experiments.bench import run_scaling_bench
from experiments.sweep import run_sweep
from storage.report_storage import ReportStorage
from utils.exceptions import ConfigurationException, FairnessException, VerificationFailedException
from utils.logger import LOG_LEVELS, set_level, setup_logger
from verification.eo_tables import non_overlap_property_sweep
from verification.oracles import ORACLE_TOLERANCES, failed_oracles, oracle_checks

logger = setup_logger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_VERIFICATION = 3


def print_banner():
    """Print application banner"""
    print("=" * 70)
    print("⚖️  Compositional Fairness Remediation Engine")
    print("   Strategies: none, direct, baseline, overconditioned, interleaved")
    print("   📈 Lambda sweeps with 95% confidence intervals")
    print("   ⏱️  Batch-size and throughput scaling benchmark")
    print("   🔍 Brute-force property verification")
    print("=" * 70)


def print_separator():
    """Print visual separator"""
    print("-" * 70)


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = load_sweep_config(args.config, seed=args.seed, out=args.out)

    print("\n✅ Configuration:")
    print(f"  Data:       {cfg.source.describe()}")
    print(f"  Strategies: {', '.join(s.value for s in cfg.strategies)}")
    print(f"  Lambdas:    {', '.join(f'{lam:g}' for lam in cfg.lambdas)}")
    print(f"  Runs:       {cfg.runs_per_point} per point (base seed {cfg.base_seed})")
    print(f"  Output:     {cfg.output_dir}")
    print_separator()

    report = run_sweep(cfg)

    print(f"\n🎯 Sweep completed: {len(report.successes)} runs ok, {len(report.failures)} failed")
    for row in report.failures:
        print(f"  ❌ {row['strategy']} lam={row['lam']:g} run={row['run_index']}: {row['reason']}")
    print("\n" + report.pareto_summary())
    ReportStorage(cfg.output_dir).print_storage_summary()
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    cfg, output_dir = load_bench_config(args.config, seed=args.seed, out=args.out)

    print("\n⏱️  Scaling benchmark:")
    print(f"  T:          {', '.join(map(str, cfg.t_list))}")
    print(f"  Groups:     {', '.join(map(str, cfg.g_list))}")
    print(f"  Strategies: {', '.join(s.value for s in cfg.strategies)}")
    print(f"  Budget:     {cfg.steps} steps x {cfg.timing_runs} timed runs per cell")
    print_separator()

    table = run_scaling_bench(cfg.t_list, cfg.g_list, cfg.strategies, cfg)

    storage = ReportStorage(output_dir)
    storage.write_atomic({BENCH_FILENAME: storage.csv_writer(table)})
    print("\n" + table.to_string(index=False))
    storage.print_storage_summary()
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    print("\n🔍 Property sweep over explicit joint tables")
    print_separator()
    report = non_overlap_property_sweep(args.tables, args.t_max, args.eps, args.seed)
    print(report.summary())

    print("\n🔍 Brute-force oracle checks")
    print_separator()
    worst = oracle_checks(n_sets=args.oracle_sets, seed=args.seed)
    for name, diff in worst.items():
        mark = "✅" if diff <= ORACLE_TOLERANCES[name] else "❌"
        print(f"  {mark} {name}: max difference {diff:.3e} (tolerance {ORACLE_TOLERANCES[name]:g})")

    failed = failed_oracles(worst)
    if not report.passed or failed:
        raise VerificationFailedException(
            f"Verification failed (property sweep passed={report.passed}, oracle failures={failed})"
        )
    print("\n✅ All verification checks passed")
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    synth_cfg = load_synth_config(args.config)
    if args.n is not None:
        synth_cfg.n = args.n
    ds = synthesize(synth_cfg, seed=args.seed)
    path = write_dataset_csv(ds, args.out)
    schema = schema_for(synth_cfg)

    print(f"\n✅ Wrote {ds.n} synthetic examples to: {path}")
    print(f"   Text column:   {schema.text_column}")
    print(f"   Label columns: {', '.join(schema.label_columns)}")
    print(f"   Group columns: {', '.join(schema.group_columns)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="main.py",
        description="Train and compare fairness remediation strategies for compositional classifiers",
    )
    parser.add_argument(
        "--log-level",
        type=str.upper,
        choices=LOG_LEVELS,
        default=None,
        help="Override MINDIFF_LOG_LEVEL for this run",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="Run a lambda sweep and write per-run, aggregate and Pareto reports")
    sweep.add_argument("--config", type=Path, default=CONFIGS_DIR / "synthetic_sweep.yaml")
    sweep.add_argument("--seed", type=int, default=None, help="Override sweep.base_seed")
    sweep.add_argument("--out", type=Path, default=None, help="Override sweep.output_dir")
    sweep.set_defaults(handler=cmd_sweep)

    bench = sub.add_parser("bench", help="Measure side-batch sizes and steps/sec across (T, groups)")
    bench.add_argument("--config", type=Path, default=CONFIGS_DIR / "bench.yaml")
    bench.add_argument("--seed", type=int, default=None)
    bench.add_argument("--out", type=Path, default=None, help="Output directory for the scaling table")
    bench.set_defaults(handler=cmd_bench)

    verify = sub.add_parser("verify", help="Run the EO property sweep and the metric oracle checks")
    verify.add_argument("--tables", type=int, default=1000)
    verify.add_argument("--t-max", type=int, default=4)
    verify.add_argument("--eps", type=float, default=1e-6)
    verify.add_argument("--oracle-sets", type=int, default=100)
    verify.add_argument("--seed", type=int, default=DEFAULT_BASE_SEED)
    verify.set_defaults(handler=cmd_verify)

    synth = sub.add_parser("synth", help="Write a synthetic biased dataset to CSV")
    synth.add_argument("--config", type=Path, default=CONFIGS_DIR / "synthetic_sweep.yaml")
    synth.add_argument("--out", type=Path, required=True, help="CSV file to write")
    synth.add_argument("--seed", type=int, default=DEFAULT_BASE_SEED)
    synth.add_argument("--n", type=int, default=None, help="Override the number of examples")
    synth.set_defaults(handler=cmd_synth)

    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, dispatch the subcommand and map failures to exit codes"""
    args = build_parser().parse_args(argv)
    if args.log_level is not None:
        set_level(args.log_level)
    print_banner()
    try:
        return args.handler(args)

    except ConfigurationException as e:
        print(f"\n❌ Configuration Error:")
        print(f"   {str(e)}")
        logger.error(f"Configuration error: {str(e)}")
        return EXIT_CONFIG

    except VerificationFailedException as e:
        print(f"\n❌ Verification Failed:")
        print(f"   {str(e)}")
        logger.error(str(e))
        return EXIT_VERIFICATION

    except KeyboardInterrupt:
        print("\n\n⚠️  Operation cancelled by user")
        return EXIT_OK

    except FairnessException as e:
        print(f"\n❌ Runtime Error:")
        print(f"   {str(e)}")
        logger.error(f"Runtime error: {str(e)}")
        return EXIT_RUNTIME

    except Exception as e:
        print(f"\n❌ Unexpected Error:")
        print(f"   {str(e)}")
        logger.exception("Unexpected error occurred")
        return EXIT_RUNTIME


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
