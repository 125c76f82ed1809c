import logging

import pandas as pd
import pytest

import main
from config.config import AGGREGATE_FILENAME, CONFIGS_DIR, PARETO_FILENAME, RUNS_FILENAME
from utils.logger import parse_level, set_level

TINY_SWEEP = """
data:
  dim: 32
  synthetic:
    num_tasks: 2
    num_groups: 2
    n: 240
    group_prevalence: 0.3
    positive_rate: 0.15
    neutral_tokens: 4
training:
  epochs: 1
  hidden: 4
  main_batch: 32
  side_batch: 4
sweep:
  strategies: [none, interleaved]
  lambdas: [1.0]
  runs_per_point: 2
"""


def test_verify_passes(capsys) -> None:
    assert main.run(["verify", "--tables", "60", "--oracle-sets", "10"]) == main.EXIT_OK
    out = capsys.readouterr().out
    assert "PASSED" in out
    assert "All verification checks passed" in out


def test_failed_oracle_exits_with_verification_code(monkeypatch) -> None:
    monkeypatch.setattr(main, "oracle_checks", lambda n_sets, seed: {"mmd_sq": 1.0, "roc_auc": 0.0, "average_precision": 0.0})
    assert main.run(["verify", "--tables", "20"]) == main.EXIT_VERIFICATION


def test_missing_config_exits_with_configuration_code(tmp_path) -> None:
    assert main.run(["sweep", "--config", str(tmp_path / "missing.yaml")]) == main.EXIT_CONFIG


def test_sweep_command_writes_reports(tmp_path) -> None:
    config = tmp_path / "tiny.yaml"
    config.write_text(TINY_SWEEP, encoding="utf-8")
    out = tmp_path / "reports"
    assert main.run(["sweep", "--config", str(config), "--out", str(out), "--seed", "3"]) == main.EXIT_OK
    runs = pd.read_csv(out / RUNS_FILENAME)
    assert len(runs) == 4
    assert set(runs["strategy"]) == {"none", "interleaved"}
    assert (out / AGGREGATE_FILENAME).exists()
    assert (out / PARETO_FILENAME).exists()


def test_synth_command_writes_csv(tmp_path) -> None:
    out = tmp_path / "synthetic.csv"
    args = ["synth", "--config", str(CONFIGS_DIR / "synthetic_sweep.yaml"), "--out", str(out), "--n", "50"]
    assert main.run(args) == main.EXIT_OK
    df = pd.read_csv(out)
    assert len(df) == 50
    assert {"text", "toxicity", "group_a"} <= set(df.columns)


def test_unknown_command_is_an_argument_error() -> None:
    with pytest.raises(SystemExit):
        main.run(["train"])


def test_log_level_flag_applies_to_every_module_logger() -> None:
    try:
        assert main.run(["--log-level", "warning", "verify", "--tables", "100", "--oracle-sets", "2"]) == main.EXIT_OK
        assert logging.getLogger("experiments.sweep").level == logging.WARNING
        assert logging.getLogger("training.trainer").level == logging.WARNING
    finally:
        set_level("INFO")


def test_parse_level() -> None:
    assert parse_level("debug") == logging.DEBUG
    assert parse_level(logging.ERROR) == logging.ERROR
    assert parse_level("chatty") == logging.INFO
