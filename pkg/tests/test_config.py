from pathlib import Path

import pytest

from config.config import CONFIGS_DIR
from config.loader import load_bench_config, load_sweep_config, load_synth_config, load_yaml
from data.streams import Strategy
from utils.exceptions import ConfigurationException

SWEEP_YAML = """
data:
  dim: 64
  synthetic:
    num_tasks: 2
    num_groups: 2
    n: 200
training:
  epochs: 3
  bandwidth: 0.5
  group_weights: [1, 3]
sweep:
  strategies: [none, interleaved]
  lambdas: [0.0, 2.0]
  runs_per_point: 3
  base_seed: 11
  output_dir: out/sweep
"""


def _write(tmp_path: Path, text: str, name: str = "config.yaml") -> Path:
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_sweep_config_from_yaml(tmp_path) -> None:
    cfg = load_sweep_config(_write(tmp_path, SWEEP_YAML))
    assert cfg.strategies == (Strategy.NONE, Strategy.INTERLEAVED)
    assert cfg.lambdas == (0.0, 2.0)
    assert cfg.runs_per_point == 3
    assert cfg.base_seed == 11
    assert cfg.output_dir == Path("out/sweep")
    assert cfg.source.synthetic.n == 200
    assert cfg.training.dim == 64
    assert cfg.training.epochs == 3
    assert cfg.training.kernel.bandwidth == 0.5
    assert cfg.training.group_weights == (1, 3)


def test_command_line_overrides(tmp_path) -> None:
    cfg = load_sweep_config(_write(tmp_path, SWEEP_YAML), seed=99, out=tmp_path / "elsewhere")
    assert cfg.base_seed == 99
    assert cfg.output_dir == tmp_path / "elsewhere"


def test_csv_source(tmp_path) -> None:
    text = """
data:
  dim: 128
  csv:
    path: comments.csv
    text_column: body
    label_columns: [a, b]
    group_columns: [g]
"""
    cfg = load_sweep_config(_write(tmp_path, text))
    assert cfg.source.csv_path == Path("comments.csv")
    assert cfg.source.schema.label_columns == ("a", "b")
    assert cfg.source.schema.dim == 128
    assert cfg.training.dim == 128


@pytest.mark.parametrize(
    "text",
    [
        "model:\n  depth: 3\n",
        "data:\n  synthetic: {}\ntraining:\n  momentum: 0.9\n",
        "data:\n  synthetic: {}\nsweep:\n  lambdas: [-1.0]\n",
        "data:\n  csv:\n    path: x.csv\n",
        "data: {}\n",
        "data:\n  synthetic:\n    colour: red\n",
        "- just\n- a list\n",
        "data: [unclosed\n",
    ],
)
def test_invalid_configs_are_configuration_errors(tmp_path, text: str) -> None:
    with pytest.raises(ConfigurationException):
        load_sweep_config(_write(tmp_path, text))


def test_missing_config_file(tmp_path) -> None:
    with pytest.raises(ConfigurationException):
        load_yaml(tmp_path / "nope.yaml")


def test_bench_config_from_yaml(tmp_path) -> None:
    text = """
data:
  synthetic:
    num_tasks: 5
    group_prevalence: 0.25
bench:
  t_list: [2]
  g_list: [3]
  strategies: [none, interleaved]
  steps: 50
  output_dir: bench_out
"""
    cfg, output_dir = load_bench_config(_write(tmp_path, text), seed=4)
    assert cfg.t_list == (2,) and cfg.g_list == (3,)
    assert cfg.strategies == (Strategy.NONE, Strategy.INTERLEAVED)
    assert cfg.seed == 4
    assert output_dir == Path("bench_out")
    assert cfg.synthetic == {"group_prevalence": 0.25}
    assert cfg.synth_config(2, 3).group_prevalence == [0.25, 0.25, 0.25]


def test_shipped_configs_load() -> None:
    sweep = load_sweep_config(CONFIGS_DIR / "synthetic_sweep.yaml")
    assert len(sweep.strategies) == 5
    assert sweep.source.synthetic.group_names[0] == "group_a"
    civil = load_sweep_config(CONFIGS_DIR / "civil_comments.yaml")
    assert civil.source.schema.group_columns[-1] == "transgender"
    bench, _ = load_bench_config(CONFIGS_DIR / "bench.yaml")
    assert bench.side_batch == 16


def test_synth_needs_synthetic_section(tmp_path) -> None:
    assert load_synth_config(CONFIGS_DIR / "synthetic_sweep.yaml").num_tasks == 3
    with pytest.raises(ConfigurationException):
        load_synth_config(CONFIGS_DIR / "civil_comments.yaml")
