"""
YAML run configuration
Reads the declarative config file (sections: data, training, sweep, bench)
into the experiment dataclasses
"""
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import yaml

from config.config import (
    DEFAULT_BANDWIDTH,
    DEFAULT_DIM,
    DEFAULT_OUTPUT_DIR,
    GROUP_THRESHOLD,
    LABEL_THRESHOLD,
)
from data.dataset import CsvSchema
from data.synthetic import SynthConfig
from experiments.bench import BenchConfig
from experiments.sweep import DataSource, SweepConfig
from regularizers.mmd import KernelConfig
from training.train_config import TrainConfig
from utils.exceptions import ConfigurationException
from utils.logger import setup_logger

logger = setup_logger(__name__)

SECTIONS = {"data", "training", "sweep", "bench"}
TRAINING_KEYS = {
    "epochs", "lr", "hidden", "bandwidth", "main_batch", "side_batch",
    "interleave_rescale", "group_weights", "warmup_steps", "debug",
}
SWEEP_KEYS = {
    "strategies", "lambdas", "runs_per_point", "splits", "base_seed",
    "output_dir", "target_fpr", "workers",
}
CSV_KEYS = {"path", "text_column", "label_columns", "group_columns", "label_threshold", "group_threshold"}


def load_yaml(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Parse a config file into a mapping

    Raises:
        ConfigurationException: If the file is missing, malformed or has unknown sections
    """
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except FileNotFoundError:
        raise ConfigurationException(f"Config file not found: {path}")
    except yaml.YAMLError as e:
        raise ConfigurationException(f"Invalid YAML in {path}: {e}")

    if not isinstance(data, dict):
        raise ConfigurationException(f"Config {path} must be a mapping of sections")
    unknown = set(data) - SECTIONS
    if unknown:
        raise ConfigurationException(f"Unknown config sections: {sorted(unknown)}")
    logger.info(f"Loaded config: {path}")
    return data


def _section(data: Dict[str, Any], name: str, allowed: Optional[set] = None) -> Dict[str, Any]:
    section = data.get(name) or {}
    if not isinstance(section, dict):
        raise ConfigurationException(f"Config section '{name}' must be a mapping")
    if allowed is not None:
        unknown = set(section) - allowed
        if unknown:
            raise ConfigurationException(f"Unknown keys in '{name}': {sorted(unknown)}")
    return section


def _build(cls, name: str, **kwargs):
    try:
        return cls(**kwargs)
    except TypeError as e:
        raise ConfigurationException(f"Invalid '{name}' settings: {e}")


def data_source(data: Dict[str, Any]) -> DataSource:
    """Data section -> DataSource; exactly one of 'csv' or 'synthetic'"""
    section = _section(data, "data", {"csv", "synthetic", "dim"})
    dim = int(section.get("dim", DEFAULT_DIM))

    if "csv" in section and "synthetic" in section:
        raise ConfigurationException("Data section needs exactly one of 'csv' or 'synthetic'")
    if "csv" in section:
        csv = _section(section, "csv", CSV_KEYS)
        for key in ("path", "text_column", "label_columns", "group_columns"):
            if key not in csv:
                raise ConfigurationException(f"data.csv is missing '{key}'")
        schema = CsvSchema(
            text_column=csv["text_column"],
            label_columns=tuple(csv["label_columns"]),
            group_columns=tuple(csv["group_columns"]),
            dim=dim,
            label_threshold=float(csv.get("label_threshold", LABEL_THRESHOLD)),
            group_threshold=float(csv.get("group_threshold", GROUP_THRESHOLD)),
        )
        return DataSource(csv_path=Path(csv["path"]), schema=schema)
    if "synthetic" in section:
        synthetic = dict(_section(section, "synthetic"))
        synthetic.setdefault("dim", dim)
        return DataSource(synthetic=_build(SynthConfig, "data.synthetic", **synthetic))
    raise ConfigurationException("Data section needs exactly one of 'csv' or 'synthetic'")


def training_template(data: Dict[str, Any], dim: int) -> TrainConfig:
    """Training section -> TrainConfig template (strategy, lam and seed set per cell)"""
    section = dict(_section(data, "training", TRAINING_KEYS))
    kernel = KernelConfig(bandwidth=float(section.pop("bandwidth", DEFAULT_BANDWIDTH)))
    weights = section.pop("group_weights", None)
    return _build(
        TrainConfig,
        "training",
        kernel=kernel,
        dim=dim,
        group_weights=tuple(weights) if weights is not None else None,
        **section,
    )


def load_sweep_config(
    path: Union[str, Path],
    seed: Optional[int] = None,
    out: Optional[Union[str, Path]] = None,
) -> SweepConfig:
    """
    Build a SweepConfig from a YAML file

    Args:
        path: Config file
        seed: Overrides sweep.base_seed
        out: Overrides sweep.output_dir

    Raises:
        ConfigurationException: On any invalid or missing setting
    """
    data = load_yaml(path)
    source = data_source(data)
    sweep = dict(_section(data, "sweep", SWEEP_KEYS))
    if seed is not None:
        sweep["base_seed"] = seed
    if out is not None:
        sweep["output_dir"] = out
    sweep.setdefault("output_dir", DEFAULT_OUTPUT_DIR)

    for key in ("strategies", "lambdas", "splits"):
        if key in sweep:
            sweep[key] = tuple(sweep[key])
    return _build(SweepConfig, "sweep", source=source, training=training_template(data, source.dim), **sweep)


def load_bench_config(
    path: Union[str, Path],
    seed: Optional[int] = None,
    out: Optional[Union[str, Path]] = None,
) -> Tuple[BenchConfig, Path]:
    """
    Build a BenchConfig from the 'bench' section (data.synthetic supplies generator extras)

    Returns:
        (config, output directory)
    """
    data = load_yaml(path)
    bench = dict(_section(data, "bench"))
    output_dir = Path(out if out is not None else bench.pop("output_dir", DEFAULT_OUTPUT_DIR))
    bench.pop("output_dir", None)
    if seed is not None:
        bench["seed"] = seed

    synthetic = dict(_section(_section(data, "data"), "synthetic"))
    for key in ("num_tasks", "num_groups", "n", "dim"):
        synthetic.pop(key, None)
    for key in ("t_list", "g_list", "strategies"):
        if key in bench:
            bench[key] = tuple(bench[key])
    return _build(BenchConfig, "bench", synthetic=synthetic, **bench), output_dir


def load_synth_config(path: Union[str, Path]) -> SynthConfig:
    """The data.synthetic section as a SynthConfig (for the synth subcommand)"""
    source = data_source(load_yaml(path))
    if source.synthetic is None:
        raise ConfigurationException("The synth command needs a 'data.synthetic' section")
    return source.synthetic
