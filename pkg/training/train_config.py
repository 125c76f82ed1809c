"""
Training configuration
"""
from dataclasses import dataclass, field
from typing import Optional, Tuple

from config.config import (
    DEFAULT_DIM,
    DEFAULT_EPOCHS,
    DEFAULT_HIDDEN,
    DEFAULT_LR,
    DEFAULT_MAIN_BATCH,
    DEFAULT_SIDE_BATCH,
    WARMUP_STEPS,
)
from data.streams import Strategy, StreamSpec
from regularizers.mmd import KernelConfig
from utils.exceptions import ConfigurationException


@dataclass(frozen=True)
class TrainConfig:
    """
    One training run

    lam: regularizer strength (lambda)
    interleave_rescale: multiply the drawn group's regularizer by 1 / P(M = m)
        so that its expectation matches the all-groups regularizer
    """
    strategy: Strategy = Strategy.NONE
    lam: float = 0.0
    epochs: int = DEFAULT_EPOCHS
    lr: float = DEFAULT_LR
    kernel: KernelConfig = field(default_factory=KernelConfig)
    hidden: int = DEFAULT_HIDDEN
    dim: int = DEFAULT_DIM
    seed: int = 0
    interleave_rescale: bool = True
    main_batch: int = DEFAULT_MAIN_BATCH
    side_batch: int = DEFAULT_SIDE_BATCH
    group_weights: Optional[Tuple[float, ...]] = None
    warmup_steps: int = WARMUP_STEPS
    debug: bool = False

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy.parse(self.strategy))
        if not self.lam >= 0:
            raise ConfigurationException(f"lambda must be non-negative, got {self.lam}")
        if self.epochs < 1:
            raise ConfigurationException(f"epochs must be positive, got {self.epochs}")
        if not self.lr > 0:
            raise ConfigurationException(f"Learning rate must be positive, got {self.lr}")
        if self.hidden < 1 or self.dim < 1:
            raise ConfigurationException(f"hidden and dim must be positive (got {self.hidden}, {self.dim})")
        if self.warmup_steps < 0:
            raise ConfigurationException(f"warmup_steps must be non-negative, got {self.warmup_steps}")

    def stream_spec(self) -> StreamSpec:
        return StreamSpec(
            strategy=self.strategy,
            main_batch=self.main_batch,
            side_batch=self.side_batch,
            group_weights=self.group_weights,
            debug=self.debug,
        )
