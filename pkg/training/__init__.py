"""Loss assembly and the training loop"""
from .loss import BatchLoss, batch_loss, cross_entropy, regularizer, side_pair_loss, side_pair_value
from .train_config import TrainConfig
from .trainer import (
    EpochLoss,
    RegularizerExpectation,
    TrainResult,
    expected_regularizer_check,
    initial_params,
    num_heads_for,
    train,
)

__all__ = [
    'BatchLoss',
    'batch_loss',
    'cross_entropy',
    'regularizer',
    'side_pair_loss',
    'side_pair_value',
    'TrainConfig',
    'EpochLoss',
    'RegularizerExpectation',
    'TrainResult',
    'expected_regularizer_check',
    'initial_params',
    'num_heads_for',
    'train',
]
