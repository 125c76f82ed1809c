"""
Loss assembly: per-task cross-entropy on the main batch plus the MMD
regularizer over the batch's conditioned side pairs
"""
from dataclasses import dataclass
from typing import Iterator, List, Tuple, Union

import numpy as np

from data.streams import Batch, SideBatch
from model.mlp import ForwardCache, Gradients, MlpParams, backward, backward_logits, forward
from regularizers.mmd import KernelConfig, mmd_sq, mmd_sq_grad
from training.train_config import TrainConfig
from utils.exceptions import EmptySampleSetException
from utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass
class BatchLoss:
    """
    loss = ce + lam * regularizer

    Unpacks as (loss, grads).
    """
    loss: float
    grads: Gradients
    ce: float
    regularizer: float
    skipped_pairs: int = 0

    def __iter__(self) -> Iterator[Union[float, Gradients]]:
        yield self.loss
        yield self.grads


def cross_entropy(params: MlpParams, batch: Batch) -> Tuple[float, Gradients, ForwardCache]:
    """Binary cross-entropy summed over heads, averaged over main examples"""
    cache = forward(params, batch.main_x)
    y = batch.main_y
    z = cache.logits
    n = z.shape[0]
    ce = float((np.logaddexp(0.0, z) - y * z).sum(axis=1).mean())
    grads = backward_logits(params, batch.main_x, cache, (cache.probs - y) / n)
    return ce, grads, cache


def side_heads(params: MlpParams, side: SideBatch) -> List[int]:
    """Heads a side pair regularizes: its own task, or every head for all-task sides"""
    return [side.task] if side.task is not None else list(range(params.num_heads))


def pair_weight(side: SideBatch, cfg: TrainConfig) -> float:
    if cfg.strategy.interleaves and cfg.interleave_rescale:
        return 1.0 / side.group_prob
    return 1.0


def side_pair_value(params: MlpParams, side: SideBatch, kernel: KernelConfig) -> float:
    """Sum over the pair's heads of mmd_sq(non-member preds, member preds)"""
    pa = forward(params, side.nonmember_x).probs
    pb = forward(params, side.member_x).probs
    return sum(mmd_sq(pa[:, t], pb[:, t], kernel) for t in side_heads(params, side))


def side_pair_loss(params: MlpParams, side: SideBatch, kernel: KernelConfig) -> Tuple[float, Gradients]:
    """Value and parameter gradients of one side pair's regularizer"""
    cache_a = forward(params, side.nonmember_x)
    cache_b = forward(params, side.member_x)
    d_a = np.zeros_like(cache_a.probs)
    d_b = np.zeros_like(cache_b.probs)

    value = 0.0
    for t in side_heads(params, side):
        pa, pb = cache_a.probs[:, t], cache_b.probs[:, t]
        value += mmd_sq(pa, pb, kernel)
        d_a[:, t], d_b[:, t] = mmd_sq_grad(pa, pb, kernel)

    grads = backward(params, side.nonmember_x, cache_a, d_a) + backward(params, side.member_x, cache_b, d_b)
    return value, grads


def regularizer(params: MlpParams, batch: Batch, cfg: TrainConfig) -> Tuple[float, Gradients, int]:
    """
    Weighted sum of side-pair regularizers (lambda not applied)

    Returns:
        (value, gradients, number of skipped pairs)
    """
    total = 0.0
    grads = Gradients.zeros_like(params)
    skipped = 0
    for side in batch.sides:
        try:
            value, pair_grads = side_pair_loss(params, side, cfg.kernel)
        except EmptySampleSetException:
            skipped += 1
            logger.debug(f"Skipped empty side pair task={side.task} group={side.group}")
            continue
        weight = pair_weight(side, cfg)
        total += weight * value
        grads = grads + pair_grads.scaled(weight)
    return total, grads, skipped


def batch_loss(params: MlpParams, batch: Batch, cfg: TrainConfig) -> BatchLoss:
    """
    Total loss and gradients for one batch

    Baseline pairs regularize head t for their (t, m); all-task pairs sum
    the MMD over every head. With lam = 0 the side pairs are not evaluated.

    Args:
        params: Current weights
        batch: Batch composed for cfg.strategy
        cfg: Training configuration

    Returns:
        BatchLoss (unpacks as (loss, grads))
    """
    ce, grads, _ = cross_entropy(params, batch)
    if cfg.lam == 0 or not batch.sides:
        return BatchLoss(loss=ce, grads=grads, ce=ce, regularizer=0.0)

    reg, reg_grads, skipped = regularizer(params, batch, cfg)
    return BatchLoss(
        loss=ce + cfg.lam * reg,
        grads=grads + reg_grads.scaled(cfg.lam),
        ce=ce,
        regularizer=reg,
        skipped_pairs=skipped,
    )
