"""
Training loop and the interleaving expectation check
"""
import math
import time
from collections import deque
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np

from data.dataset import Dataset
from data.streams import Strategy, StreamSpec, build_streams, next_batch
from model.mlp import MlpParams, init_params, sgd_step
from training.loss import batch_loss, side_pair_value
from training.train_config import TrainConfig
from utils.exceptions import ConfigurationException, TrainingDivergedException
from utils.logger import setup_logger

logger = setup_logger(__name__)


class EpochLoss(NamedTuple):
    ce: float
    reg: float


@dataclass
class TrainResult:
    params: MlpParams
    steps_per_sec: float
    per_epoch_loss: List[EpochLoss] = field(default_factory=list)
    total_steps: int = 0
    skipped_regularizers: int = 0


class RegularizerExpectation(NamedTuple):
    interleaved_mean: float
    overconditioned_mean: float
    interleaved_stderr: float


def num_heads_for(ds: Dataset, strategy: Strategy) -> int:
    return 1 if strategy is Strategy.DIRECT else ds.num_tasks


def _seeds(seed: int):
    init_seq, stream_seq, group_seq = np.random.SeedSequence(seed).spawn(3)
    stream_seed = int(stream_seq.generate_state(1)[0])
    return np.random.default_rng(init_seq), stream_seed, np.random.default_rng(group_seq)


def initial_params(ds: Dataset, cfg: TrainConfig) -> MlpParams:
    """Seeded initial weights for a run (the same ones train starts from)"""
    init_rng, _, _ = _seeds(cfg.seed)
    return init_params(cfg.dim, cfg.hidden, num_heads_for(ds, cfg.strategy), init_rng)


def _check_dataset(ds: Dataset, cfg: TrainConfig) -> None:
    if ds.n == 0:
        raise ConfigurationException("Cannot train on an empty dataset")
    if ds.dim != cfg.dim:
        raise ConfigurationException(f"Dataset dim {ds.dim} does not match configured dim {cfg.dim}")


def train(ds: Dataset, cfg: TrainConfig) -> TrainResult:
    """
    Train the shared network with the configured remediation strategy

    Runs epochs * ceil(n / main_batch) SGD steps. steps/sec is measured over
    the loop after the first warmup_steps steps; dataset loading and stream
    construction are outside the window.

    Raises:
        ConfigurationException: If the dataset does not fit the configuration
        UnremediableStreamException: If a required side pool is empty
        TrainingDivergedException: On a non-finite loss or gradient
    """
    _check_dataset(ds, cfg)
    init_rng, stream_seed, _ = _seeds(cfg.seed)
    params = init_params(cfg.dim, cfg.hidden, num_heads_for(ds, cfg.strategy), init_rng)
    streams = build_streams(ds, cfg.stream_spec(), seed=stream_seed)

    steps_per_epoch = math.ceil(ds.n / cfg.main_batch)
    total_steps = cfg.epochs * steps_per_epoch
    warmup = min(cfg.warmup_steps, total_steps - 1)
    logger.info(
        f"Training '{cfg.strategy.value}' lam={cfg.lam} for {total_steps} steps "
        f"({cfg.epochs} epochs x {steps_per_epoch})"
    )

    recent = deque(maxlen=5)
    per_epoch: List[EpochLoss] = []
    skipped = 0
    ce_sum = reg_sum = 0.0
    start = time.perf_counter()

    for step in range(total_steps):
        if step == warmup:
            start = time.perf_counter()

        batch = next_batch(streams)
        result = batch_loss(params, batch, cfg)
        if not math.isfinite(result.loss):
            raise TrainingDivergedException(
                f"Non-finite loss at step {step}; last losses: {list(recent)}"
            )
        try:
            params = sgd_step(params, result.grads, cfg.lr)
        except TrainingDivergedException as e:
            raise TrainingDivergedException(f"{e} at step {step}; last losses: {list(recent)}")

        recent.append(result.loss)
        skipped += result.skipped_pairs
        ce_sum += result.ce
        reg_sum += cfg.lam * result.regularizer
        logger.debug(f"step {step}: loss={result.loss:.6f}")

        if (step + 1) % steps_per_epoch == 0:
            epoch = EpochLoss(ce=ce_sum / steps_per_epoch, reg=reg_sum / steps_per_epoch)
            per_epoch.append(epoch)
            logger.info(f"Epoch {len(per_epoch)}/{cfg.epochs}: ce={epoch.ce:.5f} reg={epoch.reg:.5f}")
            ce_sum = reg_sum = 0.0

    elapsed = time.perf_counter() - start
    steps_per_sec = (total_steps - warmup) / max(elapsed, 1e-12)
    if skipped:
        logger.warning(f"Skipped {skipped} empty regularizer pairs during training")
    logger.info(f"Finished {total_steps} steps at {steps_per_sec:.1f} steps/sec")

    return TrainResult(
        params=params,
        steps_per_sec=steps_per_sec,
        per_epoch_loss=per_epoch,
        total_steps=total_steps,
        skipped_regularizers=skipped,
    )


def expected_regularizer_check(
    ds: Dataset,
    cfg: TrainConfig,
    n_batches: int,
    params: Optional[MlpParams] = None,
) -> RegularizerExpectation:
    """
    Compare the rescaled interleaved regularizer with the all-groups one

    Every step draws side pairs for all groups from the shared all-labels-negative
    pools; the all-groups value sums them, the interleaved value keeps only the
    drawn group M, scaled by 1 / P(M) unless interleave_rescale is off. Both
    include lam. Params stay frozen.

    Args:
        ds: Dataset
        cfg: Interleaved training configuration
        n_batches: Number of frozen batches
        params: Frozen weights (defaults to the run's initial weights)

    Returns:
        (interleaved_mean, overconditioned_mean, interleaved_stderr)
    """
    if cfg.strategy is not Strategy.INTERLEAVED:
        raise ConfigurationException("expected_regularizer_check needs the interleaved strategy")
    if n_batches < 1:
        raise ConfigurationException(f"n_batches must be positive, got {n_batches}")
    _check_dataset(ds, cfg)

    _, stream_seed, group_rng = _seeds(cfg.seed)
    if params is None:
        params = initial_params(ds, cfg)

    spec = StreamSpec(
        strategy=Strategy.OVERCONDITIONED,
        main_batch=1,
        side_batch=cfg.side_batch,
        group_weights=cfg.group_weights,
    )
    streams = build_streams(ds, spec, seed=stream_seed)
    probs = streams.group_probs

    interleaved = np.empty(n_batches)
    overconditioned = np.empty(n_batches)
    for i in range(n_batches):
        batch = next_batch(streams)
        values = np.array([side_pair_value(params, side, cfg.kernel) for side in batch.sides])
        group = int(group_rng.choice(ds.num_groups, p=probs))
        overconditioned[i] = cfg.lam * values.sum()
        weight = 1.0 / probs[group] if cfg.interleave_rescale else 1.0
        interleaved[i] = cfg.lam * weight * values[group]

    stderr = float(interleaved.std(ddof=1) / math.sqrt(n_batches)) if n_batches > 1 else 0.0
    result = RegularizerExpectation(
        interleaved_mean=float(interleaved.mean()),
        overconditioned_mean=float(overconditioned.mean()),
        interleaved_stderr=stderr,
    )
    logger.info(
        f"Regularizer expectation over {n_batches} batches: interleaved={result.interleaved_mean:.6g} "
        f"(se {stderr:.3g}), overconditioned={result.overconditioned_mean:.6g}"
    )
    return result
