"""
System-level composition and threshold calibration
The overall prediction fires when any task head reaches its threshold
"""
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from config.config import DEFAULT_TARGET_FPR
from data.dataset import Dataset
from model.mlp import MlpParams, forward
from utils.exceptions import CalibrationException, ConfigurationException
from utils.logger import setup_logger

logger = setup_logger(__name__)

_LOWEST = np.nextafter(0.0, 1.0)
_HIGHEST = np.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class ThresholdSet:
    """One decision threshold per head, each in (0, 1)"""
    per_task: Tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.per_task)
        for v in values:
            if not 0.0 < v < 1.0:
                raise ConfigurationException(f"Thresholds must lie in (0, 1), got {v}")
        object.__setattr__(self, "per_task", values)

    def __len__(self) -> int:
        return len(self.per_task)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.per_task, dtype=np.float64)


def overall_predict(probs: Sequence[float], thresholds: ThresholdSet) -> Tuple[int, float]:
    """
    Compose per-task probabilities into the system prediction

    Returns:
        (hard, soft): hard = 1 iff any probs[t] >= thresholds[t]; soft = max_t probs[t]
    """
    p = np.asarray(probs, dtype=np.float64).ravel()
    if p.size != len(thresholds):
        raise ConfigurationException(f"{p.size} probabilities for {len(thresholds)} thresholds")
    hard = int((p >= thresholds.as_array()).any())
    soft = float(p.max()) if p.size else 0.0
    return hard, soft


def system_predictions(probs: np.ndarray, thresholds: ThresholdSet) -> Tuple[np.ndarray, np.ndarray]:
    """Row-wise overall_predict over an (n, heads) probability matrix"""
    if probs.shape[1] != len(thresholds):
        raise ConfigurationException(f"{probs.shape[1]} heads for {len(thresholds)} thresholds")
    hard = (probs >= thresholds.as_array()).any(axis=1).astype(np.int8)
    soft = probs.max(axis=1)
    return hard, soft


def threshold_for_fpr(negative_scores: Sequence[float], target_fpr: float) -> float:
    """
    Smallest negative-score value whose empirical FPR stays within target_fpr

    A score counts as flagged when score >= threshold. With target 0 the
    threshold sits just above the largest negative score.
    """
    u = np.sort(np.asarray(negative_scores, dtype=np.float64))
    n = u.size
    if n == 0:
        raise CalibrationException("No negative scores to calibrate on")
    if not 0.0 <= target_fpr <= 1.0:
        raise ConfigurationException(f"target_fpr must be in [0, 1], got {target_fpr}")

    allowed = int(np.floor(target_fpr * n + 1e-9))
    if allowed >= n:
        return float(u[0])
    # Everything at or below u[n - allowed - 1] would flag more than allowed negatives
    j = int(np.searchsorted(u, u[n - allowed - 1], side="right"))
    if j < n:
        return float(u[j])
    return float(np.nextafter(u[-1], np.inf))


def calibrate_thresholds(
    params: MlpParams,
    validation: Dataset,
    target_fpr: float = DEFAULT_TARGET_FPR,
) -> ThresholdSet:
    """
    Per-head thresholds hitting a target task-level FPR on validation

    Raises:
        CalibrationException: If a head has no negatives in validation
    """
    probs = forward(params, validation.features).probs
    targets = validation.head_labels(params.num_heads)
    names = validation.task_names if params.num_heads == validation.num_tasks else ["overall"]

    thresholds = []
    for t in range(params.num_heads):
        negatives = probs[targets[:, t] == 0, t]
        if negatives.size == 0:
            raise CalibrationException(f"No validation negatives for task '{names[t]}'")
        raw = threshold_for_fpr(negatives, target_fpr)
        value = float(np.clip(raw, _LOWEST, _HIGHEST))
        if value != raw:
            logger.warning(
                f"Threshold for task '{names[t]}' clipped from {raw!r} to {value!r}; "
                f"validation FPR may miss the {target_fpr} target"
            )
        thresholds.append(value)

    logger.info(f"Calibrated thresholds at target FPR {target_fpr}: {[round(v, 4) for v in thresholds]}")
    return ThresholdSet(tuple(thresholds))
