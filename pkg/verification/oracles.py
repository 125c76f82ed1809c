"""
Brute-force reference implementations
Slow, loop-based versions of MMD, ROC AUC, average precision and gradients
that the vectorized code is checked against
"""
import math
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from model.mlp import Gradients, MlpParams
from regularizers.mmd import KernelConfig, mmd_sq
from metrics.evaluation import average_precision, roc_auc
from utils.logger import setup_logger

logger = setup_logger(__name__)

FINITE_DIFFERENCE_STEP = 1e-5


def brute_force_mmd_sq(A: Sequence[float], B: Sequence[float], bandwidth: float = 1.0) -> float:
    """Naive double-sum biased V-statistic"""
    def k(a, b):
        return math.exp(-((a - b) ** 2) / (2.0 * bandwidth ** 2))

    n, m = len(A), len(B)
    aa = sum(k(a, a2) for a in A for a2 in A) / (n * n)
    bb = sum(k(b, b2) for b in B for b2 in B) / (m * m)
    ab = sum(k(a, b) for a in A for b in B) / (n * m)
    return aa + bb - 2.0 * ab


def brute_force_roc_auc(labels: Sequence[int], scores: Sequence[float]) -> Optional[float]:
    """Fraction of (positive, negative) pairs ranked correctly; ties count 1/2"""
    pos = [s for y, s in zip(labels, scores) if y]
    neg = [s for y, s in zip(labels, scores) if not y]
    if not pos or not neg:
        return None
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def brute_force_average_precision(labels: Sequence[int], scores: Sequence[float]) -> Optional[float]:
    """Average precision by re-thresholding at every distinct score"""
    n_pos = sum(1 for y in labels if y)
    if n_pos == 0:
        return None
    ap = 0.0
    previous_recall = 0.0
    for threshold in sorted(set(scores), reverse=True):
        flagged = [y for y, s in zip(labels, scores) if s >= threshold]
        tp = sum(1 for y in flagged if y)
        recall = tp / n_pos
        ap += (tp / len(flagged)) * (recall - previous_recall)
        previous_recall = recall
    return ap


def finite_difference_grad(
    loss_fn: Callable[[MlpParams], float],
    params: MlpParams,
    step: float = FINITE_DIFFERENCE_STEP,
) -> Gradients:
    """Central finite differences of loss_fn over every parameter entry"""
    base = params.to_vector()
    grad = np.zeros_like(base)
    dims = (params.dim, params.hidden, params.num_heads)
    for i in range(base.size):
        shifted = base.copy()
        shifted[i] = base[i] + step
        up = loss_fn(MlpParams.from_vector(shifted, *dims))
        shifted[i] = base[i] - step
        down = loss_fn(MlpParams.from_vector(shifted, *dims))
        grad[i] = (up - down) / (2.0 * step)
    numeric = MlpParams.from_vector(grad, *dims)
    return Gradients(W1=numeric.W1, b1=numeric.b1, W2=numeric.W2, b2=numeric.b2)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """max |a - n| / max(1, |a|, |n|) elementwise"""
    scale = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
    return float(np.max(np.abs(analytic - numeric) / scale)) if analytic.size else 0.0


def oracle_checks(n_sets: int = 100, seed: int = 0) -> Dict[str, float]:
    """
    Compare the vectorized metrics with the brute-force references on random sets

    MMD uses pairs of sets with up to 20 values; AUC and AP use sets of up to
    200 scores with occasional ties.

    Returns:
        Largest absolute difference per check
    """
    rng = np.random.default_rng(seed)
    kernel = KernelConfig(bandwidth=1.0)
    worst = {"mmd_sq": 0.0, "roc_auc": 0.0, "average_precision": 0.0}

    for _ in range(n_sets):
        A = rng.random(int(rng.integers(1, 21)))
        B = rng.random(int(rng.integers(1, 21)))
        diff = abs(mmd_sq(A, B, kernel) - brute_force_mmd_sq(A.tolist(), B.tolist(), 1.0))
        worst["mmd_sq"] = max(worst["mmd_sq"], diff)

        n = int(rng.integers(2, 201))
        labels = rng.integers(0, 2, size=n)
        labels[:2] = [0, 1]
        # Rounded scores produce ties
        scores = np.round(rng.random(n), int(rng.integers(1, 4)))
        worst["roc_auc"] = max(
            worst["roc_auc"],
            abs(roc_auc(labels, scores) - brute_force_roc_auc(labels.tolist(), scores.tolist())),
        )
        worst["average_precision"] = max(
            worst["average_precision"],
            abs(average_precision(labels, scores) - brute_force_average_precision(labels.tolist(), scores.tolist())),
        )

    logger.info(f"Oracle checks over {n_sets} random sets: {worst}")
    return worst


ORACLE_TOLERANCES: Dict[str, float] = {"mmd_sq": 1e-10, "roc_auc": 1e-12, "average_precision": 1e-12}


def failed_oracles(worst: Dict[str, float]) -> List[str]:
    return [name for name, diff in worst.items() if diff > ORACLE_TOLERANCES[name]]
