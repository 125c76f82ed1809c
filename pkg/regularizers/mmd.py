"""
Gaussian-kernel squared MMD between two sets of scalar predictions
Biased V-statistic with analytic gradients w.r.t. every sample
"""
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist

from config.config import DEFAULT_BANDWIDTH
from utils.exceptions import ConfigurationException, EmptySampleSetException

SampleSet = Union[Sequence[float], np.ndarray]


@dataclass(frozen=True)
class KernelConfig:
    """Gaussian kernel length scale over prediction space [0, 1]"""
    bandwidth: float = DEFAULT_BANDWIDTH

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ConfigurationException(f"Kernel bandwidth must be positive, got {self.bandwidth}")


def gaussian_kernel(a: float, b: float, cfg: KernelConfig) -> float:
    """k(a, b) = exp(-(a - b)^2 / (2 * bandwidth^2))"""
    return float(np.exp(-((a - b) ** 2) / (2.0 * cfg.bandwidth ** 2)))


def gaussian_gram(A: np.ndarray, B: np.ndarray, cfg: KernelConfig) -> np.ndarray:
    """Kernel matrix K[i, j] = k(A[i], B[j])"""
    sq = cdist(A[:, None], B[:, None], "sqeuclidean")
    return np.exp(-sq / (2.0 * cfg.bandwidth ** 2))


def _as_samples(values: SampleSet) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        raise EmptySampleSetException("MMD requires non-empty sample sets")
    return arr


def _canonical(A: np.ndarray, B: np.ndarray) -> bool:
    """True when (A, B) is already in canonical order; makes mmd_sq exactly symmetric"""
    if A.size != B.size:
        return A.size < B.size
    for a, b in zip(A, B):
        if a != b:
            return a < b
    return True


def _mmd_terms(A: np.ndarray, B: np.ndarray, cfg: KernelConfig):
    K_aa = gaussian_gram(A, A, cfg)
    K_bb = gaussian_gram(B, B, cfg)
    K_ab = gaussian_gram(A, B, cfg)
    return K_aa, K_bb, K_ab


def mmd_sq(A: SampleSet, B: SampleSet, cfg: KernelConfig) -> float:
    """
    Biased squared MMD (V-statistic, diagonal terms included)

    Args:
        A: Predictions of the first side
        B: Predictions of the second side
        cfg: Kernel configuration

    Returns:
        mean k(A, A) + mean k(B, B) - 2 mean k(A, B); non-negative, symmetric

    Raises:
        EmptySampleSetException: If either set is empty
    """
    A = _as_samples(A)
    B = _as_samples(B)
    if not _canonical(A, B):
        A, B = B, A

    K_aa, K_bb, K_ab = _mmd_terms(A, B, cfg)
    return float(K_aa.mean() + K_bb.mean() - 2.0 * K_ab.mean())


def mmd_sq_grad(A: SampleSet, B: SampleSet, cfg: KernelConfig) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gradients of mmd_sq w.r.t. each element of A and of B

    Uses dk(a, b)/da = -(a - b) / bandwidth^2 * k(a, b).

    Returns:
        (grad_A, grad_B) with the shapes of A and B
    """
    A = _as_samples(A)
    B = _as_samples(B)
    if not _canonical(A, B):
        grad_B, grad_A = mmd_sq_grad(B, A, cfg)
        return grad_A, grad_B

    n, m = A.size, B.size
    inv_h2 = 1.0 / cfg.bandwidth ** 2
    K_aa, K_bb, K_ab = _mmd_terms(A, B, cfg)

    diff_aa = A[:, None] - A[None, :]
    diff_bb = B[:, None] - B[None, :]
    diff_ab = A[:, None] - B[None, :]

    # Within-set terms count each pair twice (k is symmetric)
    grad_A = (
        -2.0 * inv_h2 / (n * n) * (diff_aa * K_aa).sum(axis=1)
        + 2.0 * inv_h2 / (n * m) * (diff_ab * K_ab).sum(axis=1)
    )
    grad_B = (
        -2.0 * inv_h2 / (m * m) * (diff_bb * K_bb).sum(axis=1)
        - 2.0 * inv_h2 / (n * m) * (diff_ab * K_ab).sum(axis=0)
    )
    return grad_A, grad_B
