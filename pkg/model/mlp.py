"""
Single-hidden-layer multi-head MLP
Forward pass, analytic backward pass and plain SGD over hashed sparse inputs
"""
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import sparse
from scipy.special import expit

from model.hashing import SparseFeatures
from utils.exceptions import ConfigurationException, TrainingDivergedException

Inputs = Union[SparseFeatures, sparse.spmatrix]


@dataclass
class MlpParams:
    """
    Weights of the shared network

    W1: (hidden, dim), b1: (hidden,), W2: (num_heads, hidden), b2: (num_heads,)
    """
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        hidden, _ = self.W1.shape
        heads, hidden2 = self.W2.shape
        if self.b1.shape != (hidden,) or hidden2 != hidden or self.b2.shape != (heads,):
            raise ConfigurationException(
                f"Inconsistent parameter shapes: W1{self.W1.shape} b1{self.b1.shape} "
                f"W2{self.W2.shape} b2{self.b2.shape}"
            )

    @property
    def dim(self) -> int:
        return self.W1.shape[1]

    @property
    def hidden(self) -> int:
        return self.W1.shape[0]

    @property
    def num_heads(self) -> int:
        return self.W2.shape[0]

    def copy(self) -> "MlpParams":
        return MlpParams(self.W1.copy(), self.b1.copy(), self.W2.copy(), self.b2.copy())

    def is_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in (self.W1, self.b1, self.W2, self.b2))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.W1.ravel(), self.b1, self.W2.ravel(), self.b2])

    @classmethod
    def from_vector(cls, vec: np.ndarray, dim: int, hidden: int, num_heads: int) -> "MlpParams":
        sizes = [hidden * dim, hidden, num_heads * hidden, num_heads]
        if vec.size != sum(sizes):
            raise ConfigurationException(f"Vector of size {vec.size} does not fit {sizes}")
        parts = np.split(np.asarray(vec, dtype=np.float64), np.cumsum(sizes)[:-1])
        return cls(
            W1=parts[0].reshape(hidden, dim).copy(),
            b1=parts[1].copy(),
            W2=parts[2].reshape(num_heads, hidden).copy(),
            b2=parts[3].copy(),
        )

    @classmethod
    def zeros(cls, dim: int, hidden: int, num_heads: int) -> "MlpParams":
        return cls(
            W1=np.zeros((hidden, dim)),
            b1=np.zeros(hidden),
            W2=np.zeros((num_heads, hidden)),
            b2=np.zeros(num_heads),
        )


# Gradients share the parameter layout
@dataclass
class Gradients:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    @classmethod
    def zeros_like(cls, params: MlpParams) -> "Gradients":
        return cls(
            W1=np.zeros_like(params.W1),
            b1=np.zeros_like(params.b1),
            W2=np.zeros_like(params.W2),
            b2=np.zeros_like(params.b2),
        )

    def __add__(self, other: "Gradients") -> "Gradients":
        return Gradients(self.W1 + other.W1, self.b1 + other.b1, self.W2 + other.W2, self.b2 + other.b2)

    def scaled(self, factor: float) -> "Gradients":
        return Gradients(self.W1 * factor, self.b1 * factor, self.W2 * factor, self.b2 * factor)

    def is_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in (self.W1, self.b1, self.W2, self.b2))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.W1.ravel(), self.b1, self.W2.ravel(), self.b2])


@dataclass
class ForwardCache:
    """Intermediate activations; every array has a leading row axis"""
    hidden_pre: np.ndarray
    hidden_act: np.ndarray
    logits: np.ndarray
    probs: np.ndarray


def init_params(dim: int, hidden: int, num_heads: int, rng: np.random.Generator) -> MlpParams:
    """
    Uniform fan-in initialization of the weights; biases start at zero

    Args:
        dim: Input dimension
        hidden: Hidden units
        num_heads: Output heads (T, or 1 for direct remediation)
        rng: The run's seeded generator
    """
    if min(dim, hidden, num_heads) < 1:
        raise ConfigurationException(
            f"dim, hidden and num_heads must be positive (got {dim}, {hidden}, {num_heads})"
        )
    bound1 = 1.0 / np.sqrt(dim)
    bound2 = 1.0 / np.sqrt(hidden)
    return MlpParams(
        W1=rng.uniform(-bound1, bound1, size=(hidden, dim)),
        b1=np.zeros(hidden),
        W2=rng.uniform(-bound2, bound2, size=(num_heads, hidden)),
        b2=np.zeros(num_heads),
    )


def _as_matrix(params: MlpParams, x: Inputs) -> sparse.csr_matrix:
    X = x.to_csr() if isinstance(x, SparseFeatures) else sparse.csr_matrix(x)
    if X.shape[1] != params.dim:
        raise ConfigurationException(
            f"Input dim {X.shape[1]} does not match W1 columns {params.dim}"
        )
    return X


def forward(params: MlpParams, x: Inputs) -> ForwardCache:
    """
    Forward pass: affine -> ReLU -> affine -> sigmoid

    Args:
        params: Network weights
        x: One SparseFeatures row or an (n, dim) sparse matrix

    Returns:
        ForwardCache with arrays of shape (n, hidden) / (n, num_heads)

    Raises:
        ConfigurationException: If the input dim does not match the weights
    """
    X = _as_matrix(params, x)
    hidden_pre = np.asarray(X @ params.W1.T) + params.b1
    hidden_act = np.maximum(hidden_pre, 0.0)
    logits = hidden_act @ params.W2.T + params.b2
    return ForwardCache(
        hidden_pre=hidden_pre,
        hidden_act=hidden_act,
        logits=logits,
        probs=expit(logits),
    )


def backward_logits(params: MlpParams, x: Inputs, cache: ForwardCache, dL_dlogits: np.ndarray) -> Gradients:
    """Backpropagate an upstream gradient given w.r.t. the logits"""
    X = _as_matrix(params, x)
    dlogits = np.asarray(dL_dlogits, dtype=np.float64).reshape(cache.logits.shape)

    dW2 = dlogits.T @ cache.hidden_act
    db2 = dlogits.sum(axis=0)
    dact = dlogits @ params.W2
    # ReLU subgradient at exactly 0 is 0
    dpre = dact * (cache.hidden_pre > 0.0)
    dW1 = np.asarray(X.T @ dpre).T
    db1 = dpre.sum(axis=0)
    return Gradients(W1=dW1, b1=db1, W2=dW2, b2=db2)


def backward(params: MlpParams, x: Inputs, cache: ForwardCache, dL_dprobs: np.ndarray) -> Gradients:
    """
    Backward pass through sigmoid, affine, ReLU, affine

    Args:
        params: Network weights used in the forward pass
        x: The same inputs given to forward
        cache: Activations from forward
        dL_dprobs: Upstream gradient w.r.t. probs, shape (n, num_heads)

    Returns:
        Gradients summed over rows
    """
    dprobs = np.asarray(dL_dprobs, dtype=np.float64).reshape(cache.probs.shape)
    return backward_logits(params, x, cache, dprobs * cache.probs * (1.0 - cache.probs))


def sgd_step(params: MlpParams, grads: Gradients, lr: float) -> MlpParams:
    """
    Plain SGD update params - lr * grads

    Raises:
        ConfigurationException: If lr is not positive
        TrainingDivergedException: If any gradient entry is non-finite
    """
    if not lr > 0:
        raise ConfigurationException(f"Learning rate must be positive, got {lr}")
    if not grads.is_finite():
        raise TrainingDivergedException("Non-finite gradient encountered in SGD step")

    return MlpParams(
        W1=params.W1 - lr * grads.W1,
        b1=params.b1 - lr * grads.b1,
        W2=params.W2 - lr * grads.W2,
        b2=params.b2 - lr * grads.b2,
    )
