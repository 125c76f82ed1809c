"""Model package: hashing vectorizer and the multi-head MLP"""
from .hashing import SparseFeatures, fnv1a_64, hash_vectorize, stack_features, tokenize, vectorize_corpus
from .mlp import (
    ForwardCache,
    Gradients,
    MlpParams,
    backward,
    backward_logits,
    forward,
    init_params,
    sgd_step,
)

__all__ = [
    'SparseFeatures',
    'fnv1a_64',
    'hash_vectorize',
    'stack_features',
    'tokenize',
    'vectorize_corpus',
    'ForwardCache',
    'Gradients',
    'MlpParams',
    'backward',
    'backward_logits',
    'forward',
    'init_params',
    'sgd_step',
]
