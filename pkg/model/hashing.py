"""
Hashing-trick bag-of-words vectorizer
Maps free text to sparse bucket counts with a fixed 64-bit FNV-1a hash
"""
import re
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from scipy import sparse

from utils.exceptions import ConfigurationException

FNV64_OFFSET_BASIS = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

# Maximal runs of letters/digits (underscore is a word char but not alphanumeric)
_TOKEN_RE = re.compile(r"[^\W_]+")


@dataclass(frozen=True)
class SparseFeatures:
    """Bucket counts of one document; entries sorted by bucket, counts > 0"""
    entries: Tuple[Tuple[int, float], ...]
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigurationException(f"Feature dim must be positive, got {self.dim}")

    @property
    def indices(self) -> np.ndarray:
        return np.fromiter((i for i, _ in self.entries), dtype=np.int64, count=len(self.entries))

    @property
    def counts(self) -> np.ndarray:
        return np.fromiter((c for _, c in self.entries), dtype=np.float64, count=len(self.entries))

    @property
    def total(self) -> float:
        return float(sum(c for _, c in self.entries))

    def to_csr(self) -> sparse.csr_matrix:
        """Single-row CSR matrix of shape (1, dim)"""
        return stack_features([self], self.dim)


def fnv1a_64(data: bytes) -> int:
    """64-bit FNV-1a hash of a byte string"""
    h = FNV64_OFFSET_BASIS
    for byte in data:
        h ^= byte
        h = (h * FNV64_PRIME) & _MASK64
    return h


@lru_cache(maxsize=1 << 16)
def token_bucket(token: str, dim: int) -> int:
    return fnv1a_64(token.encode("utf-8")) % dim


def tokenize(text: str) -> List[str]:
    """Lowercase, then split into maximal alphanumeric runs"""
    return _TOKEN_RE.findall(text.lower())


def hash_vectorize(text: str, dim: int) -> SparseFeatures:
    """
    Vectorize text into hashed bag-of-words counts

    Args:
        text: Raw document text
        dim: Number of hash buckets

    Returns:
        SparseFeatures with raw (unnormalized) counts per bucket
    """
    if dim < 1:
        raise ConfigurationException(f"Feature dim must be positive, got {dim}")

    counts = Counter(token_bucket(tok, dim) for tok in tokenize(text))
    entries = tuple((bucket, float(counts[bucket])) for bucket in sorted(counts))
    return SparseFeatures(entries=entries, dim=dim)


def stack_features(rows: Sequence[SparseFeatures], dim: int) -> sparse.csr_matrix:
    """
    Stack sparse feature rows into an (n, dim) CSR matrix

    Raises:
        ConfigurationException: If a row's dim differs from dim
    """
    indptr = [0]
    indices: List[int] = []
    data: List[float] = []
    for row in rows:
        if row.dim != dim:
            raise ConfigurationException(
                f"Feature dim mismatch: row has {row.dim}, expected {dim}"
            )
        for bucket, count in row.entries:
            indices.append(bucket)
            data.append(count)
        indptr.append(len(indices))

    return sparse.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
        shape=(len(rows), dim),
    )


def vectorize_corpus(texts: Iterable[str], dim: int) -> sparse.csr_matrix:
    """Hash a corpus of texts straight into a CSR matrix"""
    return stack_features([hash_vectorize(text, dim) for text in texts], dim)
