"""
Synthetic biased multi-label, multi-group text data
Stand-in for proprietary policy data: task labels depend on task tokens, and
group-member negatives leak task tokens in proportion to a bias strength
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from config.config import DEFAULT_DIM
from data.dataset import CsvSchema, Dataset, Membership
from model.hashing import token_bucket, vectorize_corpus
from utils.exceptions import ConfigurationException
from utils.logger import setup_logger

logger = setup_logger(__name__)

# Candidate tokens tried per accepted token (per pool) before giving up
POOL_SEARCH_FACTOR = 100


@dataclass
class SynthConfig:
    """
    Generator settings

    bias[t][m] is the probability that a negative (y_t = 0) member of group m
    receives leaked task-t tokens. group_prevalence and positive_rate may be
    scalars (shared) or per-group / per-task lists. Task, group and neutral
    tokens hash into disjoint buckets, so group tokens never carry task signal.
    """
    num_tasks: int = 3
    num_groups: int = 4
    n: int = 20000
    group_prevalence: Union[float, List[float]] = 0.2
    group_label_rate: float = 1.0
    positive_rate: Union[float, List[float]] = 0.08
    bias: Optional[List[List[float]]] = None
    dim: int = DEFAULT_DIM
    neutral_tokens: int = 12
    signal_tokens: int = 3
    leak_tokens: int = 1
    group_tokens: int = 2
    neutral_vocab: int = 400
    task_vocab: int = 25
    group_vocab: int = 25
    task_names: Optional[List[str]] = None
    group_names: Optional[List[str]] = None

    def __post_init__(self):
        if self.num_tasks < 1 or self.num_groups < 0 or self.n < 0:
            raise ConfigurationException(
                f"Invalid synthetic sizes: T={self.num_tasks}, groups={self.num_groups}, n={self.n}"
            )
        self.group_prevalence = self._per_item(self.group_prevalence, self.num_groups, "group_prevalence")
        self.positive_rate = self._per_item(self.positive_rate, self.num_tasks, "positive_rate")
        for p in self.group_prevalence:
            if not 0.0 < p < 1.0:
                raise ConfigurationException(f"Group prevalence must be in (0, 1), got {p}")
        for p in self.positive_rate:
            if not 0.0 <= p < 1.0:
                raise ConfigurationException(f"Positive rate must be in [0, 1), got {p}")
        if min(self.neutral_vocab, self.task_vocab, self.group_vocab) < 1:
            raise ConfigurationException("Token vocabularies must hold at least one token")
        if self.dim < self.num_tasks + self.num_groups + 1:
            raise ConfigurationException(
                f"dim={self.dim} cannot give {self.num_tasks + self.num_groups + 1} token pools their own buckets"
            )
        if not 0.0 < self.group_label_rate <= 1.0:
            raise ConfigurationException(f"group_label_rate must be in (0, 1], got {self.group_label_rate}")

        if self.bias is None:
            self.bias = [[0.0] * self.num_groups for _ in range(self.num_tasks)]
        bias = np.asarray(self.bias, dtype=np.float64)
        if bias.shape != (self.num_tasks, self.num_groups) or ((bias < 0) | (bias > 1)).any():
            raise ConfigurationException(
                f"bias must be a {self.num_tasks}x{self.num_groups} matrix of values in [0, 1]"
            )

        if self.task_names is None:
            self.task_names = [f"task_{t}" for t in range(self.num_tasks)]
        if self.group_names is None:
            self.group_names = [f"group_{m}" for m in range(self.num_groups)]
        if len(self.task_names) != self.num_tasks or len(self.group_names) != self.num_groups:
            raise ConfigurationException("task_names / group_names lengths do not match T / groups")

    @staticmethod
    def _per_item(value, count: int, name: str) -> List[float]:
        if isinstance(value, (int, float)):
            return [float(value)] * count
        values = [float(v) for v in value]
        if len(values) != count:
            raise ConfigurationException(f"{name} needs {count} values, got {len(values)}")
        return values

    @property
    def bias_matrix(self) -> np.ndarray:
        return np.asarray(self.bias, dtype=np.float64)


@dataclass(frozen=True)
class TokenPools:
    """Task, group and neutral vocabularies for one generator config"""
    tasks: Tuple[Tuple[str, ...], ...]
    groups: Tuple[Tuple[str, ...], ...]
    neutral: Tuple[str, ...]

    def all_pools(self) -> List[Tuple[str, ...]]:
        return [*self.tasks, *self.groups, self.neutral]


def build_token_pools(spec: SynthConfig) -> TokenPools:
    """
    Token vocabularies whose hash buckets never overlap across pools

    Every pool (each task, each group, the neutral words) owns at most
    dim // pools buckets. Candidate tokens that hash into a bucket owned by
    another pool, or into a new bucket once the quota is used up, are skipped.

    Raises:
        ConfigurationException: If a pool cannot be filled within dim
    """
    T, G = spec.num_tasks, spec.num_groups
    prefixes = [f"t{t}x" for t in range(T)] + [f"g{m}x" for m in range(G)] + ["w"]
    sizes = [spec.task_vocab] * T + [spec.group_vocab] * G + [spec.neutral_vocab]
    quota = spec.dim // len(prefixes)

    owner: Dict[int, int] = {}
    pools: List[Tuple[str, ...]] = []
    for p, (prefix, size) in enumerate(zip(prefixes, sizes)):
        tokens: List[str] = []
        owned = 0
        limit = POOL_SEARCH_FACTOR * len(prefixes) * size + spec.dim
        i = 0
        while len(tokens) < size:
            if i >= limit:
                raise ConfigurationException(
                    f"Could not fill the '{prefix}' token pool: dim={spec.dim} is too small "
                    f"for {len(prefixes)} disjoint pools"
                )
            token = f"{prefix}{i}"
            i += 1
            bucket = token_bucket(token, spec.dim)
            holder = owner.get(bucket)
            if holder is None and owned < quota:
                owner[bucket] = p
                owned += 1
            elif holder != p:
                continue
            tokens.append(token)
        pools.append(tuple(tokens))

    logger.debug(f"Built {len(pools)} token pools over {len(owner)} of {spec.dim} buckets")
    return TokenPools(tasks=tuple(pools[:T]), groups=tuple(pools[T:T + G]), neutral=pools[-1])


def _draw_tokens(rng: np.random.Generator, pool: Sequence[str], k: int) -> List[str]:
    return [pool[i] for i in rng.integers(0, len(pool), size=k)]


def synthesize(spec: SynthConfig, seed: int) -> Dataset:
    """
    Generate a biased dataset

    Args:
        spec: Generator settings
        seed: Generator seed; identical seeds give identical datasets

    Returns:
        Dataset with texts retained
    """
    rng = np.random.default_rng(seed)
    T, G, n = spec.num_tasks, spec.num_groups, spec.n
    bias = spec.bias_matrix
    pools = build_token_pools(spec)

    member = rng.random((n, G)) < np.asarray(spec.group_prevalence)
    known = rng.random((n, G)) < spec.group_label_rate
    labels = (rng.random((n, T)) < np.asarray(spec.positive_rate)).astype(np.int8)

    texts: List[str] = []
    for i in range(n):
        tokens = _draw_tokens(rng, pools.neutral, spec.neutral_tokens)
        for m in np.flatnonzero(member[i]):
            tokens += _draw_tokens(rng, pools.groups[m], spec.group_tokens)
        for t in range(T):
            if labels[i, t]:
                tokens += _draw_tokens(rng, pools.tasks[t], spec.signal_tokens)
                continue
            leak = sum(1 for m in np.flatnonzero(member[i]) if rng.random() < bias[t, m])
            if leak:
                tokens += _draw_tokens(rng, pools.tasks[t], spec.leak_tokens * leak)
        rng.shuffle(tokens)
        texts.append(" ".join(tokens))

    groups = np.where(member, Membership.MEMBER, Membership.NON_MEMBER).astype(np.int8)
    groups[~known] = Membership.UNKNOWN

    ds = Dataset(
        features=vectorize_corpus(texts, spec.dim),
        labels=labels.reshape(n, T),
        groups=groups.reshape(n, G),
        task_names=list(spec.task_names),
        group_names=list(spec.group_names),
        texts=texts,
    )
    logger.info(
        f"Synthesized {n} examples (T={T}, groups={G}, positive rate={ds.overall_labels.mean() if n else 0:.3f})"
    )
    return ds


def write_dataset_csv(ds: Dataset, path: Union[str, Path], text_column: str = "text") -> Path:
    """
    Write a dataset with texts to CSV; unknown memberships become empty cells

    Returns:
        Path of the written file
    """
    if ds.texts is None:
        raise ConfigurationException("Dataset has no texts to write")

    frame = {text_column: ds.texts}
    for t, name in enumerate(ds.task_names):
        frame[name] = ds.labels[:, t].astype(float)
    for m, name in enumerate(ds.group_names):
        col = ds.groups[:, m]
        frame[name] = ["" if v == Membership.UNKNOWN else float(v) for v in col]

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(frame, columns=[text_column, *ds.task_names, *ds.group_names]).to_csv(path, index=False)
    logger.info(f"Wrote {ds.n} synthetic rows to: {path}")
    return path


def schema_for(spec: SynthConfig, text_column: str = "text") -> CsvSchema:
    """CsvSchema that reads back a CSV written by write_dataset_csv"""
    return CsvSchema(
        text_column=text_column,
        label_columns=tuple(spec.task_names),
        group_columns=tuple(spec.group_names),
        dim=spec.dim,
    )
