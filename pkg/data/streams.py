"""
Strategy-dependent data streams and batch composition
The main stream draws from every example; side streams draw group-labeled
negatives. Baseline keeps 2*T*|G| side pools, the overconditioned strategies
2*|G|, and the interleaving strategies touch one group per step.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from config.config import DEFAULT_MAIN_BATCH, DEFAULT_SIDE_BATCH
from data.dataset import Dataset, Membership
from utils.exceptions import ConfigurationException, DataValidationException, UnremediableStreamException
from utils.logger import setup_logger

logger = setup_logger(__name__)


class Strategy(str, Enum):
    NONE = "none"
    DIRECT = "direct"
    BASELINE = "baseline"
    OVERCONDITIONED = "overconditioned"
    INTERLEAVED = "interleaved"

    @classmethod
    def parse(cls, value) -> "Strategy":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ConfigurationException(
                f"Unknown strategy '{value}'. Supported: {', '.join(s.value for s in cls)}"
            )

    @property
    def interleaves(self) -> bool:
        return self in (Strategy.INTERLEAVED, Strategy.DIRECT)

    @property
    def remediates(self) -> bool:
        return self is not Strategy.NONE


@dataclass(frozen=True)
class StreamSpec:
    """
    Batch composition settings

    group_weights: interleaving distribution over groups (uniform when None)
    debug: check side-batch conditioning on every batch
    """
    strategy: Strategy = Strategy.NONE
    main_batch: int = DEFAULT_MAIN_BATCH
    side_batch: int = DEFAULT_SIDE_BATCH
    group_weights: Optional[Tuple[float, ...]] = None
    debug: bool = False

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy.parse(self.strategy))
        if self.main_batch < 1 or self.side_batch < 1:
            raise ConfigurationException(
                f"Batch sizes must be >= 1 (main={self.main_batch}, side={self.side_batch})"
            )
        if self.group_weights is not None:
            weights = tuple(float(w) for w in self.group_weights)
            if any(w < 0 for w in weights) or sum(weights) <= 0:
                raise ConfigurationException(f"Invalid group weights: {weights}")
            object.__setattr__(self, "group_weights", weights)


@dataclass(frozen=True)
class PoolKey:
    """Side pool identity; task None means conditioned on all labels negative"""
    task: Optional[int]
    group: int
    member: bool

    def describe(self) -> str:
        side = "member" if self.member else "non-member"
        if self.task is None:
            return f"group m={self.group} ({side}, all labels negative)"
        return f"(t={self.task}, m={self.group}) ({side}, y_t negative)"


class CyclicPool:
    """Infinite shuffled stream over a fixed index pool, reshuffled on exhaustion"""

    def __init__(self, indices: Sequence[int], rng: np.random.Generator):
        self.indices = np.asarray(indices, dtype=np.int64)
        if self.indices.size == 0:
            raise UnremediableStreamException("Cannot stream from an empty pool")
        self.rng = rng
        self.epochs = 0
        self._order = self.indices[:0]
        self._pos = 0

    def __len__(self) -> int:
        return int(self.indices.size)

    def take(self, k: int) -> np.ndarray:
        chunks = []
        while k > 0:
            if self._pos >= self._order.size:
                self._order = self.rng.permutation(self.indices)
                self._pos = 0
                self.epochs += 1
            chunk = self._order[self._pos:self._pos + k]
            self._pos += chunk.size
            k -= chunk.size
            chunks.append(chunk)
        return np.concatenate(chunks) if chunks else self.indices[:0]


@dataclass
class SideBatch:
    """One conditioned side pair: non-member and member negatives for a group"""
    task: Optional[int]
    group: int
    group_prob: float
    nonmember_index: np.ndarray
    member_index: np.ndarray
    nonmember_x: sparse.csr_matrix
    member_x: sparse.csr_matrix

    @property
    def size(self) -> int:
        return int(self.nonmember_index.size + self.member_index.size)


@dataclass
class Batch:
    main_index: np.ndarray
    main_x: sparse.csr_matrix
    main_y: np.ndarray
    sides: List[SideBatch] = field(default_factory=list)
    group: Optional[int] = None

    @property
    def side_size(self) -> int:
        return sum(side.size for side in self.sides)


@dataclass
class StreamSet:
    dataset: Dataset
    spec: StreamSpec
    main: CyclicPool
    side_pools: Dict[PoolKey, CyclicPool]
    group_rng: np.random.Generator
    group_probs: np.ndarray

    @property
    def num_side_pools(self) -> int:
        return len(self.side_pools)


def expected_side_examples(strategy: Strategy, num_tasks: int, num_groups: int, side_batch: int) -> int:
    """Exact side examples per batch for a strategy"""
    strategy = Strategy.parse(strategy)
    if strategy is Strategy.BASELINE:
        return 2 * side_batch * num_tasks * num_groups
    if strategy is Strategy.OVERCONDITIONED:
        return 2 * side_batch * num_groups
    if strategy.interleaves:
        return 2 * side_batch
    return 0


def _pool_keys(strategy: Strategy, num_tasks: int, num_groups: int) -> List[PoolKey]:
    if strategy is Strategy.BASELINE:
        return [
            PoolKey(task=t, group=m, member=member)
            for t in range(num_tasks)
            for m in range(num_groups)
            for member in (False, True)
        ]
    if strategy is Strategy.NONE:
        return []
    return [PoolKey(task=None, group=m, member=member) for m in range(num_groups) for member in (False, True)]


def _pool_mask(ds: Dataset, key: PoolKey) -> np.ndarray:
    negative = ds.overall_labels == 0 if key.task is None else ds.labels[:, key.task] == 0
    side = Membership.MEMBER if key.member else Membership.NON_MEMBER
    return negative & (ds.groups[:, key.group] == side)


def build_streams(ds: Dataset, spec: StreamSpec, seed: int = 0) -> StreamSet:
    """
    Build the main stream and the strategy's side pools

    The main stream, the group draw and the side pools use independent
    generators spawned from seed, so the main batch sequence does not depend
    on the strategy.

    Raises:
        ConfigurationException: If the dataset is empty or has no groups to remediate
        UnremediableStreamException: If a required side pool is empty
    """
    if ds.n == 0:
        raise ConfigurationException("Cannot build streams over an empty dataset")
    if spec.strategy.remediates and ds.num_groups == 0:
        raise ConfigurationException(f"Strategy '{spec.strategy.value}' needs at least one group")

    main_seq, group_seq, side_seq = np.random.SeedSequence(seed).spawn(3)
    main = CyclicPool(np.arange(ds.n), np.random.default_rng(main_seq))

    keys = _pool_keys(spec.strategy, ds.num_tasks, ds.num_groups)
    side_pools: Dict[PoolKey, CyclicPool] = {}
    for key, child in zip(keys, side_seq.spawn(len(keys))):
        indices = np.flatnonzero(_pool_mask(ds, key))
        if indices.size == 0:
            raise UnremediableStreamException(f"Unremediable stream: no examples for {key.describe()}")
        side_pools[key] = CyclicPool(indices, np.random.default_rng(child))

    if spec.group_weights is not None:
        if len(spec.group_weights) != ds.num_groups:
            raise ConfigurationException(
                f"{len(spec.group_weights)} group weights for {ds.num_groups} groups"
            )
        weights = np.asarray(spec.group_weights, dtype=np.float64)
        group_probs = weights / weights.sum()
    else:
        group_probs = np.full(ds.num_groups, 1.0 / ds.num_groups) if ds.num_groups else np.zeros(0)

    if side_pools:
        sizes = [len(pool) for pool in side_pools.values()]
        logger.info(
            f"Built {len(side_pools)} side pools for '{spec.strategy.value}' "
            f"(smallest {min(sizes)}, largest {max(sizes)} examples)"
        )
    return StreamSet(
        dataset=ds,
        spec=spec,
        main=main,
        side_pools=side_pools,
        group_rng=np.random.default_rng(group_seq),
        group_probs=group_probs,
    )


def _side_pair(streams: StreamSet, task: Optional[int], group: int, side_batch: int) -> SideBatch:
    ds = streams.dataset
    nonmember = streams.side_pools[PoolKey(task, group, False)].take(side_batch)
    member = streams.side_pools[PoolKey(task, group, True)].take(side_batch)
    return SideBatch(
        task=task,
        group=group,
        group_prob=float(streams.group_probs[group]),
        nonmember_index=nonmember,
        member_index=member,
        nonmember_x=ds.features[nonmember],
        member_x=ds.features[member],
    )


def next_batch(
    streams: StreamSet,
    spec: Optional[StreamSpec] = None,
    rng: Optional[np.random.Generator] = None,
) -> Batch:
    """
    Compose the next training batch

    Args:
        streams: Streams from build_streams
        spec: Composition settings (defaults to the settings the streams were built with)
        rng: Generator for the interleaved group draw (defaults to the streams' own)

    Returns:
        Batch with main_batch main examples and the strategy's side pairs
    """
    spec = spec or streams.spec
    ds = streams.dataset
    strategy = spec.strategy

    main_index = streams.main.take(spec.main_batch)
    targets = ds.overall_labels[:, None] if strategy is Strategy.DIRECT else ds.labels
    batch = Batch(
        main_index=main_index,
        main_x=ds.features[main_index],
        main_y=targets[main_index].astype(np.float64),
    )

    if strategy is Strategy.BASELINE:
        batch.sides = [
            _side_pair(streams, t, m, spec.side_batch)
            for t in range(ds.num_tasks)
            for m in range(ds.num_groups)
        ]
    elif strategy is Strategy.OVERCONDITIONED:
        batch.sides = [_side_pair(streams, None, m, spec.side_batch) for m in range(ds.num_groups)]
    elif strategy.interleaves:
        draw = rng or streams.group_rng
        group = int(draw.choice(ds.num_groups, p=streams.group_probs))
        batch.group = group
        batch.sides = [_side_pair(streams, None, group, spec.side_batch)]

    if spec.debug:
        check_batch_conditioning(ds, batch)
    return batch


def check_batch_conditioning(ds: Dataset, batch: Batch) -> None:
    """
    Assert every side example satisfies its pool's conditioning

    Raises:
        DataValidationException: On the first violating example
    """
    overall = ds.overall_labels
    for side in batch.sides:
        for index, expected in ((side.nonmember_index, Membership.NON_MEMBER), (side.member_index, Membership.MEMBER)):
            negative = overall[index] == 0 if side.task is None else ds.labels[index, side.task] == 0
            membership_ok = ds.groups[index, side.group] == expected
            bad = ~(negative & membership_ok)
            if bad.any():
                raise DataValidationException(
                    f"Side example {int(index[np.argmax(bad)])} violates conditioning for "
                    f"task={side.task}, group={side.group}"
                )
