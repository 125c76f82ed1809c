import numpy as np
import pytest

from data.dataset import Dataset, Example, Membership
from data.streams import (
    Batch,
    CyclicPool,
    PoolKey,
    SideBatch,
    Strategy,
    StreamSpec,
    build_streams,
    check_batch_conditioning,
    expected_side_examples,
    next_batch,
)
from data.synthetic import SynthConfig, synthesize
from model.hashing import hash_vectorize
from utils.exceptions import ConfigurationException, DataValidationException, UnremediableStreamException

SIDE = 4


def _grid_dataset(num_tasks: int, num_groups: int):
    spec = SynthConfig(
        num_tasks=num_tasks,
        num_groups=num_groups,
        n=400,
        dim=32,
        group_prevalence=0.3,
        positive_rate=0.1,
        neutral_tokens=4,
    )
    return synthesize(spec, seed=num_tasks * 10 + num_groups)


def test_strategy_parse() -> None:
    assert Strategy.parse("Interleaved") is Strategy.INTERLEAVED
    assert Strategy.parse(Strategy.DIRECT) is Strategy.DIRECT
    with pytest.raises(ConfigurationException):
        Strategy.parse("mindiff-x")


@pytest.mark.parametrize("num_tasks", [2, 3, 4])
@pytest.mark.parametrize("num_groups", [2, 3, 4])
def test_side_examples_per_batch_are_exact(num_tasks: int, num_groups: int) -> None:
    ds = _grid_dataset(num_tasks, num_groups)
    expected = {
        Strategy.NONE: 0,
        Strategy.BASELINE: 2 * SIDE * num_tasks * num_groups,
        Strategy.OVERCONDITIONED: 2 * SIDE * num_groups,
        Strategy.INTERLEAVED: 2 * SIDE,
        Strategy.DIRECT: 2 * SIDE,
    }
    for strategy, size in expected.items():
        streams = build_streams(ds, StreamSpec(strategy, main_batch=16, side_batch=SIDE), seed=5)
        for _ in range(3):
            batch = next_batch(streams)
            assert batch.side_size == size
            assert batch.main_index.size == 16
        assert expected_side_examples(strategy, num_tasks, num_groups, SIDE) == size


def test_pool_counts_per_strategy(small_dataset) -> None:
    T, G = small_dataset.num_tasks, small_dataset.num_groups
    counts = {
        Strategy.NONE: 0,
        Strategy.BASELINE: 2 * T * G,
        Strategy.OVERCONDITIONED: 2 * G,
        Strategy.INTERLEAVED: 2 * G,
        Strategy.DIRECT: 2 * G,
    }
    for strategy, count in counts.items():
        assert build_streams(small_dataset, StreamSpec(strategy)).num_side_pools == count


@pytest.mark.parametrize("strategy", list(Strategy))
def test_side_batches_satisfy_conditioning(small_dataset, strategy: Strategy) -> None:
    streams = build_streams(small_dataset, StreamSpec(strategy, main_batch=32, side_batch=8, debug=True), seed=2)
    overall = small_dataset.overall_labels
    for _ in range(20):
        batch = next_batch(streams)
        for side in batch.sides:
            if side.task is None:
                assert np.all(overall[side.member_index] == 0)
                assert np.all(overall[side.nonmember_index] == 0)
            else:
                assert np.all(small_dataset.labels[side.member_index, side.task] == 0)
                assert np.all(small_dataset.labels[side.nonmember_index, side.task] == 0)
            assert np.all(small_dataset.groups[side.member_index, side.group] == Membership.MEMBER)
            assert np.all(small_dataset.groups[side.nonmember_index, side.group] == Membership.NON_MEMBER)


def test_main_stream_does_not_depend_on_strategy(small_dataset) -> None:
    sequences = []
    for strategy in (Strategy.NONE, Strategy.BASELINE, Strategy.INTERLEAVED):
        streams = build_streams(small_dataset, StreamSpec(strategy, main_batch=50), seed=9)
        sequences.append(np.concatenate([next_batch(streams).main_index for _ in range(15)]))
    assert np.array_equal(sequences[0], sequences[1])
    assert np.array_equal(sequences[0], sequences[2])


def test_direct_targets_the_overall_label(small_dataset) -> None:
    streams = build_streams(small_dataset, StreamSpec(Strategy.DIRECT, main_batch=64), seed=0)
    batch = next_batch(streams)
    assert batch.main_y.shape == (64, 1)
    assert np.array_equal(batch.main_y[:, 0], small_dataset.overall_labels[batch.main_index])


def test_interleaving_draws_one_group_with_configured_weights(small_dataset) -> None:
    spec = StreamSpec(Strategy.INTERLEAVED, main_batch=4, side_batch=2, group_weights=(3.0, 1.0))
    streams = build_streams(small_dataset, spec, seed=4)
    assert np.allclose(streams.group_probs, [0.75, 0.25])
    draws = []
    for _ in range(4000):
        batch = next_batch(streams)
        assert len(batch.sides) == 1 and batch.sides[0].group == batch.group
        assert batch.sides[0].group_prob == streams.group_probs[batch.group]
        draws.append(batch.group)
    share = np.mean(np.asarray(draws) == 0)
    # 0.75 +- 4 standard errors
    assert abs(share - 0.75) < 4 * np.sqrt(0.75 * 0.25 / 4000)


def test_wrong_number_of_group_weights(small_dataset) -> None:
    with pytest.raises(ConfigurationException):
        build_streams(small_dataset, StreamSpec(Strategy.INTERLEAVED, group_weights=(1.0, 1.0, 1.0)))


def test_empty_pool_is_unremediable() -> None:
    # Every example is a positive for task 0, so no (t=0, m=0) negatives exist
    examples = [
        Example(hash_vectorize(f"doc {i}", 8), (1, i % 2), (Membership(i % 2),))
        for i in range(6)
    ]
    ds = Dataset.from_examples(examples, ["t0", "t1"], ["g0"], dim=8)
    with pytest.raises(UnremediableStreamException, match="t=0, m=0"):
        build_streams(ds, StreamSpec(Strategy.BASELINE))
    with pytest.raises(UnremediableStreamException, match="m=0"):
        build_streams(ds, StreamSpec(Strategy.OVERCONDITIONED))
    build_streams(ds, StreamSpec(Strategy.NONE))


def test_remediation_needs_groups() -> None:
    ds = Dataset.from_examples([Example(hash_vectorize("x", 8), (0,), ())], ["t0"], [], dim=8)
    with pytest.raises(ConfigurationException):
        build_streams(ds, StreamSpec(Strategy.INTERLEAVED))


def test_cyclic_pool_covers_every_index_each_epoch() -> None:
    pool = CyclicPool(np.arange(10, 17), np.random.default_rng(0))
    first = pool.take(7)
    assert sorted(first.tolist()) == list(range(10, 17))
    second = np.concatenate([pool.take(3), pool.take(4)])
    assert sorted(second.tolist()) == list(range(10, 17))
    assert pool.epochs == 2
    assert pool.take(20).size == 20


def test_cyclic_pool_rejects_empty_pool() -> None:
    with pytest.raises(UnremediableStreamException):
        CyclicPool([], np.random.default_rng(0))


def test_conditioning_check_catches_violations(small_dataset) -> None:
    positive = int(np.flatnonzero(small_dataset.overall_labels == 1)[0])
    member = int(np.flatnonzero(small_dataset.groups[:, 0] == Membership.MEMBER)[0])
    bad = SideBatch(
        task=None,
        group=0,
        group_prob=1.0,
        nonmember_index=np.array([positive]),
        member_index=np.array([member]),
        nonmember_x=small_dataset.features[[positive]],
        member_x=small_dataset.features[[member]],
    )
    batch = Batch(main_index=np.array([0]), main_x=small_dataset.features[[0]], main_y=np.zeros((1, 2)), sides=[bad])
    with pytest.raises(DataValidationException):
        check_batch_conditioning(small_dataset, batch)


def test_pool_key_description() -> None:
    assert "t=1, m=2" in PoolKey(task=1, group=2, member=True).describe()
    assert "m=3" in PoolKey(task=None, group=3, member=False).describe()


def test_handcrafted_pool_memberships() -> None:
    rows = [
        ((0, 0), Membership.MEMBER),
        ((0, 0), Membership.NON_MEMBER),
        ((1, 0), Membership.MEMBER),
        ((0, 1), Membership.NON_MEMBER),
        ((0, 0), Membership.UNKNOWN),
        ((0, 1), Membership.MEMBER),
    ]
    examples = [Example(hash_vectorize(f"doc {i}", 8), labels, (g,)) for i, (labels, g) in enumerate(rows)]
    ds = Dataset.from_examples(examples, ["t0", "t1"], ["g0"], dim=8)

    def pools(strategy):
        streams = build_streams(ds, StreamSpec(strategy, main_batch=2, side_batch=1))
        return {key: sorted(pool.indices.tolist()) for key, pool in streams.side_pools.items()}

    assert pools(Strategy.BASELINE) == {
        PoolKey(0, 0, False): [1, 3],
        PoolKey(0, 0, True): [0, 5],
        PoolKey(1, 0, False): [1],
        PoolKey(1, 0, True): [0, 2],
    }
    all_negative = {PoolKey(None, 0, False): [1], PoolKey(None, 0, True): [0]}
    assert pools(Strategy.OVERCONDITIONED) == all_negative
    assert pools(Strategy.INTERLEAVED) == all_negative
    assert pools(Strategy.DIRECT) == all_negative
    assert pools(Strategy.NONE) == {}


def test_uniform_interleaving_visits_groups_equally() -> None:
    ds = _grid_dataset(2, 4)
    streams = build_streams(ds, StreamSpec(Strategy.INTERLEAVED, main_batch=1, side_batch=1), seed=12)
    draws = np.array([next_batch(streams).group for _ in range(10_000)])
    counts = np.bincount(draws, minlength=4) / draws.size
    sigma = np.sqrt(0.25 * 0.75 / draws.size)
    assert np.all(np.abs(counts - 0.25) < 4 * sigma)
