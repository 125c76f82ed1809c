import math

import numpy as np
import pytest

from regularizers.mmd import KernelConfig, gaussian_kernel, mmd_sq, mmd_sq_grad
from utils.exceptions import ConfigurationException, EmptySampleSetException
from verification.oracles import brute_force_mmd_sq

UNIT = KernelConfig(bandwidth=1.0)


def test_singleton_closed_form() -> None:
    assert mmd_sq([0.0], [1.0], UNIT) == pytest.approx(2 - 2 * math.exp(-0.5), abs=1e-12)


def test_identical_sets_have_zero_discrepancy() -> None:
    values = [0.1, 0.4, 0.4, 0.9]
    assert mmd_sq(values, list(values), UNIT) == pytest.approx(0.0, abs=1e-15)


def test_matches_naive_double_sum(rng) -> None:
    for _ in range(100):
        A = rng.random(int(rng.integers(1, 21)))
        B = rng.random(int(rng.integers(1, 21)))
        bandwidth = float(rng.uniform(0.2, 2.0))
        expected = brute_force_mmd_sq(A.tolist(), B.tolist(), bandwidth)
        assert abs(mmd_sq(A, B, KernelConfig(bandwidth)) - expected) < 1e-10


def test_symmetric_and_non_negative(rng) -> None:
    for _ in range(50):
        A = rng.random(int(rng.integers(1, 10)))
        B = rng.random(int(rng.integers(1, 10)))
        forward = mmd_sq(A, B, UNIT)
        assert forward == mmd_sq(B, A, UNIT)
        assert forward >= -1e-15


def test_empty_set_raises() -> None:
    with pytest.raises(EmptySampleSetException):
        mmd_sq([], [0.5], UNIT)
    with pytest.raises(EmptySampleSetException):
        mmd_sq_grad([0.5], [], UNIT)


def test_bandwidth_must_be_positive() -> None:
    with pytest.raises(ConfigurationException):
        KernelConfig(bandwidth=0.0)


def test_kernel_value() -> None:
    assert gaussian_kernel(0.2, 0.2, UNIT) == 1.0
    assert gaussian_kernel(0.0, 2.0, KernelConfig(2.0)) == pytest.approx(math.exp(-0.5))


def test_gradient_matches_finite_differences(rng) -> None:
    step = 1e-6
    for _ in range(20):
        A = rng.random(int(rng.integers(1, 8)))
        B = rng.random(int(rng.integers(1, 8)))
        cfg = KernelConfig(float(rng.uniform(0.3, 1.5)))
        grad_A, grad_B = mmd_sq_grad(A, B, cfg)

        for values, grad, is_a in ((A, grad_A, True), (B, grad_B, False)):
            for i in range(values.size):
                up, down = values.copy(), values.copy()
                up[i] += step
                down[i] -= step
                if is_a:
                    numeric = (mmd_sq(up, B, cfg) - mmd_sq(down, B, cfg)) / (2 * step)
                else:
                    numeric = (mmd_sq(A, up, cfg) - mmd_sq(A, down, cfg)) / (2 * step)
                assert grad[i] == pytest.approx(numeric, abs=1e-7)


def test_gradient_is_consistent_under_argument_swap(rng) -> None:
    A, B = rng.random(5), rng.random(3)
    grad_A, grad_B = mmd_sq_grad(A, B, UNIT)
    swapped_B, swapped_A = mmd_sq_grad(B, A, UNIT)
    assert np.array_equal(grad_A, swapped_A)
    assert np.array_equal(grad_B, swapped_B)


def test_median_discrepancy_shrinks_with_sample_size(rng) -> None:
    medians = []
    for n in (10, 100, 1000):
        values = [mmd_sq(rng.random(n), rng.random(n), KernelConfig(1.0)) for _ in range(15)]
        medians.append(np.median(values))
    assert medians[0] > medians[1] > medians[2]
