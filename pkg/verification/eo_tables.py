"""
Equal-opportunity checks over explicit finite joint distributions
Brute-force property sweep for: non-overlapping task classifiers with
overconditioned task-level EO imply system-level EO
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from utils.exceptions import ConfigurationException, UndefinedConditionException
from utils.logger import setup_logger

logger = setup_logger(__name__)

IDENTITY_TOLERANCE = 1e-12
COUNTEREXAMPLE_EPS = 1e-9
COUNTEREXAMPLE_GAP = 0.01

COUPLINGS = ("independent", "comonotone", "disjoint")


def pattern_bits(pattern: int, num_tasks: int) -> Tuple[int, ...]:
    """Prediction pattern index -> (y_hat_1, ..., y_hat_T); bit t is task t"""
    return tuple((pattern >> t) & 1 for t in range(num_tasks))


def pattern_index(bits) -> int:
    return sum(int(b) << t for t, b in enumerate(bits))


@dataclass
class JointTable:
    """
    Joint law of (y_hat_1..y_hat_T, g, y)

    probs[p, g, y] is the probability of prediction pattern p (bit t set when
    task t fires) for membership g and system label y.
    """
    num_tasks: int
    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.num_tasks < 1:
            raise ConfigurationException(f"num_tasks must be positive, got {self.num_tasks}")
        expected = (2 ** self.num_tasks, 2, 2)
        if self.probs.shape != expected:
            raise ConfigurationException(f"Table shape {self.probs.shape} does not match {expected}")
        if (self.probs < 0).any():
            raise ConfigurationException("Table probabilities must be non-negative")
        if abs(self.probs.sum() - 1.0) > 1e-9:
            raise ConfigurationException(f"Table probabilities sum to {self.probs.sum()}, not 1")

    @classmethod
    def from_entries(cls, num_tasks: int, entries: Dict[Tuple[Tuple[int, ...], int, int], float]) -> "JointTable":
        """Build from {((y_hat_1..y_hat_T), g, y): probability}; missing outcomes are 0"""
        probs = np.zeros((2 ** num_tasks, 2, 2))
        for (bits, g, y), p in entries.items():
            if len(bits) != num_tasks:
                raise ConfigurationException(f"Outcome {bits} does not have {num_tasks} predictions")
            probs[pattern_index(bits), g, y] += p
        return cls(num_tasks=num_tasks, probs=probs)

    def fires(self, task: int) -> np.ndarray:
        """Boolean mask over patterns where the task's prediction is 1"""
        return np.array([(p >> task) & 1 for p in range(2 ** self.num_tasks)], dtype=bool)

    @property
    def any_fires(self) -> np.ndarray:
        return np.arange(2 ** self.num_tasks) > 0

    @property
    def multi_fires(self) -> np.ndarray:
        return np.array([bin(p).count("1") >= 2 for p in range(2 ** self.num_tasks)], dtype=bool)

    def is_non_overlapping(self) -> bool:
        """No outcome with two or more firing tasks carries mass"""
        return bool((self.probs[self.multi_fires] == 0).all())

    def negative_mass(self, g: int) -> float:
        """P(G = g, Y = 0)"""
        return float(self.probs[:, g, 0].sum())

    def _negative_slice(self, g: int) -> np.ndarray:
        mass = self.negative_mass(g)
        if mass <= 0:
            raise UndefinedConditionException(f"P(G={g}, Y=0) is zero; the conditional rate is undefined")
        return self.probs[:, g, 0] / mass

    def task_rates(self, g: int) -> np.ndarray:
        """P(Y_hat_t = 1 | G = g, Y = 0) for every task"""
        cond = self._negative_slice(g)
        return np.array([cond[self.fires(t)].sum() for t in range(self.num_tasks)])

    def overall_rate(self, g: int) -> float:
        """P(max_t Y_hat_t = 1 | G = g, Y = 0)"""
        return float(self._negative_slice(g)[self.any_fires].sum())


def overconditioned_gaps(table: JointTable) -> np.ndarray:
    """Signed per-task gaps P(Y_hat_t=1 | G=1, Y=0) - P(Y_hat_t=1 | G=0, Y=0)"""
    return table.task_rates(1) - table.task_rates(0)


def overall_gap(table: JointTable) -> float:
    """Signed system gap P(Y_hat=1 | G=1, Y=0) - P(Y_hat=1 | G=0, Y=0)"""
    return table.overall_rate(1) - table.overall_rate(0)


def check_overconditioned_eo(table: JointTable, eps: float) -> bool:
    """
    True iff every task's FPR gap, conditioned on all labels negative, is within eps

    Raises:
        UndefinedConditionException: If P(G=0, Y=0) or P(G=1, Y=0) is zero
    """
    return bool((np.abs(overconditioned_gaps(table)) <= eps).all())


def check_overall_eo(table: JointTable, eps: float) -> bool:
    """
    True iff the system-level FPR gap with Y_hat = max_t Y_hat_t is within eps

    Raises:
        UndefinedConditionException: If P(G=0, Y=0) or P(G=1, Y=0) is zero
    """
    return abs(overall_gap(table)) <= eps


def random_non_overlapping_table(num_tasks: int, eps: float, rng: np.random.Generator) -> JointTable:
    """
    Random non-overlapping table satisfying overconditioned EO within eps

    Cell masses P(g, y) and each cell's distribution over the admissible
    patterns (nothing fires, or exactly one task fires) are Dirichlet draws.
    The G=1 negative slice is then projected onto the G=0 task firing rates
    plus a perturbation of magnitude below eps / 2 per task.
    """
    admissible = [0] + [1 << t for t in range(num_tasks)]
    cells = rng.dirichlet(np.ones(4)).reshape(2, 2)
    probs = np.zeros((2 ** num_tasks, 2, 2))

    conditionals = {(g, y): rng.dirichlet(np.ones(num_tasks + 1)) for g in (0, 1) for y in (0, 1)}

    base = conditionals[(0, 0)][1:]
    delta = rng.uniform(-0.5, 0.5, size=num_tasks) * eps
    if (base + delta).sum() > 1.0:
        delta = -np.abs(delta)
    rates = np.maximum(base + delta, 0.0)
    conditionals[(1, 0)] = np.r_[max(1.0 - rates.sum(), 0.0), rates]

    for (g, y), cond in conditionals.items():
        probs[admissible, g, y] = cells[g, y] * cond
    probs /= probs.sum()
    return JointTable(num_tasks=num_tasks, probs=probs)


def coupled_slice(rates: np.ndarray, coupling: str) -> np.ndarray:
    """
    Distribution over prediction patterns with the given per-task firing rates

    independent: tasks fire independently
    comonotone: a shared uniform U fires task t when U < rates[t] (maximal overlap)
    disjoint: tasks fire on disjoint events (needs sum(rates) <= 1)
    """
    num_tasks = rates.size
    out = np.zeros(2 ** num_tasks)
    if coupling == "independent":
        for p in range(2 ** num_tasks):
            bits = np.array(pattern_bits(p, num_tasks))
            out[p] = np.prod(np.where(bits == 1, rates, 1.0 - rates))
    elif coupling == "comonotone":
        # U in [edges[k], edges[k+1]) fires exactly the tasks with rate > edges[k]
        edges = np.r_[0.0, np.sort(rates), 1.0]
        for lo, hi in zip(edges[:-1], edges[1:]):
            if hi > lo:
                out[pattern_index(rates > lo)] += hi - lo
    elif coupling == "disjoint":
        if rates.sum() > 1.0:
            raise ConfigurationException(f"Disjoint coupling needs rates summing to <= 1, got {rates.sum()}")
        for t, r in enumerate(rates):
            out[1 << t] = r
        out[0] = 1.0 - rates.sum()
    else:
        raise ConfigurationException(f"Unknown coupling '{coupling}'. Supported: {', '.join(COUPLINGS)}")
    return out


def random_violating_table(num_tasks: int, rng: np.random.Generator) -> Tuple[JointTable, Tuple[str, str]]:
    """
    Table whose two negative slices share exact per-task firing rates but
    couple the tasks differently, so predictions may overlap

    Returns:
        (table, (coupling for G=0, coupling for G=1))
    """
    if num_tasks < 2:
        raise ConfigurationException("Overlapping predictions need at least two tasks")
    rates = rng.uniform(0.05, 0.9 / num_tasks, size=num_tasks)
    first, second = rng.choice(len(COUPLINGS), size=2, replace=False)
    couplings = (COUPLINGS[first], COUPLINGS[second])

    cells = rng.dirichlet(np.ones(4)).reshape(2, 2)
    probs = np.zeros((2 ** num_tasks, 2, 2))
    for g in (0, 1):
        probs[:, g, 0] = cells[g, 0] * coupled_slice(rates, couplings[g])
        probs[:, g, 1] = cells[g, 1] * rng.dirichlet(np.ones(2 ** num_tasks))
    probs /= probs.sum()
    return JointTable(num_tasks=num_tasks, probs=probs), couplings


@dataclass
class NonOverlapReport:
    n_tables: int
    max_tasks: int
    eps: float
    violations: List[int] = field(default_factory=list)
    max_identity_error: float = 0.0
    max_gap_ratio: float = 0.0
    decomposition_error: float = 0.0
    n_counterexample_tables: int = 0
    counterexamples: List[Tuple[int, float, Tuple[str, str]]] = field(default_factory=list)

    @property
    def counterexample_required(self) -> bool:
        return self.max_tasks >= 2 and self.n_counterexample_tables > 0

    @property
    def passed(self) -> bool:
        return (
            not self.violations
            and self.max_identity_error <= IDENTITY_TOLERANCE
            and self.decomposition_error <= IDENTITY_TOLERANCE
            and (bool(self.counterexamples) or not self.counterexample_required)
        )

    def summary(self) -> str:
        lines = [
            f"Non-overlap tables checked: {self.n_tables} (T <= {self.max_tasks}, eps = {self.eps:g})",
            f"  overall gap > T * eps:         {len(self.violations)} tables",
            f"  largest overall gap / (T*eps): {self.max_gap_ratio:.4f}",
            f"  rate decomposition max error:  {self.max_identity_error:.3e}",
            f"  signed gap sum max error:      {self.decomposition_error:.3e}",
            f"Overlapping tables checked: {self.n_counterexample_tables}",
            f"  counterexamples (task gaps <= {COUNTEREXAMPLE_EPS:g}, overall gap > {COUNTEREXAMPLE_GAP}): "
            f"{len(self.counterexamples)}",
        ]
        if self.counterexamples:
            index, gap, couplings = max(self.counterexamples, key=lambda c: abs(c[1]))
            lines.append(f"  largest: table {index}, overall gap {gap:+.4f}, couplings {couplings[0]}/{couplings[1]}")
        lines.append(f"Result: {'PASSED' if self.passed else 'FAILED'}")
        return "\n".join(lines)


def non_overlap_property_sweep(
    n_tables: int,
    T_max: int,
    eps: float,
    seed: int,
    n_counterexample_tables: Optional[int] = None,
) -> NonOverlapReport:
    """
    Brute-force check that overconditioned task-level EO implies overall EO
    for non-overlapping task predictions

    On every random non-overlapping table: the system FPR equals the sum of
    task FPRs (within 1e-12) for both memberships, the signed overall gap
    equals the sum of signed task gaps, and |overall gap| <= T * eps. Then
    overlapping tables with exactly equal task rates are searched for
    counterexamples; those are recorded, not asserted.

    Args:
        n_tables: Number of non-overlapping tables
        T_max: Largest number of tasks; each table draws T in [1, T_max]
        eps: Overconditioned EO tolerance enforced on the generated tables
        seed: Seed of the table generator
        n_counterexample_tables: Overlapping tables to search (default max(1, n_tables // 10))
    """
    if n_tables < 1:
        raise ConfigurationException(f"n_tables must be positive, got {n_tables}")
    if T_max < 1:
        raise ConfigurationException(f"T_max must be positive, got {T_max}")
    if not eps >= 0:
        raise ConfigurationException(f"eps must be non-negative, got {eps}")

    rng = np.random.default_rng(seed)
    report = NonOverlapReport(n_tables=n_tables, max_tasks=T_max, eps=eps)

    for i in range(n_tables):
        T = int(rng.integers(1, T_max + 1))
        table = random_non_overlapping_table(T, eps, rng)
        for g in (0, 1):
            identity = abs(table.overall_rate(g) - table.task_rates(g).sum())
            report.max_identity_error = max(report.max_identity_error, identity)

        gaps = overconditioned_gaps(table)
        gap = overall_gap(table)
        report.decomposition_error = max(report.decomposition_error, abs(gap - gaps.sum()))
        bound = T * eps
        if bound > 0:
            report.max_gap_ratio = max(report.max_gap_ratio, abs(gap) / bound)
        if abs(gap) > bound + IDENTITY_TOLERANCE:
            report.violations.append(i)
            logger.warning(f"Table {i} (T={T}): overall gap {gap:.3e} exceeds {bound:.3e}")

    if T_max >= 2:
        n_search = n_counterexample_tables if n_counterexample_tables is not None else max(1, n_tables // 10)
        report.n_counterexample_tables = n_search
        for i in range(n_search):
            T = int(rng.integers(2, T_max + 1))
            table, couplings = random_violating_table(T, rng)
            if not check_overconditioned_eo(table, COUNTEREXAMPLE_EPS):
                continue
            gap = overall_gap(table)
            if abs(gap) > COUNTEREXAMPLE_GAP:
                report.counterexamples.append((i, gap, couplings))

    logger.info(
        f"Property sweep: {len(report.violations)} violations over {n_tables} tables, "
        f"{len(report.counterexamples)}/{report.n_counterexample_tables} overlapping counterexamples"
    )
    return report
