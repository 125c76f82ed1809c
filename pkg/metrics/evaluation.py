"""
Evaluation metrics
System-level FPR gaps per group (d_EO, r_EO), component-level gaps per
(task, group), ROC AUC via the Mann-Whitney rank statistic, average precision
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from data.dataset import Dataset, Membership
from metrics.composition import ThresholdSet, system_predictions
from model.mlp import MlpParams, forward
from utils.exceptions import ConfigurationException
from utils.logger import setup_logger

logger = setup_logger(__name__)


def roc_auc(labels: Sequence[int], scores: Sequence[float]) -> Optional[float]:
    """
    ROC AUC as the normalized Mann-Whitney U statistic (ties count 1/2)

    Returns:
        AUC, or None when either class is absent
    """
    y = np.asarray(labels).astype(bool)
    s = np.asarray(scores, dtype=np.float64)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(s, method="average")
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def average_precision(labels: Sequence[int], scores: Sequence[float]) -> Optional[float]:
    """
    Step-wise average precision: sum of precision * recall increment over
    distinct score thresholds in descending order

    Returns:
        AP, or None when there are no positives
    """
    y = np.asarray(labels).astype(bool)
    s = np.asarray(scores, dtype=np.float64)
    n_pos = int(y.sum())
    if n_pos == 0:
        return None

    order = np.argsort(-s, kind="mergesort")
    s_sorted = s[order]
    y_sorted = y[order]
    # Last position of every run of tied scores
    ends = np.r_[np.flatnonzero(np.diff(s_sorted)), s_sorted.size - 1]
    tp = np.cumsum(y_sorted)[ends]
    flagged = ends + 1
    precision = tp / flagged
    recall = tp / n_pos
    delta = np.diff(np.r_[0.0, recall])
    return float(np.sum(precision * delta))


def _rate(flags: np.ndarray, mask: np.ndarray) -> Optional[float]:
    count = int(mask.sum())
    if count == 0:
        return None
    return float(flags[mask].mean())


@dataclass
class GroupFairness:
    """FPRs of a group's two membership sides; d/r are None when undefined"""
    group: str
    fpr_member: Optional[float]
    fpr_nonmember: Optional[float]
    n_member_negatives: int
    n_nonmember_negatives: int
    task: Optional[str] = None

    @property
    def d_eo(self) -> Optional[float]:
        if self.fpr_member is None or self.fpr_nonmember is None:
            return None
        return abs(self.fpr_member - self.fpr_nonmember)

    @property
    def r_eo(self) -> Optional[float]:
        if self.fpr_member is None or self.fpr_nonmember is None or self.fpr_nonmember == 0:
            return None
        return self.fpr_member / self.fpr_nonmember


def fpr_gap(
    flags: np.ndarray,
    negatives: np.ndarray,
    membership: np.ndarray,
    group: str,
    task: Optional[str] = None,
) -> GroupFairness:
    """FPR of flagged negatives per membership side; unknown membership is excluded"""
    member = negatives & (membership == Membership.MEMBER)
    nonmember = negatives & (membership == Membership.NON_MEMBER)
    return GroupFairness(
        group=group,
        fpr_member=_rate(flags, member),
        fpr_nonmember=_rate(flags, nonmember),
        n_member_negatives=int(member.sum()),
        n_nonmember_negatives=int(nonmember.sum()),
        task=task,
    )


@dataclass
class EvalReport:
    groups: List[GroupFairness]
    system_roc_auc: Optional[float]
    accuracy: float
    aucpr: List[Optional[float]]
    n_eval: int
    head_names: List[str] = field(default_factory=list)
    task_roc_auc: List[Optional[float]] = field(default_factory=list)
    components: List[GroupFairness] = field(default_factory=list)

    @property
    def mean_aucpr(self) -> Optional[float]:
        values = [v for v in self.aucpr if v is not None]
        return float(np.mean(values)) if values else None

    def group(self, name: str) -> GroupFairness:
        for g in self.groups:
            if g.group == name:
                return g
        raise KeyError(name)

    def to_record(self) -> Dict[str, Optional[float]]:
        """Flat key-value record (one CSV row per run); undefined metrics are None"""
        record: Dict[str, Optional[float]] = {
            "system_roc_auc": self.system_roc_auc,
            "accuracy": self.accuracy,
            "mean_aucpr": self.mean_aucpr,
            "n_eval": self.n_eval,
        }
        for g in self.groups:
            record[f"{g.group}_fpr_member"] = g.fpr_member
            record[f"{g.group}_fpr_nonmember"] = g.fpr_nonmember
            record[f"{g.group}_d_eo"] = g.d_eo
            record[f"{g.group}_r_eo"] = g.r_eo
        for name, ap, auc in zip(self.head_names, self.aucpr, self.task_roc_auc):
            record[f"{name}_aucpr"] = ap
            record[f"{name}_roc_auc"] = auc
        for c in self.components:
            record[f"{c.task}__{c.group}_d_eo"] = c.d_eo
        return record


def evaluate(params: MlpParams, test: Dataset, thresholds: ThresholdSet) -> EvalReport:
    """
    Evaluate a trained model at the system level

    FPRs use system negatives (y = 0) with known membership. System ROC AUC
    ranks soft = max_t probs. With one head per task, component-level FPR gaps
    (conditioned on y_t = 0) are reported as well.

    Raises:
        ConfigurationException: If the test set is empty or shapes do not match
    """
    if test.n == 0:
        raise ConfigurationException("Cannot evaluate on an empty test set")
    return evaluate_predictions(forward(params, test.features).probs, test, thresholds)


def evaluate_predictions(probs: np.ndarray, test: Dataset, thresholds: ThresholdSet) -> EvalReport:
    """Metrics of an (n, heads) probability matrix against the test labels"""
    num_heads = probs.shape[1]
    hard, soft = system_predictions(probs, thresholds)
    y = test.overall_labels
    negatives = y == 0

    groups = [fpr_gap(hard, negatives, test.groups[:, m], name) for m, name in enumerate(test.group_names)]
    for g in groups:
        if g.d_eo is None:
            logger.warning(f"FPR undefined for group '{g.group}' (no negatives on one membership side)")

    targets = test.head_labels(num_heads)
    head_names = list(test.task_names) if num_heads == test.num_tasks else ["overall"]
    aucpr = [average_precision(targets[:, t], probs[:, t]) for t in range(num_heads)]
    task_auc = [roc_auc(targets[:, t], probs[:, t]) for t in range(num_heads)]

    components: List[GroupFairness] = []
    if num_heads == test.num_tasks:
        head_flags = probs >= thresholds.as_array()
        for t, task in enumerate(test.task_names):
            task_negatives = test.labels[:, t] == 0
            for m, name in enumerate(test.group_names):
                components.append(
                    fpr_gap(head_flags[:, t], task_negatives, test.groups[:, m], name, task=task)
                )

    return EvalReport(
        groups=groups,
        system_roc_auc=roc_auc(y, soft),
        accuracy=float((hard == y).mean()),
        aucpr=aucpr,
        n_eval=test.n,
        head_names=head_names,
        task_roc_auc=task_auc,
        components=components,
    )
