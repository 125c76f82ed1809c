"""
Dataset model and CSV ingestion
Converts annotated comment tables into hashed multi-label, multi-group datasets
"""
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import sparse

from config.config import DEFAULT_DIM, GROUP_THRESHOLD, LABEL_THRESHOLD
from model.hashing import SparseFeatures, stack_features, vectorize_corpus
from utils.exceptions import ConfigurationException, DataValidationException, SchemaException
from utils.logger import setup_logger

logger = setup_logger(__name__)


class Membership(IntEnum):
    UNKNOWN = -1
    NON_MEMBER = 0
    MEMBER = 1


@dataclass(frozen=True)
class Example:
    """One instance: features, per-task labels, per-group membership"""
    features: SparseFeatures
    labels: Tuple[int, ...]
    groups: Tuple[Membership, ...]

    @property
    def overall_label(self) -> int:
        return max(self.labels) if self.labels else 0


@dataclass
class Dataset:
    """
    In-memory dataset

    features: (n, dim) CSR matrix of hashed counts
    labels: (n, T) int8 array of {0, 1}
    groups: (n, |G|) int8 array of Membership values
    """
    features: sparse.csr_matrix
    labels: np.ndarray
    groups: np.ndarray
    task_names: List[str]
    group_names: List[str]
    texts: Optional[List[str]] = field(default=None, repr=False)

    def __post_init__(self):
        n = self.features.shape[0]
        if self.labels.ndim != 2 or self.labels.shape != (n, len(self.task_names)):
            raise DataValidationException(
                f"labels shape {self.labels.shape} inconsistent with {n} rows x {len(self.task_names)} tasks"
            )
        if self.groups.ndim != 2 or self.groups.shape != (n, len(self.group_names)):
            raise DataValidationException(
                f"groups shape {self.groups.shape} inconsistent with {n} rows x {len(self.group_names)} groups"
            )
        if self.texts is not None and len(self.texts) != n:
            raise DataValidationException(f"{len(self.texts)} texts for {n} rows")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    def __len__(self) -> int:
        return self.n

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def num_tasks(self) -> int:
        return len(self.task_names)

    @property
    def num_groups(self) -> int:
        return len(self.group_names)

    @property
    def overall_labels(self) -> np.ndarray:
        """System label y = max_t y_t, derived on demand"""
        if self.num_tasks == 0:
            return np.zeros(self.n, dtype=np.int8)
        return self.labels.max(axis=1)

    def head_labels(self, num_heads: int) -> np.ndarray:
        """
        Training / calibration targets for a model with num_heads outputs

        A single-head model on a multi-task dataset is a direct-remediation
        model and targets the overall label.
        """
        if num_heads == self.num_tasks:
            return self.labels
        if num_heads == 1:
            return self.overall_labels[:, None]
        raise ConfigurationException(
            f"Model has {num_heads} heads but dataset has {self.num_tasks} tasks"
        )

    def example(self, i: int) -> Example:
        row = self.features.getrow(i)
        order = np.argsort(row.indices)
        entries = tuple((int(row.indices[j]), float(row.data[j])) for j in order)
        return Example(
            features=SparseFeatures(entries=entries, dim=self.dim),
            labels=tuple(int(v) for v in self.labels[i]),
            groups=tuple(Membership(int(v)) for v in self.groups[i]),
        )

    def subset(self, indices: Sequence[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            features=self.features[idx],
            labels=self.labels[idx],
            groups=self.groups[idx],
            task_names=list(self.task_names),
            group_names=list(self.group_names),
            texts=[self.texts[i] for i in idx] if self.texts is not None else None,
        )

    @classmethod
    def from_examples(
        cls,
        examples: Sequence[Example],
        task_names: Sequence[str],
        group_names: Sequence[str],
        dim: int,
    ) -> "Dataset":
        for ex in examples:
            if len(ex.labels) != len(task_names) or len(ex.groups) != len(group_names):
                raise DataValidationException(
                    f"Example with {len(ex.labels)} labels / {len(ex.groups)} groups does not fit "
                    f"{len(task_names)} tasks / {len(group_names)} groups"
                )
        n = len(examples)
        return cls(
            features=stack_features([ex.features for ex in examples], dim),
            labels=np.array([ex.labels for ex in examples], dtype=np.int8).reshape(n, len(task_names)),
            groups=np.array([[int(g) for g in ex.groups] for ex in examples], dtype=np.int8).reshape(
                n, len(group_names)
            ),
            task_names=list(task_names),
            group_names=list(group_names),
        )


@dataclass(frozen=True)
class CsvSchema:
    """Column mapping for a labeled text CSV"""
    text_column: str
    label_columns: Tuple[str, ...]
    group_columns: Tuple[str, ...]
    dim: int = DEFAULT_DIM
    label_threshold: float = LABEL_THRESHOLD
    group_threshold: float = GROUP_THRESHOLD

    @property
    def columns(self) -> List[str]:
        return [self.text_column, *self.label_columns, *self.group_columns]


def _numeric_columns(df: pd.DataFrame, columns: Sequence[str]) -> pd.DataFrame:
    return pd.DataFrame(
        {col: pd.to_numeric(df[col].str.strip(), errors="coerce") for col in columns},
        index=df.index,
    )


def load_csv(path: Union[str, Path], schema: CsvSchema) -> Dataset:
    """
    Load a labeled text CSV into a Dataset

    Fractional annotator scores are binarized at the schema thresholds;
    empty group cells become Membership.UNKNOWN.

    Args:
        path: CSV file (UTF-8, header row, quoted fields allowed)
        schema: Column mapping

    Returns:
        Dataset with hashed features

    Raises:
        SchemaException: If a mapped column is missing
        DataValidationException: If the file cannot be read
    """
    path = Path(path)
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError:
        raise ConfigurationException(f"Dataset file not found: {path}")
    except Exception as e:
        raise DataValidationException(f"Failed to read CSV {path}: {str(e)}")

    for col in schema.columns:
        if col not in df.columns:
            raise SchemaException(f"CSV {path.name} is missing column: {col}")

    labels = _numeric_columns(df, schema.label_columns)
    groups = _numeric_columns(df, schema.group_columns)

    # Empty group cells are unknown membership; anything else non-numeric is a bad row
    group_empty = pd.DataFrame(
        {col: df[col].astype(str).str.strip() == "" for col in schema.group_columns},
        index=df.index,
    )
    invalid = labels.isnull().any(axis=1) | (groups.isnull() & ~group_empty).any(axis=1)

    invalid_rows = int(invalid.sum())
    if invalid_rows > 0:
        logger.warning(f"Skipping {invalid_rows} unparsable rows in {path.name}")

    keep = ~invalid
    labels = labels[keep]
    groups = groups[keep]
    group_empty = group_empty[keep]
    texts = df.loc[keep, schema.text_column].tolist()

    label_arr = (labels.to_numpy(dtype=np.float64) >= schema.label_threshold).astype(np.int8)
    member = groups.to_numpy(dtype=np.float64) >= schema.group_threshold
    group_arr = np.where(member, Membership.MEMBER, Membership.NON_MEMBER).astype(np.int8)
    group_arr[group_empty.to_numpy(dtype=bool)] = Membership.UNKNOWN

    n = len(texts)
    ds = Dataset(
        features=vectorize_corpus(texts, schema.dim),
        labels=label_arr.reshape(n, len(schema.label_columns)),
        groups=group_arr.reshape(n, len(schema.group_columns)),
        task_names=list(schema.label_columns),
        group_names=list(schema.group_columns),
        texts=texts,
    )
    logger.info(f"Loaded {ds.n} examples from {path.name} ({invalid_rows} skipped)")
    return ds


def split_dataset(ds: Dataset, fractions: Sequence[float], seed: int) -> List[Dataset]:
    """
    Seeded shuffle split into consecutive parts

    Args:
        ds: Dataset to split
        fractions: Positive fractions summing to 1 (e.g. train / validation / test)
        seed: Shuffle seed

    Returns:
        One Dataset per fraction
    """
    if any(f <= 0 for f in fractions) or not np.isclose(sum(fractions), 1.0):
        raise ConfigurationException(f"Split fractions must be positive and sum to 1: {fractions}")

    order = np.random.default_rng(seed).permutation(ds.n)
    bounds = np.round(np.cumsum(fractions) * ds.n).astype(int)
    bounds[-1] = ds.n
    parts = np.split(order, bounds[:-1])
    return [ds.subset(np.sort(part)) for part in parts]
