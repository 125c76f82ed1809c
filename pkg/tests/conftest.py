import json
from pathlib import Path

import numpy as np
import pytest

from data.dataset import CsvSchema
from data.synthetic import SynthConfig, synthesize
from config.config import CIVIL_COMMENTS_GROUPS, CIVIL_COMMENTS_LABELS, CIVIL_COMMENTS_TEXT_COLUMN
from model.mlp import init_params

FIXTURES = Path(__file__).parent / "fixtures"

SMALL_DIM = 64


@pytest.fixture
def civil_csv() -> Path:
    return FIXTURES / "civil_sample.csv"


@pytest.fixture
def civil_expected() -> dict:
    return json.loads((FIXTURES / "civil_sample_expected.json").read_text(encoding="utf-8"))


@pytest.fixture
def civil_schema() -> CsvSchema:
    return CsvSchema(
        text_column=CIVIL_COMMENTS_TEXT_COLUMN,
        label_columns=tuple(CIVIL_COMMENTS_LABELS),
        group_columns=tuple(CIVIL_COMMENTS_GROUPS),
        dim=SMALL_DIM,
    )


@pytest.fixture(scope="session")
def small_spec() -> SynthConfig:
    return SynthConfig(
        num_tasks=2,
        num_groups=2,
        n=600,
        dim=SMALL_DIM,
        group_prevalence=0.3,
        positive_rate=0.2,
        bias=[[0.6, 0.0], [0.4, 0.0]],
        neutral_tokens=6,
        neutral_vocab=60,
        task_vocab=8,
        group_vocab=8,
    )


@pytest.fixture(scope="session")
def small_dataset(small_spec):
    return synthesize(small_spec, seed=7)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def small_params(rng):
    return init_params(SMALL_DIM, 8, 2, rng)
