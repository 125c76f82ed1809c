"""Dataset model, ingestion, synthesis and stream composition"""
from .dataset import CsvSchema, Dataset, Example, Membership, load_csv, split_dataset
from .streams import (
    Batch,
    CyclicPool,
    PoolKey,
    SideBatch,
    Strategy,
    StreamSet,
    StreamSpec,
    build_streams,
    check_batch_conditioning,
    expected_side_examples,
    next_batch,
)
from .synthetic import SynthConfig, schema_for, synthesize, write_dataset_csv

__all__ = [
    'CsvSchema',
    'Dataset',
    'Example',
    'Membership',
    'load_csv',
    'split_dataset',
    'Batch',
    'CyclicPool',
    'PoolKey',
    'SideBatch',
    'Strategy',
    'StreamSet',
    'StreamSpec',
    'build_streams',
    'check_batch_conditioning',
    'expected_side_examples',
    'next_batch',
    'SynthConfig',
    'schema_for',
    'synthesize',
    'write_dataset_csv',
]
