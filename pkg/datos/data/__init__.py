"""Data layer for DATOS Lab: datasets, trace rows, CSV output and the reference cache."""

from .cache import ReferenceCache, config_hash
from .libsvm import Dataset, LabelRule, LibsvmFormatError, Shards, read_libsvm, split_dataset
from .models import ReferenceRow, RunTrace, TraceRow
from .traces import write_compare, write_metric_files, write_trace

__all__ = [
    "ReferenceCache",
    "config_hash",
    "Dataset",
    "LabelRule",
    "LibsvmFormatError",
    "Shards",
    "read_libsvm",
    "split_dataset",
    "ReferenceRow",
    "RunTrace",
    "TraceRow",
    "write_compare",
    "write_metric_files",
    "write_trace",
]
