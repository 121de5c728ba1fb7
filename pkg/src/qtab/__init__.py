"""JPEG Q-table autotuning toolkit.

Compresses image datasets with arbitrary 8x8 quantization tables, measures
compression rate and task accuracy through pluggable evaluators, and
searches for Pareto-optimal tables with sorted random search, bounded
random search, Bayesian optimization, and a multi-armed-bandit composite
of classic heuristics.
"""

from .qtable import (
    QTable,
    SampleRange,
    Bounds,
    FrequencyBands,
    standard_table,
    scale_by_quality,
    sorted_random_sample,
    compute_bounds,
    default_bands,
)
from .jpeg import encode, decode, psnr, JpegStream

__all__ = [
    "QTable",
    "SampleRange",
    "Bounds",
    "FrequencyBands",
    "standard_table",
    "scale_by_quality",
    "sorted_random_sample",
    "compute_bounds",
    "default_bands",
    "encode",
    "decode",
    "psnr",
    "JpegStream",
]

__version__ = "0.1.0"
