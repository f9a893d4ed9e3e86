"""Sparse coding with a coefficient-variance (rate) penalty: ADMM sparse coding,
dictionary learning, and a block image codec built on them."""

from .admm import SparseCodingParams, sparse_code
from .dictlearn import Dictionary, LearnParams, learn
from .pursuit import PursuitStop, omp, omp_batch

__version__ = "0.1.0"

__all__ = [
    "Dictionary",
    "LearnParams",
    "PursuitStop",
    "SparseCodingParams",
    "learn",
    "omp",
    "omp_batch",
    "sparse_code",
]
