"""Random ground-truth PDFs built from 1D base functions."""

from .base import (
    EPS,
    ROWS,
    TAGS,
    BaseFunctionSpec,
    TagFilter,
    eval_base,
    sample_base_function,
)
from .dataset import (
    Dataset,
    GenerationConfig,
    LoadedDataset,
    generate_dataset,
    generate_one,
    read_dataset,
    read_sample_csv,
    write_dataset,
    write_sample_csv,
)
from .expr import Combine, FunctionExpr, Leaf, compose_1d, compose_highdim, join
from .pdf import SyntheticPdf, normalize, rejection_sample

__all__ = [
    "EPS", "ROWS", "TAGS", "BaseFunctionSpec", "TagFilter", "eval_base",
    "sample_base_function", "Dataset", "GenerationConfig", "LoadedDataset",
    "generate_dataset", "generate_one", "read_dataset", "read_sample_csv",
    "write_dataset", "write_sample_csv", "Combine", "FunctionExpr", "Leaf",
    "compose_1d", "compose_highdim", "join", "SyntheticPdf", "normalize",
    "rejection_sample",
]
