"""Synthetic training corpora: generation, splitting and on-disk layout.

A dataset directory holds ``manifest.json`` plus, per PDF, ``sample_%06d.csv``
(header ``x0,...,x{d-1},p_true``; coordinates and densities in unit-range
space) and ``pdf_%06d.json`` (the normalised expression tree).
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DataError, DegeneratePdf, LowAcceptance, RetryExhausted
from ..samples import SampleSet
from .base import TagFilter
from .expr import HIGHDIM_MIN_BASE_MAX, HIGHDIM_THRESHOLD, NC_RANGE, compose_highdim
from .pdf import SyntheticPdf, normalize, rejection_sample

log = logging.getLogger(__name__)

FORMAT = "dde-dataset-v1"
EXTENT_RANGE = (1.0, 10.0)
MAX_REGENERATIONS = 1000


@dataclass
class GenerationConfig:
    dim: int = 1
    n_functions: int = 1000
    points_per_sample: int = 1000
    composition_scheme: str = "A"
    include_tags: list = field(default_factory=list)
    exclude_tags: list = field(default_factory=list)
    seed: int = 0
    min_base_max: float | None = None

    def __post_init__(self):
        self.include_tags = sorted(set(self.include_tags))
        self.exclude_tags = sorted(set(self.exclude_tags))
        if self.dim < 1 or self.n_functions < 1 or self.points_per_sample < 1:
            raise ValueError("dim, n_functions and points_per_sample must be positive")
        if self.composition_scheme not in ("A", "B"):
            raise ValueError("composition_scheme must be 'A' or 'B'")
        self.filters  # validates tags
        if self.dim >= HIGHDIM_THRESHOLD:
            self.min_base_max = HIGHDIM_MIN_BASE_MAX

    @property
    def filters(self) -> TagFilter:
        return TagFilter(frozenset(self.include_tags), frozenset(self.exclude_tags))


@dataclass
class Dataset:
    config: GenerationConfig
    samples: list[SampleSet]
    pdfs: list[SyntheticPdf]
    train_idx: list[int]
    val_idx: list[int]
    retries: int = 0

    @property
    def train(self) -> list[SampleSet]:
        return [self.samples[i] for i in self.train_idx]

    @property
    def validation(self) -> list[SampleSet]:
        return [self.samples[i] for i in self.val_idx]


def pdf_rng(seed: int, index: int, attempt: int = 0) -> np.random.Generator:
    """Child generator for one PDF; independent of generation order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index, attempt)))


def random_pdf(rng: np.random.Generator, config: GenerationConfig) -> SyntheticPdf:
    """Draw extents, ``n_c`` and an expression, then normalise it."""
    d = config.dim
    extents = rng.uniform(*EXTENT_RANGE, size=d)
    n_c = int(rng.integers(NC_RANGE[0], NC_RANGE[1] + 1))
    expr = compose_highdim(rng, d, n_c, extents, config.composition_scheme, config.filters)
    return normalize(expr, np.zeros(d), extents, rng=rng)


def generate_one(config: GenerationConfig, index: int):
    """Generate PDF ``index``, regenerating on degenerate outcomes.

    Returns ``(pdf, sample, attempts)``.
    """
    for attempt in range(MAX_REGENERATIONS):
        rng = pdf_rng(config.seed, index, attempt)
        try:
            pdf = random_pdf(rng, config)
            sample = rejection_sample(pdf, config.points_per_sample, rng)
        except (DegeneratePdf, LowAcceptance, RetryExhausted) as exc:
            log.debug("pdf %d attempt %d rejected: %s", index, attempt, exc)
            continue
        sample.meta.update(index=index, attempt=attempt)
        return pdf, sample, attempt
    raise RetryExhausted(f"pdf {index}: no usable function in {MAX_REGENERATIONS} attempts")


def split_indices(n: int) -> tuple[list[int], list[int]]:
    """Last quarter of the PDFs is the validation split."""
    n_val = n // 4
    return list(range(n - n_val)), list(range(n - n_val, n))


def generate_dataset(config: GenerationConfig) -> Dataset:
    samples, pdfs, retries = [], [], 0
    for i in range(config.n_functions):
        pdf, sample, attempts = generate_one(config, i)
        pdfs.append(pdf)
        samples.append(sample)
        retries += attempts
    train, val = split_indices(config.n_functions)
    return Dataset(config, samples, pdfs, train, val, retries)


def _fmt(a: np.ndarray) -> str:
    return ",".join(format(float(v), ".17g") for v in a)


def write_sample_csv(path, unit_points: np.ndarray, truth: np.ndarray | None) -> None:
    d = unit_points.shape[1]
    cols = [f"x{j}" for j in range(d)]
    rows = unit_points if truth is None else np.column_stack([unit_points, truth])
    if truth is not None:
        cols.append("p_true")
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(_fmt(row) + "\n")


def read_sample_csv(path) -> tuple[np.ndarray, np.ndarray | None, list[str]]:
    """Read a point CSV. Returns ``(points, p_true or None, header)``."""
    path = Path(path)
    try:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if data.shape[1] != len(header):
        raise DataError(f"{path}: header has {len(header)} columns, rows have {data.shape[1]}")
    xcols = [i for i, h in enumerate(header) if h.startswith("x")]
    truth = data[:, header.index("p_true")] if "p_true" in header else None
    return data[:, xcols], truth, header


def write_dataset(ds: Dataset, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, (pdf, s) in enumerate(zip(ds.pdfs, ds.samples)):
        write_sample_csv(out / f"sample_{i:06d}.csv", s.unit_points, s.density_truth)
        (out / f"pdf_{i:06d}.json").write_text(json.dumps(pdf.to_dict(), sort_keys=True))
        entries.append(
            {
                "file": f"sample_{i:06d}.csv",
                "pdf": f"pdf_{i:06d}.json",
                "upper": pdf.upper.tolist(),
                "z": pdf.z,
                "z_method": pdf.z_method,
                "attempt": int(s.meta.get("attempt", 0)),
            }
        )
    manifest = {
        "format": FORMAT,
        "config": asdict(ds.config),
        "seed": ds.config.seed,
        "counts": {
            "functions": len(ds.samples),
            "train": len(ds.train_idx),
            "validation": len(ds.val_idx),
            "points_per_sample": ds.config.points_per_sample,
            "regenerations": ds.retries,
        },
        "split": {"train": ds.train_idx, "validation": ds.val_idx},
        "samples": entries,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return out


@dataclass
class LoadedDataset:
    """Unit-range points and truths read back from a dataset directory."""

    manifest: dict
    points: list[np.ndarray]
    truths: list[np.ndarray]

    @property
    def train_idx(self) -> list[int]:
        return self.manifest["split"]["train"]

    @property
    def val_idx(self) -> list[int]:
        return self.manifest["split"]["validation"]

    @property
    def dim(self) -> int:
        return int(self.manifest["config"]["dim"])

    def sample(self, i: int) -> SampleSet:
        return SampleSet(self.points[i], 0.0, 1.0, self.truths[i], {"index": i})


def read_dataset(path) -> LoadedDataset:
    path = Path(path)
    try:
        manifest = json.loads((path / "manifest.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: unreadable manifest: {exc}") from exc
    if manifest.get("format") != FORMAT:
        raise DataError(f"{path}: unsupported dataset format {manifest.get('format')!r}")
    pts, truths = [], []
    for entry in manifest["samples"]:
        x, t, _ = read_sample_csv(path / entry["file"])
        if t is None:
            raise DataError(f"{entry['file']}: missing p_true column")
        pts.append(x)
        truths.append(t)
    return LoadedDataset(manifest, pts, truths)
