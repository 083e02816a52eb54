"""Evaluation runs: estimators against analytic distributions.

An estimator name resolves to a callable ``(sample, queries) -> densities``
in original coordinates. :func:`evaluate` scores it at the sample points
(MSE, Monte Carlo KL) and, in 1D, with a two-sample KS test against a draw
from the estimate.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .analytic import AnalyticPdf, LocalShape, parse_distribution
from .baselines import KdeEstimator
from .metrics import EvalReport, kl_mc, ks_two_sample, mse, sample_from_estimate_1d, sampling_grid
from .nn import estimate, smooth_1d
from .samples import SampleSet

ESTIMATORS = ("kde", "dde", "dde-smooth")


@dataclass
class Estimator:
    """Named density estimator bound to an optional model."""

    name: str
    model: object = None

    def __post_init__(self):
        if self.name not in ESTIMATORS:
            raise ValueError(f"unknown estimator {self.name!r}; choose from {', '.join(ESTIMATORS)}")
        if self.name != "kde" and self.model is None:
            raise ValueError(f"estimator {self.name!r} needs a trained model")

    def __call__(self, sample: SampleSet, queries=None) -> np.ndarray:
        q = sample.points if queries is None else queries
        if self.name == "kde":
            return KdeEstimator.silverman(sample)(q)
        raw = estimate(self.model, sample, q)
        if self.name == "dde-smooth":
            return smooth_1d(q, raw)
        return raw


def parse_estimators(text: str, model=None) -> list[Estimator]:
    return [Estimator(name.strip(), model) for name in text.split(",") if name.strip()]


def parse_seeds(text: str) -> list[int]:
    """``"0..9"`` (inclusive range), ``"3"`` or ``"1,4,7"``."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            seeds.extend(range(int(lo), int(hi) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise ValueError(f"no seeds in {text!r}")
    return seeds


def sample_rng(seed: int, dist: str, n: int) -> np.random.Generator:
    # One stream per (seed, distribution, n) so adding runs never shifts others.
    key = [ord(c) for c in dist]
    return np.random.default_rng(np.random.SeedSequence([seed, n, *key]))


def evaluate(est: Estimator, pdf: AnalyticPdf, sample: SampleSet, seed: int,
             rng: np.random.Generator | None = None) -> EvalReport:
    """Score one estimator on one sample; the KS draw needs ``rng`` and d = 1."""
    t0 = time.perf_counter()
    p_hat = est(sample)
    elapsed = time.perf_counter() - t0
    truth = sample.truth_original
    ks_p = None
    if rng is not None and sample.dim == 1:
        draw = sample_from_estimate_1d(lambda g: est(sample, g), sample.points[:, 0],
                                       sample.n, rng)
        ks_p = ks_two_sample(sample.points[:, 0], draw)[1]
    return EvalReport(est.name, pdf.name, sample.n, sample.dim, seed,
                      mse(truth, p_hat), kl_mc(truth, p_hat), ks_p, elapsed)


def run_eval(estimators, dists, sizes, seeds, ks: bool = True):
    """Cartesian product of runs; reports sorted by (estimator, distribution, n, seed)."""
    reports = []
    for dist in dists:
        for pdf in parse_distribution(dist):
            for n in sizes:
                for seed in seeds:
                    sample = pdf.sample(n, sample_rng(seed, pdf.name, n))
                    for est in estimators:
                        rng = sample_rng(seed + 1_000_003, pdf.name, n) if ks else None
                        reports.append(evaluate(est, pdf, sample, seed, rng))
    reports.sort(key=lambda r: (r.estimator, r.distribution, r.n, r.seed))
    return reports


def plot_data(estimators, pdf: AnalyticPdf, sample: SampleSet) -> dict:
    """Columns for a 1D figure: grid, truth and every estimate on the grid."""
    grid = sampling_grid(sample.points[:, 0])
    cols = {"x": grid, "p_true": pdf.density(grid)}
    for est in estimators:
        cols[est.name] = est(sample, grid)
    return cols


def local_shape_block(est: Estimator, n: int, seed: int = 0):
    """Estimate at ``t`` for each of the nine local-shape PDFs plus their mean."""
    rows = []
    for i in range(1, 10):
        pdf = LocalShape(i)
        sample = pdf.sample(n, sample_rng(seed, pdf.name, n))
        rows.append((i, pdf.name, pdf.t, float(est(sample, np.array([[pdf.t]]))[0])))
    mean = float(np.mean([r[3] for r in rows]))
    return rows, mean
