"""Gaussian product-kernel KDE with Silverman's rule-of-thumb bandwidth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSample
from .samples import SampleSet, as_points

_CHUNK_ELEMS = 4_000_000


def silverman_bandwidth(sample) -> np.ndarray:
    """Per-axis ``h_j = sigma_j * (4 / ((d + 2) n)) ** (1 / (d + 4))`` with ddof=1 sigmas."""
    pts = as_points(sample)
    n, d = pts.shape
    if n < 2:
        raise DegenerateSample(f"Silverman bandwidth needs n >= 2, got {n}")
    sigma = pts.std(axis=0, ddof=1)
    if np.any(sigma == 0):
        raise DegenerateSample("zero spread on at least one axis")
    return sigma * (4.0 / ((d + 2) * n)) ** (1.0 / (d + 4))


@dataclass
class KdeEstimator:
    points: np.ndarray
    bandwidth: np.ndarray

    def __post_init__(self):
        self.points = as_points(self.points)
        self.bandwidth = np.broadcast_to(
            np.asarray(self.bandwidth, float), (self.points.shape[1],)
        ).copy()
        if np.any(self.bandwidth <= 0):
            raise ValueError("bandwidths must be positive")

    @classmethod
    def silverman(cls, sample) -> "KdeEstimator":
        pts = sample.points if isinstance(sample, SampleSet) else as_points(sample)
        return cls(pts, silverman_bandwidth(pts))

    def __call__(self, queries) -> np.ndarray:
        return kde_estimate(self, queries)


def kde_estimate(est: KdeEstimator, queries) -> np.ndarray:
    """Exact ``(1/n) sum_i prod_j phi((x_j - x_ij) / h_j) / h_j`` at every query."""
    q = as_points(queries)
    pts, h = est.points, est.bandwidth
    n, d = pts.shape
    norm = 1.0 / (n * np.prod(h) * (2 * np.pi) ** (d / 2))
    out = np.empty(q.shape[0])
    rows = max(1, _CHUNK_ELEMS // n)
    for s in range(0, q.shape[0], rows):
        u = (q[s : s + rows, None, :] - pts[None, :, :]) / h
        out[s : s + rows] = np.exp(-0.5 * np.einsum("mnd,mnd->mn", u, u)).sum(axis=1) * norm
    return out
