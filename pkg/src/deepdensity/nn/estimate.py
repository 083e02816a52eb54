"""Inference pipeline and the 1D spline post-smoother."""

from __future__ import annotations

import numpy as np
from scipy.interpolate import UnivariateSpline

from ..errors import ShapeMismatch
from ..neighbors import build_index, knn_distances
from ..samples import SampleSet, as_points
from .mlp import MlpModel

SMOOTH_COEF = 0.05


def estimate(model: MlpModel, sample, queries=None) -> np.ndarray:
    """Density estimates at ``queries`` (default: the sample points themselves).

    Both sets are mapped with the sample's unit-range transform, fed through
    the k-NN features (rescaled to the model's training sample size) and the
    network, and the result is divided by the transform's Jacobian to return
    densities in original coordinates.
    """
    if not isinstance(sample, SampleSet):
        sample = SampleSet.from_points(sample)
    if sample.dim != model.config.dim:
        raise ShapeMismatch(f"model is for d={model.config.dim}, sample has d={sample.dim}")
    q = sample.points if queries is None else as_points(queries)
    if q.shape[1] != sample.dim:
        raise ShapeMismatch(f"query dimension {q.shape[1]} != sample dimension {sample.dim}")
    index = build_index(sample.unit_points)
    feats = knn_distances(index, sample.to_unit(q), model.config.k)
    feats *= model.config.feature_scale(sample.n)
    return model.predict(feats) / sample.jacobian


def smooth_1d(query_xs, raw, coef: float = SMOOTH_COEF) -> np.ndarray:
    """Cubic smoothing spline through ``(x, raw)`` with residual budget ``m * var(raw) * coef``.

    Repeated ``x`` values are merged (mean value, weight ``sqrt(count)``).
    Output is clamped at zero. Multi-dimensional queries pass through
    unchanged.
    """
    raw = np.asarray(raw, float).ravel()
    xs = np.asarray(query_xs, float)
    if xs.ndim == 2:
        if xs.shape[1] != 1:
            return raw.copy()
        xs = xs[:, 0]
    if xs.shape[0] != raw.shape[0]:
        raise ShapeMismatch("one raw estimate per query is required")
    m = raw.shape[0]
    if m == 0 or np.ptp(raw) == 0:
        return np.maximum(raw, 0.0)
    budget = m * float(np.var(raw)) * coef
    ux, inv, counts = np.unique(xs, return_inverse=True, return_counts=True)
    if budget == 0 or ux.size <= 3:
        return np.maximum(raw, 0.0)
    uy = np.bincount(inv, weights=raw) / counts
    spline = UnivariateSpline(ux, uy, w=np.sqrt(counts), k=3, s=budget)
    return np.maximum(spline(xs), 0.0)
