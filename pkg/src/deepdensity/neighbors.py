"""Exact k-nearest-neighbour distance features.

For each query the feature row is the ascending list of Euclidean distances
to its ``k`` nearest sample points, skipping points that coincide exactly
with the query (distance zero). Duplicated sample points other than the
query's own coordinates are kept.

Both search paths accumulate squared coordinate differences one axis at a
time in axis order, so the kd-tree and the brute-force scan produce
bit-identical distances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientPoints, ShapeMismatch
from .samples import SampleSet, as_points

LEAF_SIZE = 32
_QUERY_CHUNK = 2048
_BRUTE_CHUNK_ELEMS = 4_000_000


def _sqdist(q: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Squared distances between ``q[..., d]`` and ``x[..., d]``, summed axis by axis."""
    diff = q[..., 0] - x[..., 0]
    acc = diff * diff
    for j in range(1, q.shape[-1]):
        diff = q[..., j] - x[..., j]
        acc += diff * diff
    return acc


def _check(points, queries, k):
    if k < 1:
        raise ValueError("k must be >= 1")
    if queries.shape[1] != points.shape[1]:
        raise ShapeMismatch(
            f"query dimension {queries.shape[1]} != sample dimension {points.shape[1]}"
        )


def _finish(dist, idx, k, return_indices):
    """Select the ``k`` best finite candidates per row, ties by index."""
    if return_indices:
        order = np.lexsort((idx, dist), axis=-1)[:, :k]
        d = np.take_along_axis(dist, order, axis=1)
        i = np.take_along_axis(idx, order, axis=1)
    else:
        if dist.shape[1] > k:
            dist = np.partition(dist, k - 1, axis=1)[:, :k]
        d = np.sort(dist, axis=1)
        i = None
    if d.shape[1] < k or not np.all(np.isfinite(d[:, -1])):
        avail = np.isfinite(d).sum(axis=1).min() if d.size else 0
        raise InsufficientPoints(k, int(avail))
    return (d, i) if return_indices else d


def brute_force_knn(sample, queries, k: int, return_indices: bool = False):
    """Exhaustive O(n*m) k-NN distances; the reference for :class:`KDTree`."""
    pts = as_points(sample)
    q = as_points(queries)
    _check(pts, q, k)
    if pts.shape[0] < k:
        raise InsufficientPoints(k, pts.shape[0])
    rows = max(1, _BRUTE_CHUNK_ELEMS // max(pts.shape[0], 1))
    out_d, out_i = [], []
    for s in range(0, q.shape[0], rows):
        qc = q[s : s + rows]
        dist = np.sqrt(_sqdist(qc[:, None, :], pts[None, :, :]))
        dist[dist == 0] = np.inf
        idx = np.broadcast_to(np.arange(pts.shape[0]), dist.shape)
        res = _finish(dist, idx, k, return_indices)
        if return_indices:
            out_d.append(res[0])
            out_i.append(res[1])
        else:
            out_d.append(res)
    if not out_d:
        empty = np.zeros((0, k))
        return (empty, empty.astype(int)) if return_indices else empty
    d = np.concatenate(out_d)
    return (d, np.concatenate(out_i)) if return_indices else d


@dataclass(frozen=True)
class KDTree:
    """Median-split kd-tree with leaf buckets of at most ``leaf_size`` points.

    Built once and never mutated. Search visits leaves in order of their
    bounding-box distance: a first pass over the nearest leaves bounds the
    k-th distance, a second pass adds every leaf whose box lies within that
    bound.
    """

    points: np.ndarray
    perm: np.ndarray      # tree order -> original index
    starts: np.ndarray    # leaf start offsets into perm
    stops: np.ndarray
    box_lo: np.ndarray    # (n_leaves, d) tight bounding boxes
    box_hi: np.ndarray

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def n_leaves(self) -> int:
        return self.starts.shape[0]

    def query(self, queries, k: int, return_indices: bool = False):
        q = as_points(queries)
        _check(self.points, q, k)
        if self.n < k:
            raise InsufficientPoints(k, self.n)
        out_d, out_i = [], []
        for s in range(0, q.shape[0], _QUERY_CHUNK):
            res = self._query_chunk(q[s : s + _QUERY_CHUNK], k, return_indices)
            if return_indices:
                out_d.append(res[0])
                out_i.append(res[1])
            else:
                out_d.append(res)
        if not out_d:
            empty = np.zeros((0, k))
            return (empty, empty.astype(int)) if return_indices else empty
        d = np.concatenate(out_d)
        return (d, np.concatenate(out_i)) if return_indices else d

    def _box_dist(self, q):
        gap_lo = self.box_lo[None, :, :] - q[:, None, :]
        gap_hi = q[:, None, :] - self.box_hi[None, :, :]
        gap = np.maximum(np.maximum(gap_lo, gap_hi), 0.0)
        return np.sqrt(_sqdist(gap, np.zeros_like(gap)))

    def _gather(self, q, visit):
        """Distances from each query to every point of the leaves flagged in ``visit``."""
        sizes = self.stops - self.starts
        counts = visit.astype(np.int64) @ sizes
        width = int(counts.max()) if counts.size else 0
        dist = np.full((q.shape[0], max(width, 1)), np.inf)
        idx = np.full((q.shape[0], max(width, 1)), -1, dtype=np.int64)
        fill = np.zeros(q.shape[0], dtype=np.int64)
        for leaf in np.flatnonzero(visit.any(axis=0)):
            rows = np.flatnonzero(visit[:, leaf])
            members = self.perm[self.starts[leaf] : self.stops[leaf]]
            dd = np.sqrt(_sqdist(q[rows][:, None, :], self.points[members][None, :, :]))
            dd[dd == 0] = np.inf
            cols = fill[rows][:, None] + np.arange(members.size)
            dist[rows[:, None], cols] = dd
            idx[rows[:, None], cols] = members
            fill[rows] += members.size
        return dist, idx

    def _query_chunk(self, q, k, return_indices):
        lb = self._box_dist(q)
        order = np.argsort(lb, axis=1, kind="stable")
        sizes = self.stops - self.starts
        # First pass: nearest leaves until k + 1 points are covered (one spare for a coincident query).
        cum = np.cumsum(sizes[order], axis=1)
        n_first = np.minimum((cum < k + 1).sum(axis=1) + 1, self.n_leaves)
        first = np.zeros_like(lb, dtype=bool)
        ranks = np.arange(self.n_leaves)[None, :] < n_first[:, None]
        np.put_along_axis(first, order, ranks, axis=1)
        dist, _ = self._gather(q, first)
        if dist.shape[1] >= k:
            bound = np.partition(dist, k - 1, axis=1)[:, k - 1]
        else:
            bound = np.full(q.shape[0], np.inf)
        # Second pass: every leaf that could hold a point at or inside the bound.
        visit = first | (lb <= bound[:, None])
        dist, idx = self._gather(q, visit)
        return _finish(dist, idx, k, return_indices)


def build_index(sample, leaf_size: int = LEAF_SIZE) -> KDTree:
    """Build a kd-tree, splitting at the median of the widest axis."""
    pts = np.ascontiguousarray(as_points(sample), dtype=np.float64)
    n = pts.shape[0]
    if n < 1:
        raise ValueError("cannot index an empty sample")
    perm = np.arange(n)
    leaves = []
    stack = [(0, n)]
    while stack:
        lo, hi = stack.pop()
        if hi - lo <= leaf_size:
            leaves.append((lo, hi))
            continue
        block = pts[perm[lo:hi]]
        axis = int(np.argmax(block.max(axis=0) - block.min(axis=0)))
        mid = (hi - lo) // 2
        part = np.argpartition(block[:, axis], mid, kind="introselect")
        perm[lo:hi] = perm[lo:hi][part]
        stack.append((lo + mid, hi))
        stack.append((lo, lo + mid))
    leaves.sort()
    starts = np.array([a for a, _ in leaves], dtype=np.int64)
    stops = np.array([b for _, b in leaves], dtype=np.int64)
    box_lo = np.stack([pts[perm[a:b]].min(axis=0) for a, b in leaves])
    box_hi = np.stack([pts[perm[a:b]].max(axis=0) for a, b in leaves])
    return KDTree(pts, perm, starts, stops, box_lo, box_hi)


def knn_distances(index: KDTree, queries, k: int, return_indices: bool = False):
    """``(m, k)`` sorted distances from each query to its k nearest non-identical points.

    Raises
    ------
    InsufficientPoints
        If some query has fewer than ``k`` non-coincident sample points.
    """
    if isinstance(queries, SampleSet):
        queries = queries.points
    return index.query(queries, k, return_indices)


def write_features_csv(path, features: np.ndarray) -> None:
    k = features.shape[1]
    header = ",".join(f"d_{j + 1}" for j in range(k))
    np.savetxt(path, features, delimiter=",", header=header, comments="", fmt="%.17g")


def read_features_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
