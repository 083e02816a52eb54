"""Point samples with unit-range scaling metadata."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatch


def as_points(x) -> np.ndarray:
    """Coerce ``x`` to a float64 ``(n, d)`` array; 1D input becomes ``(n, 1)``."""
    if isinstance(x, SampleSet):
        return x.points
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr[:, None]
    elif arr.ndim != 2:
        raise ShapeMismatch(f"expected a (n, d) array, got shape {arr.shape}")
    return arr


@dataclass
class SampleSet:
    """``n`` points in a ``d``-dimensional box.

    ``points`` are stored in original coordinates. ``offset`` and ``width``
    define the per-axis affine map ``u = (x - offset) / width`` onto the unit
    box. ``density_truth``, when known, holds ground-truth density values in
    *unit-range* coordinates, i.e. the original density times ``prod(width)``.
    """

    points: np.ndarray
    offset: np.ndarray
    width: np.ndarray
    density_truth: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = as_points(self.points)
        d = self.points.shape[1]
        self.offset = np.broadcast_to(np.asarray(self.offset, float), (d,)).copy()
        self.width = np.broadcast_to(np.asarray(self.width, float), (d,)).copy()
        if np.any(self.width <= 0):
            raise ShapeMismatch("scale widths must be positive")
        if self.density_truth is not None:
            self.density_truth = np.asarray(self.density_truth, dtype=float).ravel()
            if self.density_truth.shape[0] != self.points.shape[0]:
                raise ShapeMismatch("density_truth length differs from point count")

    @classmethod
    def from_points(cls, points, density=None, bounds=None, **meta) -> "SampleSet":
        """Build a sample, fitting the unit-range map to ``bounds`` or the data.

        Parameters
        ----------
        points : array_like
            ``(n, d)`` or ``(n,)`` coordinates.
        density : array_like, optional
            True density at the points in *original* coordinates.
        bounds : tuple of array_like, optional
            ``(lower, upper)`` box; defaults to the per-axis min and max of the
            points. Axes with zero extent get width 1.
        """
        pts = as_points(points)
        if bounds is None:
            lo = pts.min(axis=0)
            hi = pts.max(axis=0)
        else:
            lo = np.broadcast_to(np.asarray(bounds[0], float), (pts.shape[1],))
            hi = np.broadcast_to(np.asarray(bounds[1], float), (pts.shape[1],))
        width = hi - lo
        width = np.where(width > 0, width, 1.0)
        truth = None
        if density is not None:
            truth = np.asarray(density, float).ravel() * float(np.prod(width))
        return cls(pts, lo, width, truth, dict(meta))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def jacobian(self) -> float:
        """Volume of the scaling box; original density = unit density / jacobian."""
        return float(np.prod(self.width))

    def to_unit(self, x=None) -> np.ndarray:
        """Map ``x`` (default: the sample's own points) into unit-range coordinates."""
        x = self.points if x is None else as_points(x)
        if x.shape[1] != self.dim:
            raise ShapeMismatch(f"dimension {x.shape[1]} != sample dimension {self.dim}")
        return (x - self.offset) / self.width

    def from_unit(self, u) -> np.ndarray:
        return as_points(u) * self.width + self.offset

    @property
    def unit_points(self) -> np.ndarray:
        return self.to_unit()

    @property
    def truth_original(self) -> np.ndarray | None:
        """Ground-truth density in original coordinates, if known."""
        if self.density_truth is None:
            return None
        return self.density_truth / self.jacobian
