"""Normalised synthetic PDFs and exact rejection sampling from them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegeneratePdf, LowAcceptance, RetryExhausted
from ..samples import SampleSet
from .expr import FunctionExpr, eval_node_1d

# (uniform nodes, extra geometric nodes near the lower edge) per axis, by dimension.
QUAD_NODES = {1: (4096, 512), 2: (512, 64), 3: (128, 48)}
GEOM_START = 1e-10
MC_PROBES = 1_000_000
ENVELOPE_PROBES = 100_000
ENVELOPE_FACTOR = 1.2
MIN_ACCEPTANCE = 1e-4
ACCEPTANCE_WINDOW = 1_000_000
MAX_RESTARTS = 100
_CHUNK = 100_000


def axis_nodes(lo: float, hi: float, n_uniform: int, n_geom: int) -> np.ndarray:
    """Uniform nodes plus geometrically graded nodes clustered at ``lo``.

    The graded part resolves the near-singular rows (``1/(4x+eps)``) whose
    scale at the origin is far below the uniform spacing.
    """
    width = hi - lo
    nodes = np.linspace(lo, hi, n_uniform)
    if n_geom:
        nodes = np.concatenate([nodes, lo + width * np.geomspace(GEOM_START, 1.0, n_geom)])
    return np.unique(nodes)


def trapezoid_weights(x: np.ndarray) -> np.ndarray:
    """Composite trapezoid weights for (possibly non-uniform) sorted nodes."""
    w = np.zeros_like(x)
    dx = np.diff(x)
    w[:-1] += dx / 2
    w[1:] += dx / 2
    return w


def _coarse(x):
    idx = np.arange(0, x.size, 2)
    if idx[-1] != x.size - 1:
        idx = np.append(idx, x.size - 1)
    return idx


def _tensor_integral(values: np.ndarray, weights: list[np.ndarray]) -> float:
    out = values
    for w in reversed(weights):
        out = out @ w
    return float(out)


@dataclass
class SyntheticPdf:
    """``expr / z`` on the box ``[lower, upper]``; zero outside it."""

    expr: FunctionExpr
    lower: np.ndarray
    upper: np.ndarray
    z: float
    z_method: str
    z_rel_error: float
    f_max: float

    @property
    def dim(self) -> int:
        return self.expr.dim

    @property
    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    @property
    def max_density(self) -> float:
        return self.f_max / self.z

    def __call__(self, x) -> np.ndarray:
        return self.density(x)

    def density(self, x) -> np.ndarray:
        pts = np.asarray(x, float)
        if pts.ndim == 1:
            pts = pts[:, None] if self.dim == 1 else pts[None, :]
        inside = np.all((pts >= self.lower) & (pts <= self.upper), axis=1)
        out = np.zeros(pts.shape[0])
        if inside.any():
            out[inside] = self.expr(pts[inside]) / self.z
        return out

    def cdf_grid(self, n_uniform: int = 4096, n_geom: int = 512):
        """Nodes and cumulative-trapezoid CDF values for a 1D PDF."""
        if self.dim != 1:
            raise ValueError("cdf_grid is only defined for 1D PDFs")
        x = axis_nodes(self.lower[0], self.upper[0], n_uniform, n_geom)
        f = self.density(x)
        c = np.concatenate([[0.0], np.cumsum(np.diff(x) * (f[1:] + f[:-1]) / 2)])
        return x, c / c[-1]

    def to_dict(self) -> dict:
        return {
            "expr": self.expr.to_dict(),
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "z": self.z,
            "z_method": self.z_method,
            "z_rel_error": self.z_rel_error,
            "f_max": self.f_max,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticPdf":
        return cls(
            FunctionExpr.from_dict(d["expr"]),
            np.asarray(d["lower"], float),
            np.asarray(d["upper"], float),
            float(d["z"]),
            d["z_method"],
            float(d["z_rel_error"]),
            float(d["f_max"]),
        )


def _check_z(z):
    if not np.isfinite(z) or z <= 1e-300:
        raise DegeneratePdf(f"normalization constant {z!r} is degenerate")


def _separable(expr, lower, upper):
    groups = expr.separable_factors()
    if groups is None:
        return None
    z, f_max, rel = 1.0, 1.0, 0.0
    n_uni, n_geo = QUAD_NODES[1]
    for axis in range(expr.dim):
        lo, hi = lower[axis], upper[axis]
        if axis not in groups:
            z *= hi - lo
            continue
        x = axis_nodes(lo, hi, n_uni, n_geo)
        f = np.ones_like(x)
        for factor in groups[axis]:
            f = f * eval_node_1d(factor, x)
        fine = float(trapezoid_weights(x) @ f)
        idx = _coarse(x)
        coarse = float(trapezoid_weights(x[idx]) @ f[idx])
        z *= fine
        f_max *= float(f.max())
        rel += abs(fine - coarse) / 3 / fine if fine > 0 else np.inf
    return z, f_max, rel


def normalize(expr: FunctionExpr, lower, upper=None, rng=None) -> SyntheticPdf:
    """Compute the normalisation constant of ``expr`` over a box.

    Tensor trapezoid quadrature is used for ``d <= 3`` (and per axis for
    product-separable functions), Monte Carlo with one million uniform probes
    above that. ``z_rel_error`` is a Richardson estimate (fine vs. every-other
    node) for quadrature and the standard error for Monte Carlo.

    Parameters
    ----------
    expr : FunctionExpr
    lower, upper : array_like
        Box corners. A single argument is read as the upper corner with the
        lower corner at the origin.
    rng : numpy.random.Generator, optional
        Only used by the Monte Carlo path; defaults to a fixed seed.
    """
    d = expr.dim
    if upper is None:
        lower, upper = np.zeros(d), lower
    lower = np.broadcast_to(np.asarray(lower, float), (d,)).copy()
    upper = np.broadcast_to(np.asarray(upper, float), (d,)).copy()

    sep = _separable(expr, lower, upper)
    if sep is not None:
        z, f_max, rel = sep
        _check_z(z)
        return SyntheticPdf(expr, lower, upper, z, "grid_quadrature", rel, f_max)

    if d <= 3:
        n_uni, n_geo = QUAD_NODES[d]
        axes = [axis_nodes(lower[i], upper[i], n_uni, n_geo) for i in range(d)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        vals = expr(pts).reshape(mesh[0].shape)
        fine = _tensor_integral(vals, [trapezoid_weights(a) for a in axes])
        idx = [_coarse(a) for a in axes]
        coarse = _tensor_integral(
            vals[np.ix_(*idx)], [trapezoid_weights(a[i]) for a, i in zip(axes, idx)]
        )
        _check_z(fine)
        rel = abs(fine - coarse) / 3 / fine
        return SyntheticPdf(expr, lower, upper, fine, "grid_quadrature", rel, float(vals.max()))

    rng = np.random.default_rng(0) if rng is None else rng
    width = upper - lower
    vol = float(np.prod(width))
    total = total_sq = 0.0
    for start in range(0, MC_PROBES, _CHUNK):
        m = min(_CHUNK, MC_PROBES - start)
        f = expr(lower + width * rng.random((m, d)))
        total += float(f.sum())
        total_sq += float((f * f).sum())
    mean = total / MC_PROBES
    var = max(total_sq / MC_PROBES - mean * mean, 0.0)
    z = vol * mean
    _check_z(z)
    rel = np.sqrt(var / MC_PROBES) / mean
    f_max = float(expr(lower + width * rng.random((ENVELOPE_PROBES, d))).max())
    return SyntheticPdf(expr, lower, upper, z, "monte_carlo", float(rel), f_max)


def rejection_sample(pdf: SyntheticPdf, n: int, rng: np.random.Generator) -> SampleSet:
    """Draw exactly ``n`` i.i.d. points from ``pdf`` by uniform rejection.

    The envelope is ``1.2`` times the largest density seen while normalising.
    If a proposal ever exceeds the envelope, the envelope is raised to 1.2
    times that value and the draw starts over, so the output is exact.

    Raises
    ------
    LowAcceptance
        If fewer than 1e-4 of the first million proposals are accepted.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    d = pdf.dim
    lo, width = pdf.lower, pdf.upper - pdf.lower
    vol = float(np.prod(width))
    envelope = ENVELOPE_FACTOR * pdf.max_density
    max_batch = max(1024, (1 << 22) // d)

    for _ in range(MAX_RESTARTS):
        chunks, have, proposed, accepted = [], 0, 0, 0
        restart = False
        while have < n:
            rate = 1.0 / max(envelope * vol, 1.0)
            batch = int(min(max(1.5 * (n - have) / max(rate, MIN_ACCEPTANCE), 1024), max_batch))
            x = lo + width * rng.random((batch, d))
            f = pdf.density(x)
            peak = float(f.max())
            if peak > envelope:
                envelope = ENVELOPE_FACTOR * peak
                restart = True
                break
            keep = rng.random(batch) * envelope < f
            chunks.append(x[keep])
            have += int(keep.sum())
            proposed += batch
            accepted += int(keep.sum())
            if proposed >= ACCEPTANCE_WINDOW and accepted / proposed < MIN_ACCEPTANCE:
                raise LowAcceptance(
                    f"acceptance {accepted}/{proposed} below {MIN_ACCEPTANCE}"
                )
        if not restart:
            pts = np.concatenate(chunks)[:n]
            out = SampleSet.from_points(pts, pdf.density(pts), bounds=(pdf.lower, pdf.upper))
            out.meta.update(proposed=proposed, accepted=accepted, envelope=envelope)
            return out
    raise RetryExhausted("rejection envelope kept growing")
