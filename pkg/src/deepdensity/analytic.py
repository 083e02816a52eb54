"""Closed-form 1D test distributions with exact densities, CDFs and samplers.

Five classic shapes (gamma with a singularity at zero, a two-Gaussian
mixture, five sharp peaks on a uniform floor, Cauchy, and a piecewise
constant density) plus nine local-shape PDFs, each with a designated point
``t`` at which the density equals exactly one.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erf, ndtr

from .samples import SampleSet

BISECT_TOL = 1e-10


class AnalyticPdf:
    """Base class: subclasses provide ``density``, ``cdf`` and ``_draw``."""

    name = "analytic"
    support = (-np.inf, np.inf)
    breakpoints: tuple = ()

    def density(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def _draw(self, n, rng):
        raise NotImplementedError

    def __call__(self, x):
        return self.density(x)

    def sample(self, n: int, rng: np.random.Generator) -> SampleSet:
        """Exact i.i.d. draw of ``n`` points, with true densities attached."""
        if n < 1:
            raise ValueError("n must be >= 1")
        x = np.asarray(self._draw(n, rng), float)
        return SampleSet.from_points(x, self.density(x), distribution=self.name)

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class Gamma(AnalyticPdf):
    """``exp(-x) / sqrt(pi x)`` on ``x > 0``: Gamma(1/2, 1)."""

    name = "gamma"
    support = (0.0, np.inf)

    def density(self, x):
        x = np.asarray(x, float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(x > 0, np.exp(-x) / np.sqrt(np.pi * np.abs(x)), 0.0)
        return np.where(x == 0, np.inf, out)

    def cdf(self, x):
        x = np.asarray(x, float)
        return np.where(x > 0, erf(np.sqrt(np.maximum(x, 0.0))), 0.0)

    def _draw(self, n, rng):
        out = rng.standard_normal(n) ** 2 / 2
        while np.any(out == 0):  # exact zero would hit the singularity
            bad = out == 0
            out[bad] = rng.standard_normal(int(bad.sum())) ** 2 / 2
        return out


class TwoGaussians(AnalyticPdf):
    name = "two-gaussians"
    weights = (0.7, 0.3)
    means = (5.0, 0.0)
    sigmas = (3.0, 0.5)

    def density(self, x):
        x = np.asarray(x, float)
        out = np.zeros_like(x)
        for w, m, s in zip(self.weights, self.means, self.sigmas):
            out += w * np.exp(-0.5 * ((x - m) / s) ** 2) / (s * math.sqrt(2 * math.pi))
        return out

    def cdf(self, x):
        x = np.asarray(x, float)
        return sum(w * ndtr((x - m) / s) for w, m, s in zip(self.weights, self.means, self.sigmas))

    def _draw(self, n, rng):
        comp = rng.random(n) >= self.weights[0]
        mu = np.where(comp, self.means[1], self.means[0])
        sd = np.where(comp, self.sigmas[1], self.sigmas[0])
        return mu + sd * rng.standard_normal(n)


class FiveFingers(AnalyticPdf):
    """Five narrow Gaussians at 0.1, 0.3, ..., 0.9 over a uniform floor on [0, 1]."""

    name = "five-fingers"
    breakpoints = (0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0)

    def __init__(self, w: float = 0.5, sigma: float = 0.01):
        self.w = w
        self.sigma = sigma
        self.centers = (2 * np.arange(1, 6) - 1) / 10

    def density(self, x):
        x = np.asarray(x, float)
        peaks = sum(
            np.exp(-0.5 * ((x - c) / self.sigma) ** 2) for c in self.centers
        ) / (5 * self.sigma * math.sqrt(2 * math.pi))
        floor = ((x >= 0) & (x <= 1)).astype(float)
        return self.w * peaks + (1 - self.w) * floor

    def cdf(self, x):
        x = np.asarray(x, float)
        peaks = sum(ndtr((x - c) / self.sigma) for c in self.centers) / 5
        return self.w * peaks + (1 - self.w) * np.clip(x, 0.0, 1.0)

    def _draw(self, n, rng):
        is_peak = rng.random(n) < self.w
        centre = self.centers[rng.integers(5, size=n)]
        return np.where(is_peak, centre + self.sigma * rng.standard_normal(n), rng.random(n))


class Cauchy(AnalyticPdf):
    def __init__(self, b: float = 1.0):
        if not b > 0:
            raise ValueError("Cauchy scale must be positive")
        self.b = float(b)
        self.name = f"cauchy:b={self.b:g}"

    def density(self, x):
        x = np.asarray(x, float)
        return self.b / (np.pi * (x * x + self.b * self.b))

    def cdf(self, x):
        return 0.5 + np.arctan(np.asarray(x, float) / self.b) / np.pi

    def _draw(self, n, rng):
        return self.b * np.tan(np.pi * (rng.random(n) - 0.5))


class Discontinuous(AnalyticPdf):
    """Piecewise constant on [0, 1]: 4/5 on [0,0.3)U(0.8,1], 1 on (0.4,0.5), 5/4 elsewhere."""

    name = "discontinuous"
    support = (0.0, 1.0)
    edges = np.array([0.0, 0.3, 0.4, 0.5, 0.8, 1.0])
    levels = np.array([0.8, 1.25, 1.0, 1.25, 0.8])
    breakpoints = tuple(edges)

    def density(self, x):
        x = np.asarray(x, float)
        out = np.where((x >= 0) & (x <= 1), 1.25, 0.0)
        out = np.where(((x >= 0) & (x < 0.3)) | ((x > 0.8) & (x <= 1)), 0.8, out)
        return np.where((x > 0.4) & (x < 0.5), 1.0, out)

    def _cum(self):
        return np.concatenate([[0.0], np.cumsum(self.levels * np.diff(self.edges))])

    def cdf(self, x):
        return np.interp(np.asarray(x, float), self.edges, self._cum())

    def _draw(self, n, rng):
        # Piecewise-constant density: the CDF is exactly piecewise linear.
        return np.interp(rng.random(n), self._cum(), self.edges)


def _bisect_inverse(cdf, u, lo, hi, tol=BISECT_TOL):
    lo = np.full_like(u, lo)
    hi = np.full_like(u, hi)
    while np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        below = cdf(mid) < u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


LOCAL_SHAPE_ALPHA = 6.52326761054738
LOCAL_SHAPE_SIGMA = 1.0 / math.sqrt(2 * math.pi)
LOCAL_SHAPE_MU = 15.0


def _ls_table():
    a = 1.5 * math.pi - math.pi / LOCAL_SHAPE_ALPHA
    b = 1.5 * math.pi + math.pi / LOCAL_SHAPE_ALPHA
    s, mu = LOCAL_SHAPE_SIGMA, LOCAL_SHAPE_MU
    sqrt2pi = math.sqrt(2 * math.pi)
    # label, (lo, hi), t, density, cdf, inverse cdf (None: bisection)
    return {
        1: ("1 if 0.5<x<1.5", (0.5, 1.5), 1.0,
            lambda x: np.ones_like(x), lambda x: x - 0.5, lambda u: u + 0.5),
        2: ("x/2 if x<2", (0.0, 2.0), 2.0,
            lambda x: x / 2, lambda x: x * x / 4, lambda u: 2 * np.sqrt(u)),
        3: ("2x if x<1", (0.0, 1.0), 0.5,
            lambda x: 2 * x, lambda x: x * x, np.sqrt),
        4: ("sin x if x<pi/2", (0.0, math.pi / 2), math.pi / 2,
            np.sin, lambda x: 1 - np.cos(x), lambda u: np.arccos(1 - u)),
        5: ("sin x if pi/3<x<2pi/3", (math.pi / 3, 2 * math.pi / 3), math.pi / 2,
            np.sin, lambda x: 0.5 - np.cos(x), lambda u: np.arccos(0.5 - u)),
        6: ("exp(-(x-mu)^2/(2 sigma^2)) if x<30", (0.0, 30.0), mu,
            lambda x: np.exp(-((x - mu) ** 2) / (2 * s * s)),
            lambda x: s * sqrt2pi * (ndtr((x - mu) / s) - ndtr(-mu / s)),
            None),
        7: ("x^2 if x<3^(1/3)", (0.0, 3 ** (1 / 3)), 1.0,
            lambda x: x * x, lambda x: x ** 3 / 3, lambda u: np.cbrt(3 * u)),
        8: ("x^2/3 if x<9^(1/3)", (0.0, 9 ** (1 / 3)), math.sqrt(3.0),
            lambda x: x * x / 3, lambda x: x ** 3 / 9, lambda u: np.cbrt(9 * u)),
        9: ("sin x + 2 if 3pi/2-pi/alpha<x<3pi/2+pi/alpha", (a, b), 1.5 * math.pi,
            lambda x: np.sin(x) + 2, lambda x: 2 * (x - a) + math.cos(a) - np.cos(x), None),
    }


class LocalShape(AnalyticPdf):
    """One of nine PDFs with a known point ``t`` where the density is exactly 1.

    The density formula is applied on the closed support interval so that
    boundary points ``t`` (rows 2 and 4) evaluate to 1; outside it is 0.
    """

    def __init__(self, index: int):
        table = _ls_table()
        if index not in table:
            raise ValueError("local-shape index must be in 1..9")
        self.index = index
        self.label, (lo, hi), self.t, self._f, self._cdf, self._inv = table[index]
        self.support = (lo, hi)
        self.breakpoints = (lo, hi)
        self.name = f"local-shape:{index}"

    def density(self, x):
        x = np.asarray(x, float)
        lo, hi = self.support
        inside = (x >= lo) & (x <= hi)
        return np.where(inside, self._f(np.clip(x, lo, hi)), 0.0)

    def cdf(self, x):
        x = np.asarray(x, float)
        lo, hi = self.support
        return np.where(x < lo, 0.0, np.where(x > hi, 1.0, self._cdf(np.clip(x, lo, hi))))

    def _draw(self, n, rng):
        u = rng.random(n)
        if self._inv is not None:
            return self._inv(u)
        lo, hi = self.support
        if self.index == 6:
            # Truncation at 0 and 30 sits ~38 sigma out; an untruncated normal is exact to double precision.
            return self.t + LOCAL_SHAPE_SIGMA * rng.standard_normal(n)
        return _bisect_inverse(self._cdf, u, lo, hi)


def local_shape_query(index: int) -> tuple[LocalShape, float]:
    pdf = LocalShape(index)
    return pdf, pdf.t


def parse_distribution(spec: str) -> list[AnalyticPdf]:
    """Resolve a CLI distribution string; ``local-shape:all`` expands to nine PDFs."""
    spec = spec.strip()
    if spec == "gamma":
        return [Gamma()]
    if spec == "two-gaussians":
        return [TwoGaussians()]
    if spec == "five-fingers":
        return [FiveFingers()]
    if spec == "discontinuous":
        return [Discontinuous()]
    if spec == "cauchy":
        return [Cauchy()]
    if spec.startswith("cauchy:"):
        key, _, val = spec[len("cauchy:"):].partition("=")
        if key != "b":
            raise ValueError(f"bad cauchy parameter in {spec!r}")
        return [Cauchy(float(val))]
    if spec.startswith("local-shape:"):
        which = spec.split(":", 1)[1]
        if which == "all":
            return [LocalShape(i) for i in range(1, 10)]
        return [LocalShape(int(which))]
    raise ValueError(f"unknown distribution {spec!r}")
