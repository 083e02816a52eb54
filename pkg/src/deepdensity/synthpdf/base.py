"""Library of parameterised 1D base functions.

Each row takes a uniform draw ``r`` in [0, 1] and the domain upper bound
``s``; some rows also pick an ``alpha`` or a ``(mu, sigma)`` pair from a small
discrete set. Every function is finite and non-negative on ``[0, s]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Callable

import numpy as np

from ..errors import FilterEmpty, RetryExhausted

EPS = 1e-6
TAGS = frozenset({"gaussian", "linear", "monotone", "sinusoidal", "step", "inverse", "power"})

# Gaussian peak positions are fractions of R*S, widths fractions of S.
GAUSS_MU_FRACTIONS = (0.25, 0.5, 0.75, 1.0)
GAUSS_SIGMA_FRACTIONS = (0.05, 0.1, 0.2)

MAX_BASE_RETRIES = 1000
MAX_GRID = 4096


def _sigmoid(x, r, s, a, mu, sg):
    return 1.0 / (1.0 + np.exp(-r * x))


def _gaussian(x, r, s, a, mu, sg):
    return 2.0 * r / np.sqrt(2.0 * np.pi * sg * sg) * np.exp(-((x - mu) ** 2) / (2.0 * sg * sg))


def _s_minus_x(x, r, s, a, mu, sg):
    return np.maximum(s - x, 0.0)


def _inverse_capped(x, r, s, a, mu, sg):
    return np.minimum(1.0 / (4.0 * x + EPS), 1000.0)


def _inverse(x, r, s, a, mu, sg):
    return 1.0 / (4.0 * x + EPS)


def _inverse_min(x, r, s, a, mu, sg):
    return np.minimum(a * r, 1.0 / (50.0 * x + EPS))


def _max_floor(x, r, s, a, mu, sg):
    return np.maximum(a * r * s, x)


def _scaled_linear(x, r, s, a, mu, sg):
    return a * r * x


def _linear_quarter(x, r, s, a, mu, sg):
    return x / (4.0 * max(0.2, r))


def _s2_minus_x2(x, r, s, a, mu, sg):
    return np.maximum(s * s - x * x, 0.0)


def _s_minus_x_sq(x, r, s, a, mu, sg):
    return (s - x) ** 2


def _power(x, r, s, a, mu, sg):
    return x ** (a * r)


def _s_minus_power(x, r, s, a, mu, sg):
    # S - x**p dips below zero for S > 1 and p > 1; clamp keeps the row a density factor.
    return np.maximum(s - x ** max(a * r, 0.05), 0.0)


def _step_above(x, r, s, a, mu, sg):
    return (x > max(r, 0.6) * s).astype(float)


def _step_below(x, r, s, a, mu, sg):
    return (x < max(r, 0.4) * s).astype(float)


def _step_outside(x, r, s, a, mu, sg):
    return ((x < 0.25 * r * s) | (x > 0.75 * r * s)).astype(float)


def _step_inside(x, r, s, a, mu, sg):
    return ((x > max(0.25 * r, 0.1) * s) & (x < max(0.75 * r, 0.4) * s)).astype(float)


def _identity(x, r, s, a, mu, sg):
    return np.asarray(x, float) * 1.0


def _square(x, r, s, a, mu, sg):
    return x * x


def _sqrt(x, r, s, a, mu, sg):
    return np.sqrt(x)


def _sin_plus_one(x, r, s, a, mu, sg):
    return np.sin(x) + 1.0


def _cos_plus_one(x, r, s, a, mu, sg):
    return np.cos(x) + 1.0


def _abs_sin(x, r, s, a, mu, sg):
    return np.abs(np.sin(x))


def _abs_cos(x, r, s, a, mu, sg):
    return np.abs(np.cos(x))


def _abs_sinc(x, r, s, a, mu, sg):
    return np.abs(np.sin(x) / (x + EPS))


@dataclass(frozen=True)
class BaseRow:
    name: str
    func: Callable
    tags: frozenset
    alphas: tuple = ()


def _row(name, func, tags, alphas=()):
    return BaseRow(name, func, frozenset(tags), tuple(alphas))


ROWS = {
    r.name: r
    for r in (
        _row("sigmoid", _sigmoid, {"monotone"}),
        _row("gaussian", _gaussian, {"gaussian"}),
        _row("s_minus_x", _s_minus_x, {"linear", "monotone"}),
        _row("inverse_capped", _inverse_capped, {"inverse", "monotone"}),
        _row("inverse", _inverse, {"inverse", "monotone"}),
        _row("inverse_min", _inverse_min, {"inverse", "monotone"}, (0.5, 2.0, 4.0)),
        _row("max_floor", _max_floor, {"monotone"}, (0.4, 0.8)),
        _row("scaled_linear", _scaled_linear, {"linear", "monotone"}, (2.0, 3.0)),
        _row("linear_quarter", _linear_quarter, {"linear", "monotone"}),
        _row("s2_minus_x2", _s2_minus_x2, {"power", "monotone"}),
        _row("s_minus_x_sq", _s_minus_x_sq, {"power", "monotone"}),
        _row("power", _power, {"power", "monotone"}, (1.0, 2.0)),
        _row("s_minus_power", _s_minus_power, {"power", "monotone"}, (1.0, 2.0)),
        _row("step_above", _step_above, {"step", "monotone"}),
        _row("step_below", _step_below, {"step", "monotone"}),
        _row("step_outside", _step_outside, {"step"}),
        _row("step_inside", _step_inside, {"step"}),
        _row("identity", _identity, {"linear", "monotone"}),
        _row("square", _square, {"power", "monotone"}),
        _row("sqrt", _sqrt, {"power", "monotone"}),
        _row("sin_plus_one", _sin_plus_one, {"sinusoidal"}),
        _row("cos_plus_one", _cos_plus_one, {"sinusoidal"}),
        _row("abs_sin", _abs_sin, {"sinusoidal"}),
        _row("abs_cos", _abs_cos, {"sinusoidal"}),
        _row("abs_sinc", _abs_sinc, {"sinusoidal"}),
    )
}


@dataclass(frozen=True)
class TagFilter:
    """Keep rows carrying any ``include`` tag (all rows if empty) and no ``exclude`` tag."""

    include: frozenset = field(default_factory=frozenset)
    exclude: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "include", frozenset(self.include))
        object.__setattr__(self, "exclude", frozenset(self.exclude))
        unknown = (self.include | self.exclude) - TAGS
        if unknown:
            raise ValueError(f"unknown tags: {sorted(unknown)}")
        if self.include & self.exclude:
            raise ValueError("include and exclude tags overlap")

    def admits(self, tags) -> bool:
        if self.include and not (self.include & tags):
            return False
        return not (self.exclude & tags)

    def rows(self) -> list[str]:
        return [name for name, row in ROWS.items() if self.admits(row.tags)]


@dataclass(frozen=True)
class BaseFunctionSpec:
    """A fully parameterised base function."""

    kind: str
    r: float
    s: float
    alpha: float | None = None
    mu: float | None = None
    sigma: float | None = None

    def __post_init__(self):
        if self.kind not in ROWS:
            raise ValueError(f"unknown base function {self.kind!r}")
        if not 0.0 <= self.r <= 1.0:
            raise ValueError("r must lie in [0, 1]")
        if not self.s > 0:
            raise ValueError("s must be positive")

    @property
    def tags(self) -> frozenset:
        return ROWS[self.kind].tags

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return ROWS[self.kind].func(x, self.r, self.s, self.alpha, self.mu, self.sigma)

    def grid_max(self, npts: int = MAX_GRID) -> float:
        return float(np.max(self(np.linspace(0.0, self.s, npts))))

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, d: dict) -> "BaseFunctionSpec":
        return cls(**d)


def eval_base(spec: BaseFunctionSpec, x):
    """Evaluate ``spec`` at ``x`` (scalar or array)."""
    out = spec(x)
    return float(out) if np.ndim(out) == 0 else out


def _draw(rng: np.random.Generator, kind: str, s: float) -> BaseFunctionSpec:
    row = ROWS[kind]
    r = float(rng.random())
    alpha = mu = sigma = None
    if row.alphas:
        alpha = float(row.alphas[rng.integers(len(row.alphas))])
    if kind == "gaussian":
        mu = GAUSS_MU_FRACTIONS[rng.integers(len(GAUSS_MU_FRACTIONS))] * r * s
        sigma = GAUSS_SIGMA_FRACTIONS[rng.integers(len(GAUSS_SIGMA_FRACTIONS))] * s
    return BaseFunctionSpec(kind, r, float(s), alpha, mu, sigma)


def sample_base_function(
    rng: np.random.Generator,
    s: float,
    filters: TagFilter | None = None,
    min_base_max: float | None = None,
) -> BaseFunctionSpec:
    """Draw a random row (uniformly among those passing ``filters``) and its parameters.

    With ``min_base_max`` set, draws are repeated until the function's maximum
    on a 4096-point grid over ``[0, s]`` reaches that value.
    """
    if not s > 0:
        raise ValueError("domain extent must be positive")
    names = (filters or TagFilter()).rows()
    if not names:
        raise FilterEmpty(f"no base function matches {filters}")
    for _ in range(MAX_BASE_RETRIES):
        spec = _draw(rng, names[rng.integers(len(names))], s)
        if min_base_max is None or spec.grid_max() >= min_base_max:
            return spec
    raise RetryExhausted(
        f"no base function reached max >= {min_base_max} in {MAX_BASE_RETRIES} draws"
    )
