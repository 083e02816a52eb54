import math

import numpy as np
import pytest
from scipy import integrate, stats

from deepdensity.analytic import (
    Cauchy,
    Discontinuous,
    FiveFingers,
    Gamma,
    LocalShape,
    TwoGaussians,
    local_shape_query,
    parse_distribution,
)

ALL = [Gamma(), TwoGaussians(), FiveFingers(), Cauchy(), Discontinuous()] + [
    LocalShape(i) for i in range(1, 10)
]


def total_mass(pdf):
    f = lambda x: float(pdf.density(np.array(x)))
    if isinstance(pdf, Cauchy):
        cut = 1e6 * pdf.b
        core = sum(integrate.quad(f, a, b, limit=500)[0]
                   for a, b in [(-cut, -10), (-10, 10), (10, cut)])
        return core + 2 * pdf.b / (math.pi * cut)  # tail mass beyond +-cut
    if isinstance(pdf, Gamma):
        return integrate.quad(f, 0, 1, limit=200)[0] + integrate.quad(f, 1, np.inf)[0]
    if isinstance(pdf, TwoGaussians):
        return integrate.quad(f, -np.inf, np.inf, points=None)[0]
    lo, hi = pdf.support if np.all(np.isfinite(pdf.support)) else (0.0, 1.0)
    pts = sorted(set(pdf.breakpoints) | {lo, hi})
    if isinstance(pdf, LocalShape) and pdf.index == 6:
        pts = sorted(set(pts) | {15.0})
    return sum(integrate.quad(f, a, b, limit=500, epsabs=1e-13)[0] for a, b in zip(pts, pts[1:]))


@pytest.mark.parametrize("pdf", ALL, ids=lambda p: p.name)
def test_integrates_to_one(pdf):
    assert total_mass(pdf) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("pdf", ALL, ids=lambda p: p.name)
def test_sampler_law(pdf):
    crit = 1.628 / math.sqrt(10_000)
    ok = 0
    for seed in range(20):
        x = pdf.sample(10_000, np.random.default_rng(seed)).points[:, 0]
        ok += stats.kstest(x, pdf.cdf).statistic < crit
    assert ok >= 18


def test_point_values():
    assert Gamma().density(1.0) == pytest.approx(math.exp(-1) / math.sqrt(math.pi))
    assert Gamma().density(0.0) == np.inf
    assert FiveFingers().density(0.1) == pytest.approx(4.4894, abs=1e-4)
    d = Discontinuous()
    assert d.density(0.45) == 1.0 and d.density(0.2) == 0.8 and d.density(0.6) == 1.25
    assert d.density(1.5) == 0.0


def test_sample_moments():
    rng = np.random.default_rng(0)
    g = Gamma().sample(100_000, rng).points[:, 0]
    assert 0.48 <= g.mean() <= 0.52 and g.min() > 0
    c = Cauchy().sample(100_000, rng).points[:, 0]
    assert abs(np.median(c)) <= 0.02
    x = Discontinuous().sample(100_000, rng).points[:, 0]
    assert np.mean((x > 0.4) & (x < 0.5)) == pytest.approx(0.1, abs=0.004)


@pytest.mark.parametrize("index", range(1, 10))
def test_local_shape_t(index):
    pdf, t = local_shape_query(index)
    assert abs(float(pdf.density(t)) - 1.0) <= 1e-12


def test_local_shape_known_t():
    assert local_shape_query(3)[1] == 0.5
    assert local_shape_query(5)[1] == pytest.approx(math.pi / 2)
    assert local_shape_query(7)[1] == 1.0
    assert local_shape_query(6)[1] == 15.0


def test_sample_attaches_truth(rng):
    s = TwoGaussians().sample(50, rng)
    np.testing.assert_allclose(s.truth_original, TwoGaussians().density(s.points[:, 0]))


def test_parse_distribution():
    assert [p.name for p in parse_distribution("local-shape:all")] == [
        f"local-shape:{i}" for i in range(1, 10)
    ]
    assert parse_distribution("cauchy:b=2.5")[0].b == 2.5
    with pytest.raises(ValueError):
        parse_distribution("nope")
    with pytest.raises(ValueError):
        LocalShape(10)
