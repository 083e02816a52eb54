import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from deepdensity.errors import FilterEmpty, RetryExhausted
from deepdensity.synthpdf import (
    ROWS,
    BaseFunctionSpec,
    Combine,
    FunctionExpr,
    GenerationConfig,
    Leaf,
    TagFilter,
    compose_1d,
    compose_highdim,
    generate_dataset,
    normalize,
    read_dataset,
    rejection_sample,
    sample_base_function,
    write_dataset,
)
from deepdensity.synthpdf.dataset import generate_one


def independent_mass_1d(pdf, n=16384):
    # Plain trapezoid on a log-graded grid, independent of the library's node layout.
    lo, hi = pdf.lower[0], pdf.upper[0]
    x = np.unique(np.concatenate([
        np.linspace(lo, hi, n),
        lo + np.geomspace(1e-12, hi - lo, n // 4),
    ]))
    return np.trapezoid(pdf.density(x), x) if hasattr(np, "trapezoid") else np.trapz(pdf.density(x), x)


def test_table_has_25_rows_and_known_tags():
    assert len(ROWS) == 25
    for row in ROWS.values():
        assert row.tags


def test_linear_filter_rows():
    names = set(TagFilter(include={"linear"}).rows())
    assert names == {"identity", "scaled_linear", "linear_quarter", "s_minus_x"}


def test_filter_empty_and_overlap():
    with pytest.raises(ValueError):
        TagFilter(include={"linear"}, exclude={"linear"})
    f = TagFilter(include={"step"}, exclude={"monotone"})
    assert set(f.rows()) == {"step_outside", "step_inside"}
    every = TagFilter(exclude={"monotone", "gaussian", "sinusoidal", "step"})
    with pytest.raises(FilterEmpty):
        sample_base_function(np.random.default_rng(0), 1.0, every)


def test_min_base_max_exhausts():
    rng = np.random.default_rng(0)
    f = TagFilter(include={"linear"})
    with pytest.raises(RetryExhausted):
        sample_base_function(rng, 1.0, f, min_base_max=1e9)


def test_gaussian_parameters_from_the_variant_grid():
    rng = np.random.default_rng(3)
    for _ in range(200):
        spec = sample_base_function(rng, 4.0, TagFilter(include={"gaussian"}))
        assert spec.sigma / 4.0 in (0.05, 0.1, 0.2)
        assert any(np.isclose(spec.mu, f * spec.r * 4.0) for f in (0.25, 0.5, 0.75, 1.0))


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), s=st.floats(0.5, 12.0))
def test_base_functions_finite_nonnegative(seed, s):
    rng = np.random.default_rng(seed)
    spec = sample_base_function(rng, s)
    x = np.concatenate([[0.0, s], rng.random(50) * s])
    v = spec(x)
    assert np.all(np.isfinite(v)) and np.all(v >= 0)


def test_nonnegativity_10k_pairs():
    rng = np.random.default_rng(1)
    for _ in range(500):
        s = rng.uniform(1, 10)
        expr = FunctionExpr(compose_1d(rng, int(rng.integers(2, 8)), s), 1)
        v = expr(rng.random((20, 1)) * s)
        assert np.all(v >= 0)


def test_spec_round_trip():
    spec = sample_base_function(np.random.default_rng(0), 2.0, TagFilter(include={"gaussian"}))
    assert BaseFunctionSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec


def test_expr_structure_and_serialisation():
    rng = np.random.default_rng(5)
    expr = compose_highdim(rng, 3, 4, [2.0, 3.0, 4.0], "A")
    assert expr.n_leaves == 12
    assert all(leaf.axis < 3 for leaf in expr.leaves())
    again = FunctionExpr.from_dict(json.loads(json.dumps(expr.to_dict())))
    pts = rng.random((30, 3)) * 2
    np.testing.assert_array_equal(again(pts), expr(pts))


def test_highdim_is_add_only():
    expr = compose_highdim(np.random.default_rng(0), 50, 2, 1.0, "B")
    assert expr.operators() == {"add"}


def test_leaf_count_bounds():
    with pytest.raises(ValueError):
        compose_1d(np.random.default_rng(0), 8, 1.0)
    with pytest.raises(ValueError):
        compose_1d(np.random.default_rng(0), 1, 1.0)


def linear_pdf():
    expr = FunctionExpr(Leaf(BaseFunctionSpec("identity", 0.5, 1.0), 0), 1)
    return normalize(expr, [1.0])


def test_normalize_linear_exact():
    pdf = linear_pdf()
    assert pdf.z == pytest.approx(0.5, rel=1e-6)
    assert pdf.density(np.array([0.25]))[0] == pytest.approx(0.5, rel=1e-6)


def test_normalization_200_random_1d():
    cfg = GenerationConfig(n_functions=200, points_per_sample=10, seed=99)
    for i in range(200):
        pdf = generate_one(cfg, i)[0]
        assert 0.99 <= independent_mass_1d(pdf) <= 1.01, i


def test_separable_consistency_2d():
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 5:
        a = compose_1d(rng, 2, 3.0, axis=0)
        b = compose_1d(rng, 2, 5.0, axis=1)
        expr = FunctionExpr(Combine("multiply", a, b), 2)
        sep = normalize(expr, [3.0, 5.0])
        # Force the full tensor grid by wrapping in a no-op sum with a zero-height factor.
        x = np.linspace(0, 3, 1024)
        y = np.linspace(0, 5, 1024)
        X, Y = np.meshgrid(x, y, indexing="ij")
        vals = expr(np.stack([X.ravel(), Y.ravel()], 1)).reshape(X.shape)
        if not np.all(np.isfinite(vals)) or vals.max() > 50 * vals.mean():
            continue
        full = np.trapezoid(np.trapezoid(vals, y, axis=1), x)
        assert sep.z == pytest.approx(full, rel=0.01)
        checked += 1


def test_rejection_linear_law_and_rate():
    pdf = linear_pdf()
    s = rejection_sample(pdf, 10_000, np.random.default_rng(2))
    assert s.n == 10_000
    assert np.all((s.unit_points >= 0) & (s.unit_points <= 1))
    assert stats.kstest(s.points[:, 0], lambda x: x * x).statistic < 0.0163
    rate = s.meta["accepted"] / s.meta["proposed"]
    assert rate == pytest.approx(1 / (1.2 * 2), abs=0.03)


def test_rejection_uniform():
    expr = FunctionExpr(Leaf(BaseFunctionSpec("sigmoid", 0.0, 1.0), 0), 1)
    pdf = normalize(expr, [1.0])
    s = rejection_sample(pdf, 1000, np.random.default_rng(0))
    assert stats.kstest(s.points[:, 0], "uniform").statistic < 0.06


def test_sampler_law_random_pdfs():
    cfg = GenerationConfig(n_functions=20, points_per_sample=10, seed=5)
    crit = 1.628 / np.sqrt(10_000)
    ok = 0
    for i in range(20):
        pdf = generate_one(cfg, i)[0]
        x, c = pdf.cdf_grid()
        s = rejection_sample(pdf, 10_000, np.random.default_rng(i))
        D = stats.kstest(s.points[:, 0], lambda v: np.interp(v, x, c)).statistic
        ok += D < crit
    assert ok >= 18


def test_dataset_split_and_determinism(tmp_path):
    cfg = GenerationConfig(n_functions=8, points_per_sample=100, seed=3)
    a = generate_dataset(cfg)
    assert len(a.train) == 6 and len(a.validation) == 2
    write_dataset(a, tmp_path / "a")
    write_dataset(generate_dataset(cfg), tmp_path / "b")
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
    loaded = read_dataset(tmp_path / "a")
    np.testing.assert_array_equal(loaded.points[0], a.samples[0].unit_points)
    np.testing.assert_array_equal(loaded.truths[0], a.samples[0].density_truth)


def test_thousand_function_split():
    from deepdensity.synthpdf.dataset import split_indices

    tr, va = split_indices(1000)
    assert (len(tr), len(va)) == (750, 250)


def test_include_tag_dataset():
    ds = generate_dataset(GenerationConfig(n_functions=4, points_per_sample=50,
                                           include_tags=["sinusoidal"]))
    for pdf in ds.pdfs:
        assert all("sinusoidal" in leaf.spec.tags for leaf in pdf.expr.leaves())


def test_stored_truth_integrates():
    ds = generate_dataset(GenerationConfig(n_functions=5, points_per_sample=50, seed=8))
    for pdf, s in zip(ds.pdfs, ds.samples):
        assert independent_mass_1d(pdf) == pytest.approx(1.0, abs=0.01)
        np.testing.assert_allclose(s.truth_original, pdf.density(s.points))
