"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are collected in ``conftest.ACCEPTANCE_LINES`` and shown in the
terminal summary. Criteria 8, 9 and 11 share one desk-scale trained model.
"""

from __future__ import annotations

import time

import numpy as np
import pytest
from scipy import stats

from conftest import ACCEPTANCE_LINES
from deepdensity.analytic import Discontinuous, Gamma, TwoGaussians
from deepdensity.baselines import KdeEstimator, silverman_bandwidth
from deepdensity.harness import Estimator, local_shape_block, sample_rng
from deepdensity.metrics import kl_mc, ks_statistic, ks_two_sample, mse
from deepdensity.neighbors import brute_force_knn, build_index, knn_distances
from deepdensity.nn import (
    AdamState,
    MlpConfig,
    MlpModel,
    TrainConfig,
    adam_step,
    estimate,
    loss_and_gradients,
    smooth_1d,
    stack_features,
    train,
)
from deepdensity.samples import SampleSet
from deepdensity.synthpdf import (
    BaseFunctionSpec,
    FunctionExpr,
    GenerationConfig,
    Leaf,
    generate_dataset,
    normalize,
    rejection_sample,
)
from deepdensity.synthpdf.dataset import generate_one

# Reduced training configuration for criteria 8, 9 and 11.
DESK_GEN = dict(dim=1, n_functions=300, points_per_sample=1000, seed=0, exclude_tags=["inverse"])
DESK_K = 32
DESK_WIDTHS = (32, 64, 128, 64, 32, 16, 8)
DESK_TRAIN = dict(epochs=60, ensemble_size=3, seed=0, batch_size=256)


def record(key, ok, detail, seconds=None):
    took = "" if seconds is None else f" [{seconds:.1f}s]"
    ACCEPTANCE_LINES[key] = f"criterion {key}: {'PASS' if ok else 'FAIL'} - {detail}{took}"
    print(ACCEPTANCE_LINES[key])
    assert ok, ACCEPTANCE_LINES[key]


def train_desk_model():
    ds = generate_dataset(GenerationConfig(**DESK_GEN))
    tx, ty = stack_features(((s.unit_points, s.density_truth) for s in ds.train), DESK_K)
    vx, vy = stack_features(((s.unit_points, s.density_truth) for s in ds.validation), DESK_K)
    mcfg = MlpConfig(k=DESK_K, hidden_widths=DESK_WIDTHS, dim=1,
                     reference_n=DESK_GEN["points_per_sample"])
    return train(tx, ty, vx, vy, TrainConfig(**DESK_TRAIN), mcfg)


@pytest.fixture(scope="session")
def desk_model():
    t0 = time.perf_counter()
    model = train_desk_model()
    model.train_meta["wall_s"] = time.perf_counter() - t0
    return model


def _graded(lo, hi, n):
    # Uniform nodes plus a log-graded cluster at the lower edge for 1/x-type spikes.
    return np.unique(np.concatenate([np.linspace(lo, hi, n), lo + np.geomspace(1e-12, hi - lo, n // 4)]))


def _mass_1d(pdf, n=16384):
    x = _graded(pdf.lower[0], pdf.upper[0], n)
    return float(np.trapezoid(pdf.density(x), x))


def _mass_2d(pdf, n=2048):
    x = _graded(pdf.lower[0], pdf.upper[0], n)
    y = _graded(pdf.lower[1], pdf.upper[1], n)
    X, Y = np.meshgrid(x, y, indexing="ij")
    v = pdf.density(np.stack([X.ravel(), Y.ravel()], 1)).reshape(X.shape)
    return float(np.trapezoid(np.trapezoid(v, y, axis=1), x))


def test_criterion_01_knn_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    bad = 0
    for _ in range(500):
        d = int(rng.choice([1, 3, 5, 10]))
        n = int(rng.integers(200, 2001))
        k = int(rng.integers(8, 129))
        pts = rng.random((n, d))
        q = np.concatenate([pts[:100], rng.random((100, d))])
        bad += not np.array_equal(knn_distances(build_index(pts), q, k), brute_force_knn(pts, q, k))
    dt = time.perf_counter() - t0
    record("1", bad == 0 and dt < 120, f"{500 - bad}/500 instances bitwise equal", dt)


def test_criterion_02_synthetic_mass():
    t0 = time.perf_counter()
    cfg1 = GenerationConfig(n_functions=200, points_per_sample=10, seed=2)
    m1 = np.array([_mass_1d(generate_one(cfg1, i)[0]) for i in range(200)])
    cfg2 = GenerationConfig(dim=2, n_functions=20, points_per_sample=10, seed=2)
    m2 = np.array([_mass_2d(generate_one(cfg2, i)[0]) for i in range(20)])
    ok = np.all(np.abs(m1 - 1) <= 0.01) and np.all(np.abs(m2 - 1) <= 0.03)
    dt = time.perf_counter() - t0
    record("2", ok and dt < 300,
           f"1D mass range [{m1.min():.4f}, {m1.max():.4f}], 2D range [{m2.min():.4f}, {m2.max():.4f}]", dt)


def test_criterion_03_rejection_law():
    t0 = time.perf_counter()
    pdf = normalize(FunctionExpr(Leaf(BaseFunctionSpec("identity", 0.5, 1.0), 0), 1), [1.0])
    s = rejection_sample(pdf, 50_000, np.random.default_rng(3))
    D = stats.kstest(s.points[:, 0], lambda x: x * x).statistic
    rate = s.meta["accepted"] / s.meta["proposed"]
    # Mean density over the box is 1; the envelope is 1.2 times the peak density 2.
    expected = 1.0 / (1.2 * 2.0)
    ok = D < 0.01 and abs(rate - expected) <= 0.02
    dt = time.perf_counter() - t0
    record("3", ok and dt < 60, f"KS D={D:.4f}, acceptance {rate:.4f} vs {expected:.4f}", dt)


def test_criterion_04_kde_closed_form():
    t0 = time.perf_counter()
    x = np.random.default_rng(4).standard_normal(10_000)
    x = (x - x.mean()) / x.std(ddof=1)
    h = silverman_bandwidth(x)[0]
    expected_h = (4 / 3) ** 0.2 * 10_000 ** -0.2
    peaks = [KdeEstimator.silverman(np.random.default_rng(s).standard_normal(10_000))(np.array([0.0]))[0]
             for s in range(11)]
    med = float(np.median(peaks))
    ok = abs(h - 0.16787) <= 1e-4 and abs(expected_h - 0.16787) <= 1e-4 and 0.38 <= med <= 0.42
    dt = time.perf_counter() - t0
    record("4", ok and dt < 60, f"h={h:.6f}, median p(0)={med:.4f}", dt)


def test_criterion_05_kde_gamma_band():
    t0 = time.perf_counter()
    s = Gamma().sample(5000, sample_rng(0, "gamma", 5000))
    est = KdeEstimator.silverman(s)(s.points)
    kl = kl_mc(s.truth_original, est)
    err = mse(s.truth_original, est)
    ok = 0.4 <= kl <= 1.8 and 9.289e3 <= err <= 9.289e5
    dt = time.perf_counter() - t0
    record("5", ok and dt < 60, f"KDE KL={kl:.4f} (band [0.4, 1.8]), MSE={err:.4g} (band [9.289e3, 9.289e5])", dt)


def _finite_diff_error(bn, seed):
    rng = np.random.default_rng(seed)
    widths = [int(w) for w in rng.integers(2, 7, size=3)]
    cfg = MlpConfig(k=widths[0], hidden_widths=widths[1:], batch_norm=bn, terminal_relu=False)
    model = MlpModel.initialize(cfg, rng)
    for name in model.params:
        if name.startswith(("b", "beta")):
            model.params[name] = rng.normal(0, 0.5, model.params[name].shape)
        if name.startswith("gamma"):
            model.params[name] = rng.uniform(0.5, 1.5, model.params[name].shape)
    if bn:
        model.running_mean = [rng.normal(0, 0.1, m.shape) for m in model.running_mean]
        model.running_var = [rng.uniform(0.5, 2.0, v.shape) for v in model.running_var]
    x = rng.normal(size=(5, widths[0]))
    y = rng.random(5)
    mode = "infer" if bn else "train"
    _, grads = loss_and_gradients(model, x, y, mode)
    worst, h = 0.0, 1e-5
    for name, p in model.params.items():
        for i in np.ndindex(p.shape):
            old = p[i]
            p[i] = old + h
            lp = loss_and_gradients(model, x, y, mode)[0]
            p[i] = old - h
            lm = loss_and_gradients(model, x, y, mode)[0]
            p[i] = old
            num = (lp - lm) / (2 * h)
            worst = max(worst, abs(num - grads[name][i]) / max(abs(num) + abs(grads[name][i]), 1e-8))
    return worst


def test_criterion_06_gradients():
    t0 = time.perf_counter()
    plain = max(_finite_diff_error(False, s) for s in range(20))
    frozen = max(_finite_diff_error(True, 100 + s) for s in range(20))
    dt = time.perf_counter() - t0
    record("6", plain < 1e-4 and frozen < 1e-3 and dt < 60,
           f"max rel error {plain:.2e} (plain), {frozen:.2e} (frozen batch norm)", dt)


def test_criterion_07_adam_first_step():
    lr = 1e-3
    p = {"w": np.array([0.25])}
    adam_step(p, {"w": np.array([1.0])}, AdamState(), lr)
    delta = p["w"][0] - 0.25
    record("7", abs(delta + lr) < 1e-6 * lr, f"delta={delta:.12g}, lr={lr}")


def test_criterion_08a_uniform(desk_model):
    s = SampleSet.from_points(sample_rng(0, "uniform", 5000).random(5000))
    mean = float(estimate(desk_model, s).mean())
    wall = desk_model.train_meta["wall_s"]
    record("8a", 0.8 <= mean <= 1.2 and wall <= 1800,
           f"uniform n=5000 mean estimate {mean:.4f}; desk training took {wall:.0f}s", wall)


def test_criterion_08b_two_gaussians(desk_model):
    s = TwoGaussians().sample(5000, sample_rng(0, "two-gaussians", 5000))
    dde = estimate(desk_model, s)
    kde = KdeEstimator.silverman(s)(s.points)
    kl_dde = kl_mc(s.truth_original, dde)
    kl_kde = kl_mc(s.truth_original, kde)
    zeros = int(np.sum(dde <= 0))
    record("8b", kl_dde <= 5e-2 and kl_dde <= 3 * kl_kde,
           f"DDE KL={kl_dde:.4g} ({zeros} zero estimates), KDE KL={kl_kde:.4g}")


def test_criterion_08c_determinism(desk_model):
    t0 = time.perf_counter()
    again = train_desk_model()
    same = desk_model.params.keys() == again.params.keys() and all(
        np.array_equal(desk_model.params[k], again.params[k]) for k in desk_model.params
    )
    same &= all(np.array_equal(a, b) for a, b in zip(desk_model.running_mean, again.running_mean))
    same &= all(np.array_equal(a, b) for a, b in zip(desk_model.running_var, again.running_var))
    meta = desk_model.train_meta
    record("8c", bool(same), f"rerun selected member {again.train_meta['selected_member']} "
           f"epoch {again.train_meta['selected_epoch']} (first run: member {meta['selected_member']} "
           f"epoch {meta['selected_epoch']}), parameters bitwise equal: {bool(same)}",
           time.perf_counter() - t0)


def test_criterion_09_smoothing(desk_model):
    t0 = time.perf_counter()
    wins, pairs = 0, []
    for seed in range(10):
        s = Discontinuous().sample(5000, sample_rng(seed, "discontinuous", 5000))
        raw = estimate(desk_model, s)
        smooth = smooth_1d(s.points, raw)
        a, b = mse(s.truth_original, raw), mse(s.truth_original, smooth)
        pairs.append((a, b))
        wins += b <= a
    dt = time.perf_counter() - t0
    mean_raw = np.mean([p[0] for p in pairs])
    mean_smooth = np.mean([p[1] for p in pairs])
    record("9", wins >= 7 and dt < 600,
           f"smoothed <= raw MSE in {wins}/10 runs (mean {mean_raw:.4g} -> {mean_smooth:.4g})", dt)


def test_criterion_10_ks():
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    level = sum(ks_two_sample(rng.random(1000), rng.random(1000))[1] > 0.01 for _ in range(100))
    a = rng.random(300)
    ident = ks_two_sample(a, a)
    agree = 0
    for _ in range(200):
        x = np.round(rng.normal(size=rng.integers(1, 25)), 1)
        y = np.round(rng.normal(size=rng.integers(1, 25)), 1)
        pooled = np.concatenate([x, y])
        direct = max(abs(np.mean(x <= t) - np.mean(y <= t)) for t in pooled)
        agree += abs(ks_statistic(x, y) - direct) <= 1e-12
    dt = time.perf_counter() - t0
    record("10", level >= 95 and ident == (0.0, 1.0) and agree == 200 and dt < 120,
           f"level {level}/100, identical -> {ident}, oracle agreement {agree}/200", dt)


def test_criterion_11_local_shape(desk_model):
    t0 = time.perf_counter()
    kde_rows, kde_mean = local_shape_block(Estimator("kde"), 10_000)
    dde_rows, dde_mean = local_shape_block(Estimator("dde", desk_model), 10_000)
    lines = ["row  t          KDE      DDE"]
    for (i, _, t, k), (_, _, _, d) in zip(kde_rows, dde_rows):
        lines.append(f"{i:<4d} {t:<10.5f} {k:<8.4f} {d:<8.4f}")
    lines.append(f"mean            {kde_mean:<8.4f} {dde_mean:<8.4f}")
    print("\n".join(lines))
    dt = time.perf_counter() - t0
    record("11", 0.7 <= kde_mean <= 1.1 and dt < 300,
           f"KDE mean at t {kde_mean:.4f} (band [0.7, 1.1]); DDE mean {dde_mean:.4f} (reported)", dt)
