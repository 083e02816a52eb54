"""Ensemble training with per-epoch validation checkpointing."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import AllDiverged, NonFiniteLoss, ShapeMismatch
from ..neighbors import build_index, knn_distances
from .mlp import AdamState, MlpConfig, MlpModel, adam_step, mse_loss

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    lr0: float = 1e-3
    betas: tuple = (0.9, 0.999)
    adam_eps: float = 1e-8
    lr_decay: float = 0.95
    batch_size: int = 1024
    epochs: int = 100
    ensemble_size: int = 5
    seed: int = 0
    dtype: str = "float32"

    def __post_init__(self):
        self.betas = tuple(float(b) for b in self.betas)
        if not self.lr0 > 0:
            raise ValueError("lr0 must be positive")
        if not 0 < self.lr_decay <= 1:
            raise ValueError("lr_decay must lie in (0, 1]")
        if self.ensemble_size < 1 or self.epochs < 1 or self.batch_size < 2:
            raise ValueError("ensemble_size, epochs >= 1 and batch_size >= 2 required")


def sample_features(unit_points: np.ndarray, k: int) -> np.ndarray:
    """Self-query k-NN distance rows for one unit-range sample."""
    return knn_distances(build_index(unit_points), unit_points, k)


def stack_features(samples, k: int):
    """Concatenate feature rows and unit-range truths over ``(points, truth)`` pairs."""
    xs, ys = [], []
    for pts, truth in samples:
        xs.append(sample_features(pts, k))
        ys.append(np.asarray(truth, float))
    if not xs:
        return np.zeros((0, k)), np.zeros(0)
    return np.concatenate(xs), np.concatenate(ys)


def validation_mse(model: MlpModel, x, y) -> float:
    pred = model.predict(x)
    return float(np.mean((pred - y) ** 2))


def _train_member(member, x, y, vx, vy, tcfg, mcfg, curves):
    rng = np.random.default_rng(np.random.SeedSequence(tcfg.seed, spawn_key=(member,)))
    dtype = np.dtype(tcfg.dtype)
    model = MlpModel.initialize(mcfg, rng, dtype=dtype)
    state = AdamState()
    x = x.astype(dtype, copy=False)
    y = y.astype(dtype, copy=False)
    best = (np.inf, None, -1)
    n = x.shape[0]
    for epoch in range(tcfg.epochs):
        lr = tcfg.lr0 * tcfg.lr_decay ** epoch
        perm = rng.permutation(n)
        total, seen = 0.0, 0
        t0 = time.perf_counter()
        for s in range(0, n, tcfg.batch_size):
            idx = perm[s : s + tcfg.batch_size]
            if idx.size < 2:
                continue
            pred, cache = model.forward(x[idx], "train", update_stats=True)
            loss, dout = mse_loss(pred, y[idx])
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"member {member} epoch {epoch}: loss {loss}")
            grads = model.backward(cache, dout)
            adam_step(model.params, grads, state, lr, tcfg.betas, tcfg.adam_eps)
            total += loss * idx.size
            seen += idx.size
        val = validation_mse(model, vx, vy)
        if not np.isfinite(val) or not model.all_finite():
            raise NonFiniteLoss(f"member {member} epoch {epoch}: validation loss {val}")
        curves.append(
            {"member": member, "epoch": epoch, "lr": lr,
             "train_mse": total / max(seen, 1), "val_mse": val}
        )
        log.info("member %d epoch %d train %.4g val %.4g (%.1fs)",
                 member, epoch, total / max(seen, 1), val, time.perf_counter() - t0)
        if val < best[0]:
            best = (val, model.copy(), epoch)
    return best


def train(train_x, train_y, val_x, val_y, tcfg: TrainConfig | None = None,
          mcfg: MlpConfig | None = None) -> MlpModel:
    """Train ``ensemble_size`` models and keep the best (member, epoch) checkpoint.

    Member ``i`` is seeded from ``(seed, i)``, so a larger ensemble with the
    same seed always contains the smaller one. Selection uses inference-mode
    MSE on the validation rows, evaluated after every epoch.

    Raises
    ------
    AllDiverged
        If every member produced a non-finite loss.
    """
    tcfg = tcfg or TrainConfig()
    mcfg = mcfg or MlpConfig()
    train_x = np.asarray(train_x, float)
    val_x = np.asarray(val_x, float)
    train_y = np.asarray(train_y, float).ravel()
    val_y = np.asarray(val_y, float).ravel()
    if train_x.shape[0] == 0 or val_x.shape[0] == 0:
        raise ShapeMismatch("training and validation sets must be non-empty")
    if train_x.shape[0] != train_y.shape[0] or val_x.shape[0] != val_y.shape[0]:
        raise ShapeMismatch("feature rows and targets differ in count")

    curves, diverged = [], []
    best_val, best_model, best_member, best_epoch = np.inf, None, -1, -1
    for member in range(tcfg.ensemble_size):
        try:
            val, model, epoch = _train_member(
                member, train_x, train_y, val_x, val_y, tcfg, mcfg, curves
            )
        except NonFiniteLoss as exc:
            log.warning("ensemble member diverged: %s", exc)
            diverged.append(member)
            continue
        if val < best_val:
            best_val, best_model, best_member, best_epoch = val, model, member, epoch
    if best_model is None:
        raise AllDiverged(f"all {tcfg.ensemble_size} ensemble members diverged")
    best_model.train_meta = {
        "train_config": asdict(tcfg),
        "seed": tcfg.seed,
        "epochs": tcfg.epochs,
        "ensemble_size": tcfg.ensemble_size,
        "selected_member": best_member,
        "selected_epoch": best_epoch,
        "best_val_mse": best_val,
        "diverged_members": diverged,
        "n_train_rows": int(train_x.shape[0]),
        "n_val_rows": int(val_x.shape[0]),
        "curves": curves,
    }
    return best_model
