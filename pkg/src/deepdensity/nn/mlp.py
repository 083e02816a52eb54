"""Plain numpy MLP with batch normalisation, manual backprop and Adam."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeMismatch

DEFAULT_HIDDEN = (128, 256, 512, 256, 128, 64, 32, 16, 8)


@dataclass
class MlpConfig:
    """Layer layout: ``k`` inputs, ``hidden_widths``, one output.

    Every layer is affine followed by ReLU; batch normalisation sits between
    the affine map and the ReLU on all layers but the last.

    ``reference_n`` is the point count of the training samples and ``dim``
    their dimension. k-NN distances shrink like ``n ** (-1 / dim)``, so
    features from a sample of another size are rescaled by
    ``(n / reference_n) ** (1 / dim)`` before inference. ``None`` disables
    the rescale.
    """

    k: int = 128
    hidden_widths: tuple = DEFAULT_HIDDEN
    batch_norm: bool = True
    terminal_relu: bool = True
    bn_momentum: float = 0.9
    bn_eps: float = 1e-5
    dim: int = 1
    reference_n: int | None = None

    def __post_init__(self):
        self.hidden_widths = tuple(int(w) for w in self.hidden_widths)
        if self.k < 1 or any(w < 1 for w in self.hidden_widths):
            raise ValueError("layer widths must be positive")
        if self.dim < 1:
            raise ValueError("dim must be positive")

    def feature_scale(self, n: int) -> float:
        """Factor applied to distance features of an ``n``-point sample."""
        if self.reference_n is None:
            return 1.0
        return (n / self.reference_n) ** (1.0 / self.dim)

    @property
    def widths(self) -> list[int]:
        return [self.k, *self.hidden_widths, 1]

    @property
    def n_layers(self) -> int:
        return len(self.hidden_widths) + 1


@dataclass
class _Cache:
    mode: str
    inputs: list = field(default_factory=list)
    pre_act: list = field(default_factory=list)
    xhat: list = field(default_factory=list)
    inv_std: list = field(default_factory=list)


class MlpModel:
    """Weights, biases and batch-norm state for an :class:`MlpConfig`.

    Parameters live in ``params`` under the names ``W{i}``, ``b{i}``,
    ``gamma{i}`` and ``beta{i}``; running statistics in ``running_mean`` and
    ``running_var`` (one entry per normalised layer).
    """

    def __init__(self, config: MlpConfig, params: dict, running_mean=None,
                 running_var=None, train_meta=None, dtype=np.float64):
        self.config = config
        self.dtype = np.dtype(dtype)
        self.params = {k: np.asarray(v, self.dtype) for k, v in params.items()}
        n_bn = config.n_layers - 1 if config.batch_norm else 0
        widths = config.widths
        if running_mean is None:
            running_mean = [np.zeros(widths[i + 1]) for i in range(n_bn)]
        if running_var is None:
            running_var = [np.ones(widths[i + 1]) for i in range(n_bn)]
        self.running_mean = [np.asarray(m, self.dtype) for m in running_mean]
        self.running_var = [np.asarray(v, self.dtype) for v in running_var]
        self.train_meta = dict(train_meta or {})

    @classmethod
    def initialize(cls, config: MlpConfig, rng: np.random.Generator, dtype=np.float64):
        """Gaussian weights with variance ``2 / fan_in``, zero biases, unit BN scale."""
        widths = config.widths
        params = {}
        for i in range(config.n_layers):
            fan_in, fan_out = widths[i], widths[i + 1]
            params[f"W{i}"] = rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in)
            params[f"b{i}"] = np.zeros(fan_out)
            if config.batch_norm and i < config.n_layers - 1:
                params[f"gamma{i}"] = np.ones(fan_out)
                params[f"beta{i}"] = np.zeros(fan_out)
        return cls(config, params, dtype=dtype)

    def copy(self) -> "MlpModel":
        return copy.deepcopy(self)

    def astype(self, dtype) -> "MlpModel":
        return MlpModel(self.config, self.params, self.running_mean, self.running_var,
                        self.train_meta, dtype)

    def _has_bn(self, i):
        return self.config.batch_norm and i < self.config.n_layers - 1

    def _has_relu(self, i):
        return i < self.config.n_layers - 1 or self.config.terminal_relu

    def forward(self, x, mode: str = "infer", update_stats: bool = True):
        """Run the network.

        Parameters
        ----------
        x : array_like, shape (m, k)
        mode : {"infer", "train"}
            ``"train"`` normalises with batch statistics (and, if
            ``update_stats``, folds them into the running averages with
            momentum ``bn_momentum``); ``"infer"`` uses the running averages.

        Returns
        -------
        out : ndarray, shape (m,)
        cache : object
            Activations needed by :meth:`backward`.
        """
        if mode not in ("train", "infer"):
            raise ValueError(f"unknown mode {mode!r}")
        h = np.asarray(x, dtype=self.dtype)
        if h.ndim != 2 or h.shape[1] != self.config.k:
            raise ShapeMismatch(f"expected (m, {self.config.k}) features, got {h.shape}")
        if mode == "train" and self.config.batch_norm and h.shape[0] < 2:
            raise ShapeMismatch("batch statistics need at least two rows")
        cache = _Cache(mode)
        mom, eps = self.config.bn_momentum, self.config.bn_eps
        for i in range(self.config.n_layers):
            cache.inputs.append(h)
            z = h @ self.params[f"W{i}"] + self.params[f"b{i}"]
            if self._has_bn(i):
                if mode == "train":
                    # A constant column gets its exact value as mean, so it normalises to 0.
                    mu = np.where(np.ptp(z, axis=0) == 0, z[0], z.mean(axis=0))
                    var = z.var(axis=0)
                    if update_stats:
                        self.running_mean[i] = mom * self.running_mean[i] + (1 - mom) * mu
                        self.running_var[i] = mom * self.running_var[i] + (1 - mom) * var
                else:
                    mu, var = self.running_mean[i], self.running_var[i]
                inv_std = 1.0 / np.sqrt(var + eps)
                xhat = (z - mu) * inv_std
                z = self.params[f"gamma{i}"] * xhat + self.params[f"beta{i}"]
                cache.xhat.append(xhat)
                cache.inv_std.append(inv_std)
            else:
                cache.xhat.append(None)
                cache.inv_std.append(None)
            cache.pre_act.append(z)
            h = np.maximum(z, 0) if self._has_relu(i) else z
        return h[:, 0], cache

    def backward(self, cache: _Cache, dout) -> dict:
        """Gradients of a scalar loss given ``dout = dL/d(output)``."""
        g = np.asarray(dout, dtype=self.dtype)[:, None]
        grads = {}
        for i in reversed(range(self.config.n_layers)):
            if self._has_relu(i):
                g = g * (cache.pre_act[i] > 0)
            if self._has_bn(i):
                xhat, inv_std = cache.xhat[i], cache.inv_std[i]
                grads[f"gamma{i}"] = (g * xhat).sum(axis=0)
                grads[f"beta{i}"] = g.sum(axis=0)
                g = g * self.params[f"gamma{i}"]
                if cache.mode == "train":
                    m = g.shape[0]
                    g = inv_std * (g - g.mean(axis=0) - xhat * (g * xhat).sum(axis=0) / m)
                else:
                    g = g * inv_std
            grads[f"W{i}"] = cache.inputs[i].T @ g
            grads[f"b{i}"] = g.sum(axis=0)
            if i:
                g = g @ self.params[f"W{i}"].T
        return grads

    def predict(self, x, chunk: int = 65536) -> np.ndarray:
        """Inference-mode output as float64."""
        x = np.asarray(x)
        if x.shape[0] == 0:
            return np.zeros(0)
        parts = [self.forward(x[s : s + chunk], "infer")[0] for s in range(0, x.shape[0], chunk)]
        return np.concatenate(parts).astype(np.float64)

    def all_finite(self) -> bool:
        arrays = [*self.params.values(), *self.running_mean, *self.running_var]
        return all(np.all(np.isfinite(a)) for a in arrays)


def mse_loss(pred, target):
    """Mean squared error and its gradient with respect to ``pred``."""
    diff = pred - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.shape[0]


def loss_and_gradients(model: MlpModel, batch, targets, mode: str = "train",
                       update_stats: bool = False):
    """MSE loss of ``model`` on ``batch`` and the gradient for every parameter."""
    targets = np.asarray(targets, dtype=model.dtype).ravel()
    pred, cache = model.forward(batch, mode, update_stats=update_stats)
    if targets.shape[0] != pred.shape[0]:
        raise ShapeMismatch("one target per feature row is required")
    loss, dout = mse_loss(pred, targets)
    return loss, model.backward(cache, dout)


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    step: int = 0


def adam_step(params: dict, grads: dict, state: AdamState, lr: float,
              betas=(0.9, 0.999), eps: float = 1e-8):
    """One in-place Adam update with bias correction; returns ``(params, state)``."""
    b1, b2 = betas
    state.step += 1
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for name, g in grads.items():
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(params[name])
            state.v[name] = np.zeros_like(params[name])
        v = state.v[name]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * (g * g)
        m_hat = m / c1
        v_hat = v / c2
        params[name] -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return params, state
