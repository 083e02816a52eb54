"""The learned estimator: an MLP shared over per-query k-NN distance rows."""

from .estimate import SMOOTH_COEF, estimate, smooth_1d
from .io import MODEL_VERSION, load_model, model_from_dict, model_to_dict, save_model
from .mlp import (
    DEFAULT_HIDDEN,
    AdamState,
    MlpConfig,
    MlpModel,
    adam_step,
    loss_and_gradients,
    mse_loss,
)
from .train import TrainConfig, sample_features, stack_features, train, validation_mse

__all__ = [
    "SMOOTH_COEF", "estimate", "smooth_1d", "MODEL_VERSION", "load_model",
    "model_from_dict", "model_to_dict", "save_model", "DEFAULT_HIDDEN", "AdamState",
    "MlpConfig", "MlpModel", "adam_step", "loss_and_gradients", "mse_loss",
    "TrainConfig", "sample_features", "stack_features", "train", "validation_mse",
]
