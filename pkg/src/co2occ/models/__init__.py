from .logistic import LogisticWeights, fit_logistic, predict_logistic
from .network import (NetworkConfig, NetworkWeights, forward, init_weights,
                      loss_and_gradients, mean_loss, predict, tensor_shapes)
from .serialize import load_weights, save_weights
from .training import TrainConfig, TrainingReport, rmsprop_step, train

__all__ = [
    "LogisticWeights",
    "NetworkConfig",
    "NetworkWeights",
    "TrainConfig",
    "TrainingReport",
    "fit_logistic",
    "forward",
    "init_weights",
    "load_weights",
    "loss_and_gradients",
    "mean_loss",
    "predict",
    "predict_logistic",
    "rmsprop_step",
    "save_weights",
    "tensor_shapes",
    "train",
]
