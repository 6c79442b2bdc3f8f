"""Mini-batch training with RMSprop, a chronological validation split and
patience-based early stopping.

The loss history starts with the validation loss of the untouched initial
weights, so a warm start that is already good shows up as epochs_to_best == 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dataset import WindowSet, split
from ..errors import DomainError, NumericalError, StructureError
from .network import (NetworkConfig, NetworkWeights, init_weights,
                      loss_and_gradients, mean_loss)

LOSS_DIVERGENCE_LIMIT = 1e6


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "rmsprop"
    learning_rate: float = 0.001
    batch_size: int = 70
    validation_fraction: float = 0.2
    patience: int = 20
    max_epochs: int = 300
    seed: int = 0
    rmsprop_decay: float = 0.9
    rmsprop_epsilon: float = 1e-7

    def __post_init__(self):
        if self.optimizer != "rmsprop":
            raise DomainError(f"unsupported optimizer {self.optimizer!r}")
        if self.learning_rate <= 0:
            raise DomainError("learning rate must be positive")
        if self.batch_size < 1:
            raise DomainError("batch size must be positive")
        if not 0.0 < self.validation_fraction < 1.0:
            raise DomainError("validation fraction must lie in (0, 1)")
        if self.patience < 1 or self.max_epochs < 1:
            raise DomainError("patience and max_epochs must be positive")
        if not 0.0 <= self.rmsprop_decay < 1.0:
            raise DomainError("rmsprop decay must lie in [0, 1)")
        if self.rmsprop_epsilon <= 0:
            raise DomainError("rmsprop epsilon must be positive")

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise StructureError(f"unknown train config keys: {sorted(extra)}")
        return cls(**data)


@dataclass
class TrainingReport:
    epochs_to_best: int
    best_val_loss: float
    history: list[float] = field(default_factory=list)
    stopped_epoch: int = 0


def rmsprop_step(tensors: dict[str, np.ndarray], grads: dict[str, np.ndarray],
                 state: dict[str, np.ndarray], config: TrainConfig) -> None:
    """acc <- decay*acc + (1-decay)*g^2; p -= lr * g / sqrt(acc + eps)."""
    decay = config.rmsprop_decay
    for name, g in grads.items():
        acc = state[name]
        acc *= decay
        acc += (1.0 - decay) * g * g
        tensors[name] -= config.learning_rate * g / np.sqrt(acc + config.rmsprop_epsilon)


def train(samples: WindowSet, net_config: NetworkConfig,
          train_config: TrainConfig = TrainConfig(),
          base: NetworkWeights | None = None) -> tuple[NetworkWeights, TrainingReport]:
    """Train from scratch, or fine-tune ``base`` (weights and normalization
    statistics are taken from it) when given. Returns the weights of the
    best validation epoch.
    """
    n = len(samples)
    if n < 2 * train_config.batch_size:
        raise DomainError(
            f"need at least {2 * train_config.batch_size} samples, got {n}")
    train_set, val_set = split(samples, train_config.validation_fraction)
    rng = np.random.default_rng(train_config.seed)

    if base is not None:
        if base.config != net_config:
            raise StructureError("base weights were built for a different architecture")
        base.check_shapes()
        weights = base.copy()
    else:
        mean = float(train_set.inputs.mean())
        std = float(train_set.inputs.std())
        if std == 0.0:
            raise DomainError("training inputs are constant")
        weights = init_weights(net_config, rng, mean, std)

    state = {name: np.zeros_like(t) for name, t in weights.tensors.items()}
    history = [mean_loss(weights, val_set.inputs, val_set.labels)]
    best = weights.copy()
    best_val = history[0]
    best_epoch = 0

    n_train = len(train_set)
    bs = train_config.batch_size
    epoch = 0
    for epoch in range(1, train_config.max_epochs + 1):
        order = rng.permutation(n_train)
        for lo in range(0, n_train, bs):
            idx = order[lo:lo + bs]
            loss, grads = loss_and_gradients(
                weights, train_set.inputs[idx], train_set.labels[idx],
                train_mode=True, rng=rng)
            if loss > LOSS_DIVERGENCE_LIMIT:
                raise NumericalError(f"training diverged, batch loss {loss:.3g}")
            rmsprop_step(weights.tensors, grads, state, train_config)
        val = mean_loss(weights, val_set.inputs, val_set.labels)
        history.append(val)
        if val < best_val:
            best_val = val
            best_epoch = epoch
            best = weights.copy()
        elif epoch - best_epoch >= train_config.patience:
            break
    return best, TrainingReport(best_epoch, best_val, history, stopped_epoch=epoch)
