"""Occupancy detector: 1-D conv front end, stacked bidirectional LSTMs,
dense head with dropout, softmax over {absent, present}.

Weights are plain float64 arrays in a name-keyed dict so the optimizer,
gradient checks and serialization can treat them uniformly. Inputs are
raw ppm windows; normalization statistics travel with the weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, NumericalError, StructureError
from . import layers


@dataclass(frozen=True)
class NetworkConfig:
    conv_filters: int = 10
    conv_kernel: int = 3
    pool_factor: int = 2
    recurrent_units: tuple[int, ...] = (200, 150, 100)
    fc_units: tuple[int, ...] = (300, 200)
    dropout_probs: tuple[float, ...] = (0.5, 0.3)
    classes: int = 2
    input_length: int = 15
    input_channels: int = 1

    def __post_init__(self):
        object.__setattr__(self, "recurrent_units", tuple(int(u) for u in self.recurrent_units))
        object.__setattr__(self, "fc_units", tuple(int(u) for u in self.fc_units))
        object.__setattr__(self, "dropout_probs", tuple(float(p) for p in self.dropout_probs))
        if self.input_length < 1 or self.conv_filters < 1 or self.conv_kernel < 1:
            raise DomainError("conv sizes must be positive")
        if self.input_channels != 1:
            raise DomainError("only single-channel inputs are supported")
        if self.conv_kernel > self.input_length:
            raise DomainError("conv kernel longer than input")
        if self.pool_factor < 1:
            raise DomainError("pool factor must be >= 1")
        if self.pooled_length < 1:
            raise DomainError("pooling consumes the whole sequence")
        if not self.recurrent_units:
            raise DomainError("at least one recurrent layer is required")
        if any(u < 1 for u in self.recurrent_units) or any(u < 1 for u in self.fc_units):
            raise DomainError("layer widths must be positive")
        if any(not 0.0 <= p < 1.0 for p in self.dropout_probs):
            raise DomainError("dropout probabilities must lie in [0, 1)")
        if len(self.dropout_probs) > len(self.fc_units):
            raise DomainError("more dropout probabilities than dense layers")
        if self.classes < 2:
            raise DomainError("need at least two classes")

    @property
    def conv_length(self) -> int:
        return self.input_length - self.conv_kernel + 1

    @property
    def pooled_length(self) -> int:
        return self.conv_length // self.pool_factor

    def to_dict(self) -> dict:
        return {
            "conv_filters": self.conv_filters,
            "conv_kernel": self.conv_kernel,
            "pool_factor": self.pool_factor,
            "recurrent_units": list(self.recurrent_units),
            "fc_units": list(self.fc_units),
            "dropout_probs": list(self.dropout_probs),
            "classes": self.classes,
            "input_length": self.input_length,
            "input_channels": self.input_channels,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise StructureError(f"unknown network config keys: {sorted(extra)}")
        return cls(**data)


def tensor_shapes(config: NetworkConfig) -> dict[str, tuple[int, ...]]:
    """Canonical tensor names and shapes; iteration order is also the
    initialization draw order."""
    shapes: dict[str, tuple[int, ...]] = {
        "conv/w": (config.conv_kernel, config.input_channels, config.conv_filters),
        "conv/b": (config.conv_filters,),
    }
    in_dim = config.conv_filters
    for i, u in enumerate(config.recurrent_units):
        for d in ("fwd", "bwd"):
            shapes[f"lstm{i}/{d}/wx"] = (in_dim, 4 * u)
            shapes[f"lstm{i}/{d}/wh"] = (u, 4 * u)
            shapes[f"lstm{i}/{d}/b"] = (4 * u,)
        in_dim = 2 * u
    for j, u in enumerate(config.fc_units):
        shapes[f"fc{j}/w"] = (in_dim, u)
        shapes[f"fc{j}/b"] = (u,)
        in_dim = u
    shapes["out/w"] = (in_dim, config.classes)
    shapes["out/b"] = (config.classes,)
    return shapes


@dataclass
class NetworkWeights:
    config: NetworkConfig
    norm_mean: float
    norm_std: float
    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    def copy(self) -> "NetworkWeights":
        return NetworkWeights(self.config, self.norm_mean, self.norm_std,
                              {k: v.copy() for k, v in self.tensors.items()})

    def check_shapes(self) -> None:
        expected = tensor_shapes(self.config)
        for name, shape in expected.items():
            if name not in self.tensors:
                raise StructureError(f"missing tensor {name}")
            if self.tensors[name].shape != shape:
                raise StructureError(
                    f"tensor {name} has shape {self.tensors[name].shape}, expected {shape}")
        extra = set(self.tensors) - set(expected)
        if extra:
            raise StructureError(f"unexpected tensors: {sorted(extra)}")


def _glorot_fans(name: str, shape: tuple[int, ...]) -> tuple[int, int]:
    if name == "conv/w":
        k, ci, co = shape
        return k * ci, k * co
    return shape[0], shape[1]


def init_weights(config: NetworkConfig, rng: np.random.Generator,
                 norm_mean: float = 0.0, norm_std: float = 1.0) -> NetworkWeights:
    """Glorot-uniform weight matrices, zero biases, LSTM forget bias 1."""
    if norm_std <= 0:
        raise DomainError("normalization std must be positive")
    tensors: dict[str, np.ndarray] = {}
    for name, shape in tensor_shapes(config).items():
        if name.endswith("/b"):
            t = np.zeros(shape)
            if "lstm" in name:
                u = shape[0] // 4
                t[u:2 * u] = 1.0
        else:
            fan_in, fan_out = _glorot_fans(name, shape)
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            t = rng.uniform(-limit, limit, size=shape)
        tensors[name] = t
    return NetworkWeights(config, float(norm_mean), float(norm_std), tensors)


def _forward_full(weights: NetworkWeights, inputs: np.ndarray,
                  train_mode: bool, rng: np.random.Generator | None):
    cfg = weights.config
    if inputs.ndim != 2 or inputs.shape[1] != cfg.input_length:
        raise StructureError(
            f"expected inputs of shape (n, {cfg.input_length}), got {inputs.shape}")
    if train_mode and rng is None and any(p > 0 for p in cfg.dropout_probs):
        raise DomainError("train-mode forward with dropout needs an rng")
    t = weights.tensors

    x = (inputs - weights.norm_mean) / weights.norm_std
    x = x[:, :, None]
    caches: dict[str, object] = {}

    h, caches["conv"] = layers.conv1d_forward(x, t["conv/w"], t["conv/b"])
    h, caches["conv_relu"] = layers.relu_forward(h)
    h, caches["pool"] = layers.maxpool1d_forward(h, cfg.pool_factor)

    n_rec = len(cfg.recurrent_units)
    for i, u in enumerate(cfg.recurrent_units):
        hf, caches[f"lstm{i}/fwd"] = layers.lstm_forward(
            h, t[f"lstm{i}/fwd/wx"], t[f"lstm{i}/fwd/wh"], t[f"lstm{i}/fwd/b"])
        hb, caches[f"lstm{i}/bwd"] = layers.lstm_forward(
            h, t[f"lstm{i}/bwd/wx"], t[f"lstm{i}/bwd/wh"], t[f"lstm{i}/bwd/b"],
            reverse=True)
        if i < n_rec - 1:
            h = np.concatenate([hf, hb], axis=2)
        else:
            # last layer summarizes the window by its two final states
            h = np.concatenate([hf[:, -1, :], hb[:, 0, :]], axis=1)

    probs = list(cfg.dropout_probs) + [0.0] * (len(cfg.fc_units) - len(cfg.dropout_probs))
    for j, _ in enumerate(cfg.fc_units):
        h, caches[f"drop{j}"] = layers.dropout_forward(h, probs[j], train_mode, rng)
        h, caches[f"fc{j}"] = layers.dense_forward(h, t[f"fc{j}/w"], t[f"fc{j}/b"])
        h, caches[f"fc{j}_relu"] = layers.relu_forward(h)
    logits, caches["out"] = layers.dense_forward(h, t["out/w"], t["out/b"])
    return logits, caches


def forward(weights: NetworkWeights, inputs: np.ndarray,
            train_mode: bool = False, rng: np.random.Generator | None = None) -> np.ndarray:
    """Class probabilities for raw (unnormalized) input windows."""
    logits, _ = _forward_full(weights, inputs, train_mode, rng)
    return layers.softmax(logits)


def predict(weights: NetworkWeights, inputs: np.ndarray,
            batch_size: int = 512) -> np.ndarray:
    """Hard labels in inference mode, batched to bound memory."""
    out = np.empty(len(inputs), dtype=np.int64)
    for lo in range(0, len(inputs), batch_size):
        p = forward(weights, inputs[lo:lo + batch_size])
        out[lo:lo + batch_size] = p.argmax(axis=1)
    return out


def mean_loss(weights: NetworkWeights, inputs: np.ndarray, labels: np.ndarray,
              batch_size: int = 512) -> float:
    """Mean cross-entropy in inference mode."""
    total = 0.0
    for lo in range(0, len(inputs), batch_size):
        p = forward(weights, inputs[lo:lo + batch_size])
        batch_labels = labels[lo:lo + batch_size]
        picked = p[np.arange(len(batch_labels)), batch_labels]
        total += float(-np.log(np.maximum(picked, 1e-300)).sum())
    return total / len(inputs)


def loss_and_gradients(weights: NetworkWeights, inputs: np.ndarray,
                       labels: np.ndarray, train_mode: bool = False,
                       rng: np.random.Generator | None = None):
    """Mean cross-entropy and its gradient for every tensor.

    Raises NumericalError naming the first offending sample when a
    per-sample loss is non-finite.
    """
    cfg = weights.config
    t = weights.tensors
    labels = np.asarray(labels)
    if inputs.shape[0] == 0:
        raise DomainError("batch must be non-empty")
    if labels.shape != (inputs.shape[0],):
        raise StructureError("labels must be one int per input row")
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= cfg.classes:
        raise DomainError("label outside class range")

    logits, caches = _forward_full(weights, inputs, train_mode, rng)
    probs = layers.softmax(logits)
    n = len(labels)
    picked = probs[np.arange(n), labels]
    with np.errstate(divide="ignore"):
        sample_losses = -np.log(picked)
    bad = ~np.isfinite(sample_losses)
    if bad.any():
        raise NumericalError("non-finite loss", index=int(np.argmax(bad)))
    loss = float(sample_losses.mean())

    grads: dict[str, np.ndarray] = {}
    d = probs.copy()
    d[np.arange(n), labels] -= 1.0
    d /= n
    d, grads["out/w"], grads["out/b"] = layers.dense_backward(d, caches["out"])
    for j in range(len(cfg.fc_units) - 1, -1, -1):
        d = layers.relu_backward(d, caches[f"fc{j}_relu"])
        d, grads[f"fc{j}/w"], grads[f"fc{j}/b"] = layers.dense_backward(d, caches[f"fc{j}"])
        d = layers.dropout_backward(d, caches[f"drop{j}"])

    n_rec = len(cfg.recurrent_units)
    for i in range(n_rec - 1, -1, -1):
        u = cfg.recurrent_units[i]
        seq_len = caches[f"lstm{i}/fwd"][0].shape[1]
        if i == n_rec - 1:
            dHf = np.zeros((len(inputs), seq_len, u))
            dHb = np.zeros((len(inputs), seq_len, u))
            dHf[:, -1, :] = d[:, :u]
            dHb[:, 0, :] = d[:, u:]
        else:
            dHf = d[:, :, :u]
            dHb = d[:, :, u:]
        dxf, grads[f"lstm{i}/fwd/wx"], grads[f"lstm{i}/fwd/wh"], grads[f"lstm{i}/fwd/b"] = \
            layers.lstm_backward(dHf, caches[f"lstm{i}/fwd"])
        dxb, grads[f"lstm{i}/bwd/wx"], grads[f"lstm{i}/bwd/wh"], grads[f"lstm{i}/bwd/b"] = \
            layers.lstm_backward(dHb, caches[f"lstm{i}/bwd"])
        d = dxf + dxb

    d = layers.maxpool1d_backward(d, caches["pool"])
    d = layers.relu_backward(d, caches["conv_relu"])
    _, grads["conv/w"], grads["conv/b"] = layers.conv1d_backward(d, caches["conv"])
    return loss, grads
