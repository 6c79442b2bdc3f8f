"""Weight files: a single JSON document with the architecture, the
normalization statistics and every tensor as base64-encoded little-endian
float64 bytes in row-major order. Round trips are bit-exact.
"""

from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

from ..errors import FormatError, StructureError
from .network import NetworkConfig, NetworkWeights, tensor_shapes

FORMAT_NAME = "co2occ-weights"
FORMAT_VERSION = 1


def _encode(t: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(t, dtype="<f8").tobytes()).decode("ascii")


def _decode(text: str, shape: tuple[int, ...], name: str) -> np.ndarray:
    try:
        raw = base64.b64decode(text.encode("ascii"), validate=True)
    except Exception as exc:
        raise FormatError(f"tensor {name}: invalid base64") from exc
    flat = np.frombuffer(raw, dtype="<f8")
    expected = int(np.prod(shape)) if shape else 1
    if flat.size != expected:
        raise StructureError(
            f"tensor {name} has {flat.size} values, expected {expected}")
    return flat.reshape(shape).astype(np.float64)


def save_weights(path: str | Path, weights: NetworkWeights) -> None:
    weights.check_shapes()
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "network": weights.config.to_dict(),
        "norm_mean": weights.norm_mean,
        "norm_std": weights.norm_std,
        "tensors": {name: _encode(t) for name, t in weights.tensors.items()},
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def load_weights(path: str | Path) -> NetworkWeights:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise FormatError(f"{path}: not a {FORMAT_NAME} file")
    if doc.get("version") != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {doc.get('version')!r}")
    for key in ("network", "norm_mean", "norm_std", "tensors"):
        if key not in doc:
            raise FormatError(f"{path}: missing field {key!r}")

    config = NetworkConfig.from_dict(doc["network"])
    expected = tensor_shapes(config)
    stored = doc["tensors"]
    if not isinstance(stored, dict):
        raise FormatError(f"{path}: tensors must be an object")
    missing = set(expected) - set(stored)
    if missing:
        raise StructureError(f"missing tensor {sorted(missing)[0]}")
    extra = set(stored) - set(expected)
    if extra:
        raise StructureError(f"unexpected tensor {sorted(extra)[0]}")
    tensors = {name: _decode(stored[name], shape, name)
               for name, shape in expected.items()}
    weights = NetworkWeights(config, float(doc["norm_mean"]),
                             float(doc["norm_std"]), tensors)
    weights.check_shapes()
    return weights
