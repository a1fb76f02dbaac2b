"""Linear multi-label scorer with an adaptive threshold slot.

The scorer maps a feature vector to n_classes + 1 logits: one per relation
class, plus a final learned threshold logit. Prediction is ranking-based: a
class is emitted iff its logit strictly exceeds the threshold logit, so an
instance with no logit above the threshold predicts NA.

Checkpoints use a purpose-built little-endian binary layout rather than an
archive container, so that saving the same parameters twice yields the same
bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_MAGIC = b"MSUPLIN1"


@dataclass
class ModelParams:
    """Weights (n_classes + 1, feature_dim) and bias (n_classes + 1,).

    Row layout: rows 0..n_classes-1 score the relation classes in schema
    order; the final row scores the adaptive threshold.
    """

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ValueError("weights must be 2D (n_classes + 1, feature_dim)")
        if self.bias.shape != (self.weights.shape[0],):
            raise ValueError("bias must have one entry per logit row")
        if self.weights.shape[0] < 2:
            raise ValueError("need at least one class row plus the threshold row")

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0] - 1

    @property
    def feature_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def threshold_index(self) -> int:
        return self.n_classes

    @classmethod
    def zeros(cls, n_classes: int, feature_dim: int) -> "ModelParams":
        return cls(
            weights=np.zeros((n_classes + 1, feature_dim), dtype=np.float64),
            bias=np.zeros(n_classes + 1, dtype=np.float64),
        )

    def copy(self) -> "ModelParams":
        return ModelParams(weights=self.weights.copy(), bias=self.bias.copy())


def forward(params: ModelParams, features: np.ndarray) -> np.ndarray:
    """Logits for one instance, shape (n_classes + 1,)."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape != (params.feature_dim,):
        raise ValueError(
            f"feature vector of shape {features.shape}, model expects ({params.feature_dim},)"
        )
    return params.weights @ features + params.bias


def forward_batch(params: ModelParams, features: np.ndarray) -> np.ndarray:
    """Logits for a batch, shape (batch, n_classes + 1)."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != params.feature_dim:
        raise ValueError(
            f"feature batch of shape {features.shape}, model expects (*, {params.feature_dim})"
        )
    return features @ params.weights.T + params.bias


def predict_labels(logits: np.ndarray, n_classes: int | None = None) -> frozenset:
    """Classes whose logit strictly exceeds the threshold logit.

    A tie with the threshold does not predict the class, so all-equal
    logits (e.g. a zero-initialized model) predict NA.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if n_classes is None:
        n_classes = logits.shape[0] - 1
    if logits.shape != (n_classes + 1,):
        raise ValueError(f"logits of shape {logits.shape}, expected ({n_classes + 1},)")
    th = logits[n_classes]
    return frozenset(int(r) for r in range(n_classes) if logits[r] > th)


def self_labels(logits: np.ndarray) -> np.ndarray:
    """0/1 vector of length n_classes + 1 from the strict prediction rule.

    Entry r is 1 iff logit r strictly exceeds the threshold logit; the
    final (threshold) entry is 1 iff no class does, i.e. the model
    predicts NA.
    """
    logits = np.asarray(logits, dtype=np.float64)
    n_classes = logits.shape[0] - 1
    y = np.zeros(n_classes + 1, dtype=np.float64)
    th = logits[n_classes]
    pos = logits[:n_classes] > th
    y[:n_classes] = pos.astype(np.float64)
    y[n_classes] = 0.0 if pos.any() else 1.0
    return y


def predict_distribution(logits: np.ndarray) -> np.ndarray:
    """Softmax over all logits (classes + threshold), max-subtracted."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max()
    e = np.exp(shifted)
    return e / e.sum()


# ---------------------------------------------------------------------------
# Checkpoint IO

# Layout: magic (8 bytes), n_rows and feature_dim as uint32 little-endian,
# then weights row-major float64 LE, then bias float64 LE.


def save_params(params: ModelParams, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows, dim = params.weights.shape
    with path.open("wb") as fh:
        fh.write(_MAGIC)
        fh.write(np.array([rows, dim], dtype="<u4").tobytes())
        fh.write(np.ascontiguousarray(params.weights, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(params.bias, dtype="<f8").tobytes())


def load_params(path) -> ModelParams:
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < len(_MAGIC) + 8 or blob[: len(_MAGIC)] != _MAGIC:
        raise ValueError(f"{path.name}: not a scorer checkpoint")
    rows, dim = np.frombuffer(blob, dtype="<u4", count=2, offset=len(_MAGIC))
    rows, dim = int(rows), int(dim)
    offset = len(_MAGIC) + 8
    expect = offset + 8 * rows * dim + 8 * rows
    if len(blob) != expect:
        raise ValueError(f"{path.name}: truncated checkpoint ({len(blob)} bytes, expected {expect})")
    weights = np.frombuffer(blob, dtype="<f8", count=rows * dim, offset=offset).reshape(rows, dim)
    bias = np.frombuffer(blob, dtype="<f8", count=rows, offset=offset + 8 * rows * dim)
    return ModelParams(weights=weights.copy(), bias=bias.copy())


def save_params_meta(path, meta: dict) -> None:
    """Sidecar JSON next to a checkpoint (schema, config echo)."""
    side = Path(str(path) + ".meta.json")
    side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
