"""Mini-batch SGD training of the linear scorer under ranking losses.

Two training roles share one loop:

* the expert is fit on the annotated split alone, gold labels entering the
  agreement route and nothing entering the candidate route (with all-one
  weights this is exactly the adaptive-threshold objective),
* the main model is fit on annotated documents plus an augmentation set of
  distantly supervised documents, whose labels are partitioned against the
  expert's predictions.

The supervision policy picks which sources feed the partition on
augmentation instances: "multi" partitions distant against expert labels,
"distant-only" and "expert-only" use a single source, which degenerates to
that source's labels sitting in the agreement group.

Determinism: parameters start at zero, batches are drawn by a generator
seeded from the run seed alone, and the learning rate follows a linear
warmup to a constant. Reruns with the same inputs produce identical
parameters.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .corpus import CorpusSplit, iter_instances
from .loss import LossConfig, msrl_loss_batch, partition_masks
from .metrics import MetricsRecord, evaluate_predictions
from .model import ModelParams, forward_batch
from .supervision import PredictionTable, check_alignment

POLICIES = ("multi", "distant-only", "expert-only")


@dataclass
class TrainConfig:
    expert_epochs: int = 30
    main_epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 0.1
    warmup_fraction: float = 0.06
    loss: LossConfig = field(default_factory=LossConfig)
    augmentation_policy: str = "multi"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.expert_epochs < 1 or self.main_epochs < 1:
            raise ValueError("epoch counts must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ValueError("warmup_fraction must lie in [0, 1)")
        if self.augmentation_policy not in POLICIES:
            raise ValueError(
                f"augmentation_policy must be one of {POLICIES}, got {self.augmentation_policy!r}"
            )


@dataclass
class TrainingPool:
    """Instances flattened for the batched loss."""

    features: np.ndarray  # (m, feature_dim)
    agg_mask: np.ndarray  # (m, n_classes) bool
    rec_mask: np.ndarray  # (m, n_classes) bool
    n_classes: int

    def __len__(self) -> int:
        return self.features.shape[0]


def _pool_from_rows(rows, feature_dim: int, n_classes: int) -> TrainingPool:
    if rows:
        features = np.stack([r[0] for r in rows])
        agg = np.stack([r[1] for r in rows])
        rec = np.stack([r[2] for r in rows])
    else:
        features = np.zeros((0, feature_dim), dtype=np.float64)
        agg = np.zeros((0, n_classes), dtype=bool)
        rec = np.zeros((0, n_classes), dtype=bool)
    return TrainingPool(features=features, agg_mask=agg, rec_mask=rec, n_classes=n_classes)


def build_pool(annotated: CorpusSplit | None,
               augmentation: CorpusSplit | None = None,
               table: PredictionTable | None = None,
               policy: str = "multi") -> TrainingPool:
    """Flatten training splits into loss-ready arrays.

    Annotated instances contribute their gold labels as agreements.
    Augmentation instances are partitioned according to the policy; the
    "multi" policy requires an expert prediction table covering them.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown augmentation policy {policy!r}")
    ref = annotated or augmentation
    if ref is None:
        raise ValueError("at least one split is required")
    n_classes = ref.schema.n_classes
    feature_dim = ref.feature_dim
    rows = []
    if annotated is not None:
        if annotated.schema.n_classes != n_classes or annotated.feature_dim != feature_dim:
            raise ValueError("annotated split schema/feature mismatch")
        for doc, idx, inst in iter_instances(annotated):
            gold = doc.gold_labels[idx] if doc.gold_labels is not None else inst.ds_labels
            agg, rec = partition_masks(gold, gold, n_classes)
            rows.append((inst.features, agg, rec))
    if augmentation is not None and augmentation.documents:
        if augmentation.schema.n_classes != n_classes or augmentation.feature_dim != feature_dim:
            raise ValueError("augmentation split schema/feature mismatch")
        if policy == "multi":
            if table is None:
                raise ValueError("the multi policy needs an expert prediction table")
            check_alignment(table, augmentation)
        for doc, idx, inst in iter_instances(augmentation):
            if policy == "multi":
                expert = table.get(doc.doc_id, idx).labels
                agg, rec = partition_masks(inst.ds_labels, expert, n_classes)
            elif policy == "distant-only":
                agg, rec = partition_masks(inst.ds_labels, inst.ds_labels, n_classes)
            else:
                expert = table.get(doc.doc_id, idx).labels if table is not None else frozenset()
                agg, rec = partition_masks(expert, expert, n_classes)
            rows.append((inst.features, agg, rec))
    return _pool_from_rows(rows, feature_dim, n_classes)


@dataclass
class EpochStats:
    epoch: int
    mean_loss: float
    dev_f1: float | None = None
    dev_ign_f1: float | None = None


@dataclass
class TrainResult:
    params: ModelParams
    history: list
    best_epoch: int
    best_dev_f1: float | None
    wall_seconds: float = 0.0


def dataset_loss(params: ModelParams, pool: TrainingPool, loss_config: LossConfig) -> float:
    """Mean per-instance loss over the whole pool."""
    if len(pool) == 0:
        return 0.0
    logits = forward_batch(params, pool.features)
    losses, _ = msrl_loss_batch(logits, pool.agg_mask, pool.rec_mask, loss_config)
    return float(losses.mean())


def predict_split(params: ModelParams, split: CorpusSplit) -> dict:
    """(doc_id, instance_index) -> predicted label set, strict rule."""
    predictions = {}
    feats = []
    keys = []
    for doc, idx, inst in iter_instances(split):
        feats.append(inst.features)
        keys.append((doc.doc_id, idx))
    if not keys:
        return predictions
    logits = forward_batch(params, np.stack(feats))
    n = params.n_classes
    above = logits[:, :n] > logits[:, n:]
    for row, key in enumerate(keys):
        predictions[key] = frozenset(int(r) for r in np.flatnonzero(above[row]))
    return predictions


def evaluate(params: ModelParams, split: CorpusSplit,
             train_projections: set | None = None) -> MetricsRecord:
    return evaluate_predictions(split, predict_split(params, split), train_projections)


def _fit(pool: TrainingPool, feature_dim: int, epochs: int, config: TrainConfig,
         loss_config: LossConfig, dev: CorpusSplit | None) -> TrainResult:
    t0 = time.monotonic()
    params = ModelParams.zeros(pool.n_classes, feature_dim)
    m = len(pool)
    if m == 0:
        raise ValueError("training pool is empty")
    steps_per_epoch = math.ceil(m / config.batch_size)
    total_steps = epochs * steps_per_epoch
    warmup_steps = max(1, int(math.floor(config.warmup_fraction * total_steps)))
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 8]))

    history: list[EpochStats] = []
    best = params.copy()
    best_f1 = -1.0
    best_epoch = 0
    step = 0
    for epoch in range(1, epochs + 1):
        order = rng.permutation(m)
        epoch_loss = 0.0
        for start in range(0, m, config.batch_size):
            batch = order[start:start + config.batch_size]
            x = pool.features[batch]
            logits = forward_batch(params, x)
            losses, grads = msrl_loss_batch(
                logits, pool.agg_mask[batch], pool.rec_mask[batch], loss_config
            )
            lr = config.learning_rate * min(1.0, (step + 1) / warmup_steps)
            scale = lr / batch.shape[0]
            params.weights -= scale * (grads.T @ x)
            params.bias -= scale * grads.sum(axis=0)
            epoch_loss += float(losses.sum())
            step += 1
        stats = EpochStats(epoch=epoch, mean_loss=epoch_loss / m)
        if dev is not None:
            record = evaluate(params, dev)
            stats.dev_f1 = record.f1
            stats.dev_ign_f1 = record.ign_f1
            if stats.dev_f1 > best_f1:
                best_f1 = stats.dev_f1
                best = params.copy()
                best_epoch = epoch
        history.append(stats)

    wall = time.monotonic() - t0
    if dev is None:
        return TrainResult(params=params, history=history, best_epoch=epochs,
                           best_dev_f1=None, wall_seconds=wall)
    return TrainResult(params=best, history=history, best_epoch=best_epoch,
                       best_dev_f1=best_f1, wall_seconds=wall)


def train_expert(annotated: CorpusSplit, config: TrainConfig,
                 dev: CorpusSplit | None = None) -> TrainResult:
    """Fit the expert on annotated data: gold labels in the agreement
    route, empty recommendations."""
    pool = build_pool(annotated)
    return _fit(pool, annotated.feature_dim, config.expert_epochs, config, config.loss, dev)


def train_main(annotated: CorpusSplit | None, augmentation: CorpusSplit | None,
               table: PredictionTable | None, config: TrainConfig,
               dev: CorpusSplit | None = None) -> TrainResult:
    """Fit the main model on annotated plus augmentation instances."""
    pool = build_pool(annotated, augmentation, table, config.augmentation_policy)
    ref = annotated or augmentation
    return _fit(pool, ref.feature_dim, config.main_epochs, config, config.loss, dev)
