"""Combining distant and expert supervision per instance.

For every instance, the distant label set and the expert-predicted label
set partition the relation classes into three disjoint groups:

* agreements: classes both sources assert,
* recommendations: classes exactly one source asserts,
* others: classes neither source asserts.

The threshold slot belongs to none of the groups; the losses treat it as a
movable boundary between asserted and non-asserted classes.

Expert predictions are stored as TSV with full-precision floats so that a
table survives a save/load round trip bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import CorpusSplit, iter_instances
from .model import ModelParams, forward, predict_distribution, predict_labels


@dataclass(frozen=True)
class ClassPartition:
    agreements: frozenset
    recommendations: frozenset
    others: frozenset

    def __post_init__(self) -> None:
        if self.agreements & self.recommendations or self.agreements & self.others \
                or self.recommendations & self.others:
            raise ValueError("partition groups must be disjoint")

    @property
    def n_classes(self) -> int:
        return len(self.agreements) + len(self.recommendations) + len(self.others)


def partition_classes(ds_labels: frozenset, expert_labels: frozenset, n_classes: int) -> ClassPartition:
    """Split class indices by which supervision sources assert them."""
    universe = frozenset(range(n_classes))
    if not ds_labels <= universe:
        raise ValueError(f"ds labels {sorted(ds_labels - universe)} outside class range")
    if not expert_labels <= universe:
        raise ValueError(f"expert labels {sorted(expert_labels - universe)} outside class range")
    agreements = ds_labels & expert_labels
    recommendations = (ds_labels | expert_labels) - agreements
    return ClassPartition(
        agreements=agreements,
        recommendations=recommendations,
        others=universe - (ds_labels | expert_labels),
    )


@dataclass
class ExpertPrediction:
    doc_id: str
    instance_index: int
    labels: frozenset
    # Softmax over classes + threshold from the expert scorer.
    distribution: np.ndarray


class PredictionAlignmentError(ValueError):
    """Prediction table does not line up with the corpus it is applied to."""


@dataclass
class PredictionTable:
    n_classes: int
    # (doc_id, instance_index) -> ExpertPrediction
    entries: dict

    def get(self, doc_id: str, instance_index: int) -> ExpertPrediction:
        try:
            return self.entries[(doc_id, instance_index)]
        except KeyError:
            raise PredictionAlignmentError(
                f"no expert prediction for document {doc_id!r} instance {instance_index}"
            ) from None

    def __len__(self) -> int:
        return len(self.entries)


def run_expert(params: ModelParams, split: CorpusSplit) -> PredictionTable:
    """Score every instance of a split with the expert model."""
    if params.feature_dim != split.feature_dim:
        raise PredictionAlignmentError(
            f"expert expects feature_dim {params.feature_dim}, corpus has {split.feature_dim}"
        )
    if params.n_classes != split.schema.n_classes:
        raise PredictionAlignmentError(
            f"expert has {params.n_classes} classes, corpus schema has {split.schema.n_classes}"
        )
    entries = {}
    for doc, idx, inst in iter_instances(split):
        logits = forward(params, inst.features)
        entries[(doc.doc_id, idx)] = ExpertPrediction(
            doc_id=doc.doc_id,
            instance_index=idx,
            labels=predict_labels(logits, params.n_classes),
            distribution=predict_distribution(logits),
        )
    return PredictionTable(n_classes=params.n_classes, entries=entries)


# ---------------------------------------------------------------------------
# TSV IO. Columns: doc_id, instance_index, comma-joined label indices (or
# "-" for NA), then n_classes + 1 distribution entries via repr floats.


def save_predictions(table: PredictionTable, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(f"# expert-predictions\tn_classes={table.n_classes}\n")
        for key in sorted(table.entries):
            pred = table.entries[key]
            labels = ",".join(str(r) for r in sorted(pred.labels)) or "-"
            dist = "\t".join(repr(float(x)) for x in pred.distribution)
            fh.write(f"{pred.doc_id}\t{pred.instance_index}\t{labels}\t{dist}\n")


def load_predictions(path) -> PredictionTable:
    path = Path(path)
    entries = {}
    n_classes = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                for tok in line.split("\t"):
                    if tok.startswith("n_classes="):
                        n_classes = int(tok.split("=", 1)[1])
                continue
            parts = line.split("\t")
            if len(parts) < 4:
                raise ValueError(f"{path.name}: line {lineno}: expected at least 4 columns")
            doc_id, idx_s, labels_s = parts[0], parts[1], parts[2]
            idx = int(idx_s)
            labels = frozenset() if labels_s == "-" else frozenset(int(t) for t in labels_s.split(","))
            dist = np.array([float(t) for t in parts[3:]], dtype=np.float64)
            if n_classes is None:
                n_classes = dist.shape[0] - 1
            if dist.shape[0] != n_classes + 1:
                raise ValueError(
                    f"{path.name}: line {lineno}: distribution has {dist.shape[0]} entries, "
                    f"expected {n_classes + 1}"
                )
            if abs(float(dist.sum()) - 1.0) > 1e-6:
                raise ValueError(
                    f"{path.name}: line {lineno} ({doc_id} #{idx}): distribution sums to "
                    f"{float(dist.sum()):.6f}, not 1"
                )
            if any(not 0 <= r < n_classes for r in labels):
                raise ValueError(
                    f"{path.name}: line {lineno} ({doc_id} #{idx}): label outside "
                    f"0..{n_classes - 1}"
                )
            entries[(doc_id, idx)] = ExpertPrediction(
                doc_id=doc_id, instance_index=idx, labels=labels, distribution=dist
            )
    if n_classes is None:
        raise ValueError(f"{path.name}: empty prediction table")
    return PredictionTable(n_classes=n_classes, entries=entries)


def check_alignment(table: PredictionTable, split: CorpusSplit) -> None:
    """Raise unless the table covers every instance of the split."""
    if table.n_classes != split.schema.n_classes:
        raise PredictionAlignmentError(
            f"prediction table has {table.n_classes} classes, corpus schema has "
            f"{split.schema.n_classes}"
        )
    for doc, idx, _ in iter_instances(split):
        table.get(doc.doc_id, idx)
