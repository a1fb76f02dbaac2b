"""Informativeness ranking of distantly supervised documents.

A document's informativeness is the sum, over its instances and over the
classes where distant and expert supervision agree, of a class-balance
weight times the expert's softmax confidence in that class. Only agreement
classes contribute: a class asserted by one source alone adds nothing, and
neither NA nor the threshold slot ever contributes. Documents are then
ranked by score and the top fraction is kept for training.

The per-class weights counteract the long-tailed label distribution: with
n_r occurrences of class r among n_total annotated positive labels across
N_r classes, class r gets weight n_total / (N_r * n_r). Rare classes thus
pull their documents up the ranking.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import CorpusSplit
from .supervision import PredictionTable, check_alignment


def compute_class_weights(split: CorpusSplit) -> np.ndarray:
    """Inverse-frequency class weights from a gold-labelled split.

    weight_r = n_total / (N_r * n_r) with n_r the count of class r, n_total
    the sum of all counts and N_r the number of classes. Classes absent from
    the split get the maximum weight of the present ones (a warning is
    issued); if no labels are present at all, every class gets weight 1.
    """
    n_classes = split.schema.n_classes
    counts = np.zeros(n_classes, dtype=np.float64)
    for doc in split.documents:
        labels = doc.gold_labels
        if labels is None:
            labels = [inst.ds_labels for inst in doc.instances]
        for label_set in labels:
            for r in label_set:
                counts[r] += 1.0
    total = counts.sum()
    if total == 0:
        warnings.warn("split has no positive labels; class weights default to 1")
        return np.ones(n_classes, dtype=np.float64)
    weights = np.zeros(n_classes, dtype=np.float64)
    present = counts > 0
    weights[present] = total / (n_classes * counts[present])
    if not present.all():
        missing = [int(r) for r in np.flatnonzero(~present)]
        warnings.warn(f"classes {missing} have no labels; assigning them the maximum weight")
        weights[~present] = weights[present].max()
    return weights


def informativeness(doc, table: PredictionTable, weights: np.ndarray) -> float:
    """Score one document: sum of weight * expert confidence over agreements.

    Accumulation order is fixed (instances in document order, classes
    ascending) so the score is a deterministic float.
    """
    score = 0.0
    for idx, inst in enumerate(doc.instances):
        pred = table.get(doc.doc_id, idx)
        agree = inst.ds_labels & pred.labels
        for r in sorted(agree):
            score += float(weights[r]) * float(pred.distribution[r])
    return score


@dataclass
class RankedCorpus:
    # Document ids sorted most informative first; ties broken by doc_id.
    doc_ids: list[str]
    scores: dict


def rank_documents(split: CorpusSplit, table: PredictionTable, weights: np.ndarray) -> RankedCorpus:
    check_alignment(table, split)
    if weights.shape != (split.schema.n_classes,):
        raise ValueError(
            f"weights of shape {weights.shape}, expected ({split.schema.n_classes},)"
        )
    scores = {doc.doc_id: informativeness(doc, table, weights) for doc in split.documents}
    ordered = sorted(scores, key=lambda d: (-scores[d], d))
    return RankedCorpus(doc_ids=ordered, scores=scores)


def select_count(n_documents: int, fraction: float) -> int:
    """Number of documents a fraction keeps: floor with an epsilon guard,
    at least 1 when any documents exist."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"selection fraction must lie in (0, 1], got {fraction}")
    if n_documents == 0:
        return 0
    return max(1, int(math.floor(n_documents * fraction + 1e-9)))


def select_top(ranking: RankedCorpus, fraction: float) -> list[str]:
    return ranking.doc_ids[: select_count(len(ranking.doc_ids), fraction)]


def take_documents(split: CorpusSplit, doc_ids) -> CorpusSplit:
    """Sub-split with the given documents, in the given order."""
    by_id = {doc.doc_id: doc for doc in split.documents}
    missing = [d for d in doc_ids if d not in by_id]
    if missing:
        raise KeyError(f"documents not in split: {missing[:5]}")
    return CorpusSplit(
        name=split.name,
        documents=[by_id[d] for d in doc_ids],
        feature_dim=split.feature_dim,
        schema=split.schema,
    )


def rank_and_select(
    split: CorpusSplit, table: PredictionTable, weights: np.ndarray, fraction: float
) -> tuple[RankedCorpus, CorpusSplit]:
    """Rank a corpus and keep the top fraction as an augmentation split."""
    if not split.documents:
        raise ValueError("cannot rank an empty split")
    ranking = rank_documents(split, table, weights)
    return ranking, take_documents(split, select_top(ranking, fraction))


def rank_random(split: CorpusSplit, fraction: float, seed: int) -> list[str]:
    """Uniform random selection baseline, same min-1 floor as select_top."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
    ids = [doc.doc_id for doc in split.documents]
    order = rng.permutation(len(ids))
    return [ids[i] for i in order[: select_count(len(ids), fraction)]]


def save_ranking(ranking: RankedCorpus, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write("rank\tdoc_id\tscore\n")
        for rank, doc_id in enumerate(ranking.doc_ids, start=1):
            fh.write(f"{rank}\t{doc_id}\t{ranking.scores[doc_id]:.6f}\n")


def load_ranking(path) -> list[str]:
    path = Path(path)
    out = []
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("rank\t"):
            raise ValueError(f"{path.name}: not a ranking file")
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path.name}: malformed ranking line {line!r}")
            out.append(parts[1])
    return out
