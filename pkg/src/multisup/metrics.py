"""Fact-level evaluation: micro F1 and its ignore-train variant.

A predicted or gold fact is document-local: (doc_id, head, tail, relation).
Micro precision/recall/F1 compare those keys directly.

The ignore-train variant discounts correct predictions whose underlying
fact already occurs in the training data, since those can be recalled
verbatim rather than inferred. Matching against the training set happens
through fact projections that survive across documents:

* documents with global entity ids project to (head_id, tail_id, relation),
* documents with entity mention names project to the cross product of
  (head_name, tail_name, relation) over all mention name pairs,
* otherwise the fact stays document-local and never matches training data.

With k correct predictions whose projection intersects the training
projections, ignore-train precision is (c - k) / (n_pred - k); recall is
untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import CorpusSplit, Document


def fact_projections(doc: Document, head: int, tail: int, relation: int) -> frozenset:
    """Cross-document identities of one fact (possibly empty)."""
    if doc.entity_ids is not None:
        return frozenset({(doc.entity_ids[head], doc.entity_ids[tail], relation)})
    if doc.entity_names is not None:
        return frozenset(
            (hn, tn, relation)
            for hn in doc.entity_names[head]
            for tn in doc.entity_names[tail]
            if hn and tn
        )
    return frozenset()


@dataclass
class FactSet:
    # Document-local keys (doc_id, head, tail, relation).
    keys: set
    # key -> frozenset of cross-document projections.
    projections: dict

    def __len__(self) -> int:
        return len(self.keys)


def _facts_from_labels(split: CorpusSplit, labels_for) -> FactSet:
    keys = set()
    projections = {}
    for doc in split.documents:
        for idx, inst in enumerate(doc.instances):
            for r in labels_for(doc, idx, inst):
                key = (doc.doc_id, inst.head, inst.tail, int(r))
                keys.add(key)
                projections[key] = fact_projections(doc, inst.head, inst.tail, int(r))
    return FactSet(keys=keys, projections=projections)


def gold_facts(split: CorpusSplit) -> FactSet:
    if any(doc.gold_labels is None for doc in split.documents):
        raise ValueError(f"split {split.name!r} has documents without gold labels")
    return _facts_from_labels(split, lambda doc, idx, inst: doc.gold_labels[idx])


def predicted_facts(split: CorpusSplit, predictions: dict) -> FactSet:
    """predictions maps (doc_id, instance_index) to a label set."""
    return _facts_from_labels(
        split, lambda doc, idx, inst: predictions.get((doc.doc_id, idx), frozenset())
    )


def train_fact_projections(splits) -> set:
    """Union of fact projections asserted by the given training splits.

    Gold labels are used when a document has them, distant labels
    otherwise, mirroring what a model trained on the split actually saw.
    """
    out = set()
    for split in splits:
        for doc in split.documents:
            for idx, inst in enumerate(doc.instances):
                labels = doc.gold_labels[idx] if doc.gold_labels is not None else inst.ds_labels
                for r in labels:
                    out |= fact_projections(doc, inst.head, inst.tail, int(r))
    return out


@dataclass
class MetricsRecord:
    precision: float
    recall: float
    f1: float
    ign_precision: float
    ign_f1: float
    n_predicted: int
    n_gold: int
    n_correct: int

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "ign_precision": self.ign_precision,
            "ign_f1": self.ign_f1,
            "n_predicted": self.n_predicted,
            "n_gold": self.n_gold,
            "n_correct": self.n_correct,
        }


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def micro_f1(predicted: FactSet, gold: FactSet) -> tuple[float, float, float]:
    correct = len(predicted.keys & gold.keys)
    precision = correct / len(predicted.keys) if predicted.keys else 0.0
    recall = correct / len(gold.keys) if gold.keys else 0.0
    return precision, recall, _f1(precision, recall)


def ign_f1(predicted: FactSet, gold: FactSet, train_projections: set) -> tuple[float, float, float]:
    """Precision discounts correct predictions already present in training
    data; recall is the plain micro recall."""
    correct_keys = predicted.keys & gold.keys
    correct = len(correct_keys)
    in_train = sum(
        1 for key in correct_keys
        if predicted.projections.get(key, frozenset()) & train_projections
    )
    denom = len(predicted.keys) - in_train
    precision = (correct - in_train) / denom if denom > 0 else 0.0
    recall = correct / len(gold.keys) if gold.keys else 0.0
    return precision, recall, _f1(precision, recall)


def evaluate_predictions(split: CorpusSplit, predictions: dict,
                         train_projections: set | None = None) -> MetricsRecord:
    predicted = predicted_facts(split, predictions)
    gold = gold_facts(split)
    precision, recall, f1 = micro_f1(predicted, gold)
    ip, _, if1 = ign_f1(predicted, gold, train_projections or set())
    return MetricsRecord(
        precision=precision,
        recall=recall,
        f1=f1,
        ign_precision=ip,
        ign_f1=if1,
        n_predicted=len(predicted.keys),
        n_gold=len(gold.keys),
        n_correct=len(predicted.keys & gold.keys),
    )
