"""Data model and file IO for document-level relation corpora.

A corpus split holds documents; each document enumerates its ordered
entity-pair instances, canonically sorted by (head, tail). An instance
carries a feature vector and a set of distantly supervised class indices;
annotated splits additionally carry gold label sets. The empty label set
means "no relation" (NA). NA and the adaptive-threshold slot are never
members of the relation schema.

Two formats are supported:

* native: JSON lines, one document per line, preceded by a single header
  line ``{"format": "corpus-jsonl/1", "split": ..., "feature_dim": ...,
  "classes": [...]}``. Feature vectors are explicit, so these corpora can
  feed the linear scorer directly.
* docred: a JSON array of documents with ``title``, ``sents``,
  ``vertexSet`` and ``labels`` entries. Text is not encoded here, so the
  loaded documents have zero-length feature vectors; they are usable for
  statistics and for informativeness ranking with externally produced
  predictions.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SPLIT_NAMES = ("annotated_train", "ds", "dev", "test")

FORMAT_TAG = "corpus-jsonl/1"

LabelSet = frozenset  # of int class indices; the empty set denotes NA


class CorpusError(ValueError):
    """Malformed corpus file or schema violation."""


@dataclass(frozen=True)
class RelationSchema:
    """Fixed ordered set of positive relation classes.

    "NA" is not a class: an empty label set denotes it. The adaptive
    threshold is likewise virtual; it only exists as the extra logit slot
    appended after the classes.
    """

    classes: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.classes) == 0:
            raise CorpusError("relation schema needs at least one class")
        if len(set(self.classes)) != len(self.classes):
            raise CorpusError("relation class identifiers must be unique")
        for name in self.classes:
            if not name:
                raise CorpusError("relation class identifiers must be non-empty")
            if name in ("NA", "TH"):
                raise CorpusError(f"reserved identifier {name!r} cannot be a relation class")

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def index_of(self, name: str) -> int:
        try:
            return self.classes.index(name)
        except ValueError:
            raise CorpusError(f"unknown relation id {name!r}") from None

    @classmethod
    def generic(cls, n_classes: int) -> "RelationSchema":
        """Schema with synthetic class names r0 .. r{n-1}."""
        if n_classes < 1:
            raise CorpusError("n_classes must be positive")
        return cls(tuple(f"r{i}" for i in range(n_classes)))


@dataclass
class Instance:
    """One ordered entity pair within a document."""

    head: int
    tail: int
    features: np.ndarray  # float64, shape (d,); d may be 0 for text corpora
    ds_labels: LabelSet = frozenset()


@dataclass
class Document:
    doc_id: str
    entity_count: int
    instances: list[Instance]
    # Parallel to instances when present (annotated / dev / test splits).
    gold_labels: list[LabelSet] | None = None
    # Global entity ids assigned by the synthetic generator, one per entity.
    entity_ids: list[int] | None = None
    # Mention name lists per entity, one list per entity (DocRED corpora).
    entity_names: list[list[str]] | None = None


@dataclass
class CorpusSplit:
    name: str
    documents: list[Document]
    feature_dim: int
    schema: RelationSchema

    @property
    def n_instances(self) -> int:
        return sum(len(d.instances) for d in self.documents)

    def document(self, doc_id: str) -> Document:
        for doc in self.documents:
            if doc.doc_id == doc_id:
                return doc
        raise KeyError(doc_id)


def iter_instances(split: CorpusSplit):
    """Yield (document, instance_index, instance) in canonical corpus order."""
    for doc in split.documents:
        for idx, inst in enumerate(doc.instances):
            yield doc, idx, inst


# ---------------------------------------------------------------------------
# Native format


def _labels_from_json(raw, n_classes: int, doc_id: str, what: str) -> LabelSet:
    if not isinstance(raw, list):
        raise CorpusError(f"document {doc_id}: {what} must be a list")
    out = set()
    for item in raw:
        if not isinstance(item, int) or isinstance(item, bool):
            raise CorpusError(f"document {doc_id}: {what} entry {item!r} is not an int")
        if not 0 <= item < n_classes:
            raise CorpusError(
                f"document {doc_id}: unknown relation id {item} (schema has {n_classes} classes)"
            )
        out.add(item)
    return frozenset(out)


def _document_from_json(rec: dict, feature_dim: int, n_classes: int) -> Document:
    doc_id = rec.get("doc_id")
    if not isinstance(doc_id, str) or not doc_id:
        raise CorpusError("document with missing or empty doc_id")
    entity_count = rec.get("entity_count")
    if not isinstance(entity_count, int) or entity_count < 1:
        raise CorpusError(f"document {doc_id}: entity_count must be a positive integer")
    raw_instances = rec.get("instances")
    if not isinstance(raw_instances, list):
        raise CorpusError(f"document {doc_id}: instances must be a list")

    instances: list[Instance] = []
    gold: list[LabelSet] = []
    has_gold = False
    for raw in raw_instances:
        head, tail = raw.get("head"), raw.get("tail")
        if not isinstance(head, int) or not isinstance(tail, int):
            raise CorpusError(f"document {doc_id}: instance head/tail must be ints")
        if head == tail:
            raise CorpusError(f"document {doc_id}: instance head == tail ({head})")
        if not (0 <= head < entity_count and 0 <= tail < entity_count):
            raise CorpusError(
                f"document {doc_id}: entity index out of range "
                f"(head={head}, tail={tail}, entity_count={entity_count})"
            )
        feats = np.asarray(raw.get("features", []), dtype=np.float64)
        if feats.ndim != 1 or feats.shape[0] != feature_dim:
            raise CorpusError(
                f"document {doc_id}: feature vector of length {feats.shape}, expected {feature_dim}"
            )
        ds = _labels_from_json(raw.get("ds_labels", []), n_classes, doc_id, "ds_labels")
        instances.append(Instance(head=head, tail=tail, features=feats, ds_labels=ds))
        if "gold_labels" in raw:
            has_gold = True
            gold.append(_labels_from_json(raw["gold_labels"], n_classes, doc_id, "gold_labels"))
        else:
            gold.append(frozenset())

    if has_gold and len(gold) != len(instances):
        raise CorpusError(f"document {doc_id}: gold labels not parallel to instances")

    entity_ids = rec.get("entity_ids")
    if entity_ids is not None:
        if not isinstance(entity_ids, list) or len(entity_ids) != entity_count:
            raise CorpusError(f"document {doc_id}: entity_ids must list one id per entity")

    order = sorted(range(len(instances)), key=lambda i: (instances[i].head, instances[i].tail))
    instances = [instances[i] for i in order]
    gold = [gold[i] for i in order]
    return Document(
        doc_id=doc_id,
        entity_count=entity_count,
        instances=instances,
        gold_labels=gold if has_gold else None,
        entity_ids=list(entity_ids) if entity_ids is not None else None,
    )


def load_native(path, split: str | None = None, schema: RelationSchema | None = None) -> CorpusSplit:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        lines = [ln for ln in (line.strip() for line in fh) if ln]

    header = None
    body = lines
    if lines:
        try:
            first = json.loads(lines[0])
        except json.JSONDecodeError as exc:
            raise CorpusError(f"{path.name}: line 1 is not valid JSON: {exc}") from exc
        if isinstance(first, dict) and first.get("format") == FORMAT_TAG:
            header = first
            body = lines[1:]

    if header is not None:
        split_name = split or header.get("split", "annotated_train")
        feature_dim = int(header.get("feature_dim", 0))
        classes = header.get("classes")
        if schema is None:
            if not classes:
                raise CorpusError(f"{path.name}: header lists no classes")
            schema = RelationSchema(tuple(classes))
    else:
        split_name = split or "annotated_train"
        feature_dim = None  # inferred from the first instance

    records = []
    for lineno, line in enumerate(body, start=2 if header else 1):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"{path.name}: line {lineno} is not valid JSON: {exc}") from exc
        if not isinstance(rec, dict):
            raise CorpusError(f"{path.name}: line {lineno} is not a document object")
        records.append(rec)

    if schema is None:
        # Headerless file: recover the class count from the label indices.
        top = -1
        for rec in records:
            for inst in rec.get("instances", []):
                for key in ("ds_labels", "gold_labels"):
                    for item in inst.get(key, []) or []:
                        if isinstance(item, int):
                            top = max(top, item)
        schema = RelationSchema.generic(max(top + 1, 1))
    if feature_dim is None:
        feature_dim = 0
        for rec in records:
            if rec.get("instances"):
                feature_dim = len(rec["instances"][0].get("features", []))
                break

    documents = [_document_from_json(rec, feature_dim, schema.n_classes) for rec in records]
    if split_name not in SPLIT_NAMES:
        raise CorpusError(f"unknown split name {split_name!r}, expected one of {SPLIT_NAMES}")
    return CorpusSplit(name=split_name, documents=documents, feature_dim=feature_dim, schema=schema)


def save_corpus(split: CorpusSplit, path) -> None:
    """Write a split in the native JSONL format (deterministic bytes)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        header = {
            "format": FORMAT_TAG,
            "split": split.name,
            "feature_dim": split.feature_dim,
            "classes": list(split.schema.classes),
        }
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        for doc in split.documents:
            rec: dict = {"doc_id": doc.doc_id, "entity_count": doc.entity_count}
            if doc.entity_ids is not None:
                rec["entity_ids"] = doc.entity_ids
            insts = []
            for idx, inst in enumerate(doc.instances):
                item: dict = {
                    "head": inst.head,
                    "tail": inst.tail,
                    "features": [float(x) for x in inst.features],
                    "ds_labels": sorted(inst.ds_labels),
                }
                if doc.gold_labels is not None:
                    item["gold_labels"] = sorted(doc.gold_labels[idx])
                insts.append(item)
            rec["instances"] = insts
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")


# ---------------------------------------------------------------------------
# DocRED format


def load_docred(path, split: str = "annotated_train", schema: RelationSchema | None = None) -> CorpusSplit:
    """Load a DocRED-style JSON array.

    Documents come back without feature vectors (feature_dim 0). All ordered
    entity pairs are enumerated as instances; pairs absent from ``labels``
    are NA. When ``split`` is "ds" the file's labels populate ds_labels,
    otherwise they populate gold_labels.
    """
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{path.name}: not valid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise CorpusError(f"{path.name}: expected a JSON array of documents")

    if schema is None:
        rel_ids = sorted(
            {
                lab.get("r")
                for rec in data
                for lab in rec.get("labels", [])
                if isinstance(lab.get("r"), str)
            }
        )
        schema = RelationSchema(tuple(rel_ids)) if rel_ids else RelationSchema.generic(1)

    documents = []
    for rec in data:
        title = rec.get("title")
        doc_id = title if isinstance(title, str) and title else f"doc-{len(documents)}"
        vertex_set = rec.get("vertexSet")
        if not isinstance(vertex_set, list) or not vertex_set:
            raise CorpusError(f"document {doc_id}: missing or empty vertexSet")
        n_ent = len(vertex_set)
        names = []
        for mentions in vertex_set:
            if not isinstance(mentions, list):
                raise CorpusError(f"document {doc_id}: vertexSet entries must be mention lists")
            names.append([m.get("name", "") for m in mentions if isinstance(m, dict)])

        by_pair: dict[tuple[int, int], set[int]] = {}
        for lab in rec.get("labels", []):
            h, t, r = lab.get("h"), lab.get("t"), lab.get("r")
            if not isinstance(h, int) or not isinstance(t, int):
                raise CorpusError(f"document {doc_id}: label h/t must be ints")
            if not (0 <= h < n_ent and 0 <= t < n_ent):
                raise CorpusError(
                    f"document {doc_id}: entity index out of range (h={h}, t={t}, entities={n_ent})"
                )
            if h == t:
                raise CorpusError(f"document {doc_id}: label head == tail ({h})")
            if not isinstance(r, str):
                raise CorpusError(f"document {doc_id}: label r must be a relation id string")
            by_pair.setdefault((h, t), set()).add(schema.index_of(r))

        instances = []
        labels = []
        empty = np.zeros(0, dtype=np.float64)
        for h in range(n_ent):
            for t in range(n_ent):
                if h == t:
                    continue
                labs = frozenset(by_pair.get((h, t), ()))
                instances.append(
                    Instance(head=h, tail=t, features=empty, ds_labels=labs if split == "ds" else frozenset())
                )
                labels.append(labs)
        documents.append(
            Document(
                doc_id=doc_id,
                entity_count=n_ent,
                instances=instances,
                gold_labels=None if split == "ds" else labels,
                entity_names=names,
            )
        )

    if split not in SPLIT_NAMES:
        raise CorpusError(f"unknown split name {split!r}, expected one of {SPLIT_NAMES}")
    return CorpusSplit(name=split, documents=documents, feature_dim=0, schema=schema)


def load_corpus(path, format: str = "native", split: str | None = None,
                schema: RelationSchema | None = None) -> CorpusSplit:
    if format == "native":
        return load_native(path, split=split, schema=schema)
    if format == "docred":
        return load_docred(path, split=split or "annotated_train", schema=schema)
    raise CorpusError(f"unknown corpus format {format!r}")


# ---------------------------------------------------------------------------
# Validation


@dataclass
class CorpusReport:
    document_count: int
    instance_count: int
    gold_class_counts: dict[int, int] = field(default_factory=dict)
    ds_class_counts: dict[int, int] = field(default_factory=dict)
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def distinct_gold_classes(self) -> int:
        return sum(1 for c in self.gold_class_counts.values() if c > 0)


def validate_corpus(split: CorpusSplit) -> CorpusReport:
    """Check split invariants; violations are reported, never raised."""
    n = split.schema.n_classes
    gold_counts: Counter = Counter()
    ds_counts: Counter = Counter()
    violations: list[str] = []
    seen_ids: set[str] = set()
    n_instances = 0

    for doc in split.documents:
        if doc.doc_id in seen_ids:
            violations.append(f"document {doc.doc_id}: duplicate doc_id")
        seen_ids.add(doc.doc_id)
        if doc.gold_labels is not None and len(doc.gold_labels) != len(doc.instances):
            violations.append(f"document {doc.doc_id}: gold labels not parallel to instances")
        if split.name != "ds" and doc.gold_labels is None:
            violations.append(f"document {doc.doc_id}: split {split.name!r} requires gold labels")
        pairs = set()
        for idx, inst in enumerate(doc.instances):
            n_instances += 1
            if inst.head == inst.tail:
                violations.append(f"document {doc.doc_id}: instance {idx} has head == tail")
            if not (0 <= inst.head < doc.entity_count and 0 <= inst.tail < doc.entity_count):
                violations.append(f"document {doc.doc_id}: instance {idx} entity index out of range")
            if (inst.head, inst.tail) in pairs:
                violations.append(f"document {doc.doc_id}: duplicate pair ({inst.head}, {inst.tail})")
            pairs.add((inst.head, inst.tail))
            if inst.features.shape != (split.feature_dim,):
                violations.append(f"document {doc.doc_id}: instance {idx} feature dimension mismatch")
            elif split.feature_dim and not np.all(np.isfinite(inst.features)):
                violations.append(f"document {doc.doc_id}: instance {idx} has non-finite features")
            for r in inst.ds_labels:
                if 0 <= r < n:
                    ds_counts[r] += 1
                else:
                    violations.append(f"document {doc.doc_id}: instance {idx} ds label {r} out of range")
            if doc.gold_labels is not None and idx < len(doc.gold_labels):
                for r in doc.gold_labels[idx]:
                    if 0 <= r < n:
                        gold_counts[r] += 1
                    else:
                        violations.append(
                            f"document {doc.doc_id}: instance {idx} gold label {r} out of range"
                        )

    return CorpusReport(
        document_count=len(split.documents),
        instance_count=n_instances,
        gold_class_counts=dict(sorted(gold_counts.items())),
        ds_class_counts=dict(sorted(ds_counts.items())),
        violations=violations,
    )
