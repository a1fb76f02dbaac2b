"""Synthetic multi-label relation corpora with a controllable noise process.

The generator draws a virtual knowledge base over a fixed entity pool:
every ordered entity pair has a latent gold label set, sampled lazily from
an RNG keyed by (seed, pair), so the same pair carries the same relations in
whichever document or split it appears. Feature vectors are sums of
per-class prototype directions plus isotropic Gaussian noise, which makes
the learning problem linear-separable in expectation but ambiguous at high
noise.

Distantly supervised splits corrupt the gold sets with independent
per-label false negatives (drop probability) and per-class false positives
(add probability scaled by class prior), mimicking incomplete and spurious
KB alignment. Annotated, dev and test splits keep the gold sets as labels;
the ds split keeps them too, but only as diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import CorpusSplit, Document, Instance, RelationSchema

_PAIR_TAG = 2
_SPLIT_TAGS = {"annotated_train": 3, "ds": 4, "dev": 5, "test": 6}


@dataclass
class SynthConfig:
    n_classes: int = 24
    feature_dim: int = 32
    n_annotated: int = 200
    n_ds: int = 2000
    n_dev: int = 200
    n_test: int = 200
    # Per-label probability that DS alignment misses a gold relation.
    false_negative_rate: float = 0.3
    # Scale on per-class priors for spurious DS relations.
    false_positive_rate: float = 0.3
    noise_sigma: float = 1.0
    zipf_exponent: float = 1.0
    entity_pool: int = 150
    min_pairs_per_doc: int = 2
    max_pairs_per_doc: int = 20
    # Probability that a pair holds any relation at all in the virtual KB.
    positive_rate: float = 0.35
    # Probability that a positive pair holds two relations instead of one.
    multi_label_rate: float = 0.15
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_classes < 1:
            raise ValueError("n_classes must be positive")
        if self.feature_dim < 1:
            raise ValueError("feature_dim must be positive")
        for name in ("false_negative_rate", "false_positive_rate", "positive_rate", "multi_label_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if self.entity_pool < 3:
            raise ValueError("entity_pool must be at least 3")
        if not 1 <= self.min_pairs_per_doc <= self.max_pairs_per_doc:
            raise ValueError("need 1 <= min_pairs_per_doc <= max_pairs_per_doc")


@dataclass
class SynthResult:
    annotated: CorpusSplit
    ds: CorpusSplit
    dev: CorpusSplit
    test: CorpusSplit
    schema: RelationSchema
    class_priors: np.ndarray
    prototypes: np.ndarray = field(repr=False)

    @property
    def splits(self) -> dict[str, CorpusSplit]:
        return {
            "annotated_train": self.annotated,
            "ds": self.ds,
            "dev": self.dev,
            "test": self.test,
        }


def class_priors(n_classes: int, zipf_exponent: float) -> np.ndarray:
    """Zipfian class prior, normalized: p_r proportional to 1/(r+1)^a."""
    ranks = np.arange(1, n_classes + 1, dtype=np.float64)
    raw = ranks ** (-float(zipf_exponent))
    return raw / raw.sum()


class _VirtualKB:
    """Lazy gold label sets over ordered entity pairs, stable under reuse."""

    def __init__(self, cfg: SynthConfig, priors: np.ndarray) -> None:
        self.cfg = cfg
        self.priors = priors
        self._cache: dict[tuple[int, int], frozenset] = {}

    def gold(self, head_id: int, tail_id: int) -> frozenset:
        key = (head_id, tail_id)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        rng = np.random.default_rng(np.random.SeedSequence([self.cfg.seed, _PAIR_TAG, head_id, tail_id]))
        if rng.random() >= self.cfg.positive_rate:
            labels = frozenset()
        else:
            k = 2 if (self.cfg.n_classes >= 2 and rng.random() < self.cfg.multi_label_rate) else 1
            chosen = rng.choice(self.cfg.n_classes, size=k, replace=False, p=self.priors)
            labels = frozenset(int(c) for c in chosen)
        self._cache[key] = labels
        return labels


def _entity_count_bounds(cfg: SynthConfig) -> tuple[int, int]:
    # Smallest/largest n with min <= n(n-1) <= max pairs; a document always
    # enumerates all ordered pairs of its entities.
    lo = 2
    while lo * (lo - 1) < cfg.min_pairs_per_doc:
        lo += 1
    hi = lo
    while (hi + 1) * hi <= cfg.max_pairs_per_doc:
        hi += 1
    return lo, hi


def _corrupt(gold: frozenset, rng: np.random.Generator, cfg: SynthConfig,
             priors: np.ndarray) -> frozenset:
    kept = {r for r in sorted(gold) if rng.random() >= cfg.false_negative_rate}
    adds = rng.random(cfg.n_classes)
    for r in range(cfg.n_classes):
        if r not in gold and adds[r] < cfg.false_positive_rate * priors[r]:
            kept.add(r)
    return frozenset(kept)


def _make_split(name: str, n_docs: int, cfg: SynthConfig, priors: np.ndarray,
                prototypes: np.ndarray, kb: _VirtualKB, schema: RelationSchema) -> CorpusSplit:
    lo, hi = _entity_count_bounds(cfg)
    tag = _SPLIT_TAGS[name]
    noisy = name == "ds"
    documents = []
    for i in range(n_docs):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, tag, i]))
        n_ent = int(rng.integers(lo, hi + 1))
        entity_ids = [int(e) for e in rng.choice(cfg.entity_pool, size=n_ent, replace=False)]
        instances = []
        gold_sets = []
        for h in range(n_ent):
            for t in range(n_ent):
                if h == t:
                    continue
                gold = kb.gold(entity_ids[h], entity_ids[t])
                feats = np.zeros(cfg.feature_dim, dtype=np.float64)
                for r in sorted(gold):
                    feats += prototypes[r]
                feats += cfg.noise_sigma * rng.standard_normal(cfg.feature_dim)
                labels = _corrupt(gold, rng, cfg, priors) if noisy else gold
                instances.append(Instance(head=h, tail=t, features=feats, ds_labels=labels))
                gold_sets.append(gold)
        documents.append(
            Document(
                doc_id=f"{name}-{i:05d}",
                entity_count=n_ent,
                instances=instances,
                gold_labels=gold_sets,
                entity_ids=entity_ids,
            )
        )
    return CorpusSplit(name=name, documents=documents, feature_dim=cfg.feature_dim, schema=schema)


def generate_synthetic(cfg: SynthConfig) -> SynthResult:
    schema = RelationSchema.generic(cfg.n_classes)
    priors = class_priors(cfg.n_classes, cfg.zipf_exponent)
    proto_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    prototypes = proto_rng.standard_normal((cfg.n_classes, cfg.feature_dim))
    kb = _VirtualKB(cfg, priors)

    annotated = _make_split("annotated_train", cfg.n_annotated, cfg, priors, prototypes, kb, schema)
    ds = _make_split("ds", cfg.n_ds, cfg, priors, prototypes, kb, schema)
    dev = _make_split("dev", cfg.n_dev, cfg, priors, prototypes, kb, schema)
    test = _make_split("test", cfg.n_test, cfg, priors, prototypes, kb, schema)
    return SynthResult(
        annotated=annotated,
        ds=ds,
        dev=dev,
        test=test,
        schema=schema,
        class_priors=priors,
        prototypes=prototypes,
    )
