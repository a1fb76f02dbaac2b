"""Shared fixtures and corpus builders for the test suite."""

import numpy as np
import pytest

from multisup.corpus import CorpusSplit, Document, Instance, RelationSchema
from multisup.synth import SynthConfig, generate_synthetic


def build_doc(doc_id, pairs, n_entities=None, feature_dim=4, gold=None,
              ds=None, entity_ids=None, rng=None):
    """Assemble a Document from a list of (head, tail) pairs.

    gold / ds are parallel lists of label iterables; features come from
    rng when given, otherwise zeros.
    """
    if n_entities is None:
        n_entities = max(max(h, t) for h, t in pairs) + 1
    instances = []
    for i, (h, t) in enumerate(pairs):
        if rng is not None:
            feats = rng.standard_normal(feature_dim)
        else:
            feats = np.zeros(feature_dim)
        labels = frozenset(ds[i]) if ds is not None else frozenset()
        instances.append(Instance(head=h, tail=t, features=feats, ds_labels=labels))
    gold_labels = [frozenset(g) for g in gold] if gold is not None else None
    return Document(doc_id=doc_id, entity_count=n_entities, instances=instances,
                    gold_labels=gold_labels, entity_ids=entity_ids)


def build_split(docs, n_classes=4, feature_dim=4, name="annotated_train"):
    return CorpusSplit(name=name, documents=list(docs), feature_dim=feature_dim,
                       schema=RelationSchema.generic(n_classes))


@pytest.fixture(scope="session")
def small_synth():
    """A fast, small synthetic benchmark reused across test modules."""
    cfg = SynthConfig(n_classes=6, feature_dim=8, n_annotated=20, n_ds=40,
                      n_dev=12, n_test=12, noise_sigma=0.8, entity_pool=30,
                      min_pairs_per_doc=2, max_pairs_per_doc=6, seed=11)
    return generate_synthetic(cfg)
