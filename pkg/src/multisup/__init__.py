"""Selective use of distantly supervised documents for document-level
relation extraction.

The package couples two pieces: an informativeness ranking that scores
noisy distant documents by how strongly an expert model, trained on the
small annotated set, agrees with their distant labels (rare classes
weighted up), and a partitioned ranking loss that trains the main model on
agreement classes, recommendation classes and the remainder through two
threshold-sharing softmax routes with self-supervised confidence weights.
"""

from .corpus import (
    CorpusError,
    CorpusReport,
    CorpusSplit,
    Document,
    Instance,
    RelationSchema,
    load_corpus,
    save_corpus,
    validate_corpus,
)
from .loss import (
    LossConfig,
    LossOutput,
    atl_loss,
    msrl_loss,
    msrl_loss_batch,
    msrl_weights,
    partition_probabilities,
)
from .metrics import MetricsRecord, evaluate_predictions, gold_facts, ign_f1, micro_f1, predicted_facts
from .model import (
    ModelParams,
    forward,
    forward_batch,
    load_params,
    predict_labels,
    save_params,
    self_labels,
)
from .ranking import (
    RankedCorpus,
    compute_class_weights,
    informativeness,
    rank_and_select,
    rank_documents,
    rank_random,
    select_top,
)
from .supervision import (
    ClassPartition,
    ExpertPrediction,
    PredictionTable,
    partition_classes,
    run_expert,
)
from .synth import SynthConfig, SynthResult, generate_synthetic
from .trainer import TrainConfig, TrainResult, train_expert, train_main

__version__ = "0.1.0"

__all__ = [
    "ClassPartition",
    "CorpusError",
    "CorpusReport",
    "CorpusSplit",
    "Document",
    "ExpertPrediction",
    "Instance",
    "LossConfig",
    "LossOutput",
    "MetricsRecord",
    "ModelParams",
    "PredictionTable",
    "RankedCorpus",
    "RelationSchema",
    "SynthConfig",
    "SynthResult",
    "TrainConfig",
    "TrainResult",
    "atl_loss",
    "compute_class_weights",
    "evaluate_predictions",
    "forward",
    "forward_batch",
    "generate_synthetic",
    "gold_facts",
    "ign_f1",
    "informativeness",
    "load_corpus",
    "load_params",
    "micro_f1",
    "msrl_loss",
    "msrl_loss_batch",
    "msrl_weights",
    "partition_classes",
    "partition_probabilities",
    "predict_labels",
    "predicted_facts",
    "rank_and_select",
    "rank_documents",
    "rank_random",
    "run_expert",
    "save_corpus",
    "save_params",
    "select_top",
    "self_labels",
    "train_expert",
    "train_main",
    "validate_corpus",
    "__version__",
]
