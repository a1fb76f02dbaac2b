"""Ranking losses over partitioned supervision.

The multi-supervision ranking loss scores an instance through two
restricted softmax routes that share the threshold slot:

* the agreement route normalizes over agreement classes plus the
  threshold; every agreement class should beat the threshold here,
* the candidate route normalizes over everything else (recommendations,
  others, threshold); recommendation classes and the threshold itself are
  ranked against the other classes.

Each negative log term carries a multiplicative weight built from the
model's own current predictions:

* agreement class r: gamma_a + (1 - y_r) * (1 - P_r), which boosts
  agreements the model itself still rejects,
* recommendation class r and the threshold: gamma_b + y_r * P_r, which
  boosts candidates the model itself confidently asserts.

The weights and the self labels inside them are constants with respect to
the logits: they shape the loss value but contribute nothing to the
gradient, which is the softmax-minus-indicator difference of the two
routes and is returned in closed form. Finite-difference checks must
therefore hold the weights fixed at the base point (see the ``weights``
parameter of :func:`msrl_loss`).

The classic adaptive-threshold loss (positives vs threshold, threshold vs
negatives) is implemented separately in :func:`atl_loss` from its own
definition, not by delegating to the partitioned loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import self_labels
from .supervision import ClassPartition


@dataclass(frozen=True)
class LossConfig:
    gamma_a: float = 1.0
    gamma_b: float = 0.9
    # Use the model's own predictions inside the weights. When off, the
    # weights are the bare gamma constants.
    self_supervision: bool = True
    # All weights pinned to exactly 1; gammas and self labels ignored.
    plain_mode: bool = False

    def __post_init__(self) -> None:
        if not self.plain_mode:
            if self.gamma_a <= 0 or self.gamma_b <= 0:
                raise ValueError("gamma_a and gamma_b must be positive (weights are log-taken)")


@dataclass
class LossOutput:
    """Loss value with its intermediates, all length n_classes + 1.

    p_agree is the agreement-route probability, nonzero only on agreement
    classes; p_rec the candidate-route probability, nonzero only on
    recommendation classes and the threshold slot. Each route's remaining
    probability mass sits on the rest of its denominator support (the
    threshold for the agreement route; other classes for the candidate
    route). w_agree holds weights at agreement slots, w_rec at
    recommendation and threshold slots; both zero elsewhere. grad is the
    exact gradient of loss wrt the logits.
    """

    loss: float
    p_agree: np.ndarray
    p_rec: np.ndarray
    w_agree: np.ndarray
    w_rec: np.ndarray
    grad: np.ndarray


def _masked_softmax(logits: np.ndarray, support: np.ndarray) -> np.ndarray:
    """Softmax over the True entries of support, zeros elsewhere."""
    out = np.zeros_like(logits)
    vals = logits[support]
    shifted = np.exp(vals - vals.max())
    out[support] = shifted / shifted.sum()
    return out


def _route_masks(partition: ClassPartition, n_classes: int):
    """(agreement classes, agreement denominator, candidate numerator,
    candidate denominator), each a boolean length-(n_classes + 1) mask."""
    agg = np.zeros(n_classes + 1, dtype=bool)
    for r in partition.agreements:
        agg[r] = True
    a_denom = agg.copy()
    a_denom[n_classes] = True
    b_num = np.zeros(n_classes + 1, dtype=bool)
    for r in partition.recommendations:
        b_num[r] = True
    b_num[n_classes] = True
    b_denom = ~agg
    return agg, a_denom, b_num, b_denom


def partition_probabilities(logits: np.ndarray, partition: ClassPartition
                            ) -> tuple[np.ndarray, np.ndarray]:
    """Restricted route probabilities (p_agree, p_rec).

    p_agree[r] = exp(O_r) / sum over agreements + threshold, for r an
    agreement class, zero elsewhere (the threshold share completes the sum
    to 1). p_rec[r] = exp(O_r) / sum over non-agreements + threshold, for
    r a recommendation or the threshold slot, zero elsewhere. Computed
    with max-subtraction.
    """
    logits = np.asarray(logits, dtype=np.float64)
    n_classes = logits.shape[0] - 1
    if partition.n_classes != n_classes:
        raise ValueError(
            f"partition covers {partition.n_classes} classes, logits imply {n_classes}"
        )
    agg, a_denom, b_num, b_denom = _route_masks(partition, n_classes)
    p_agree = _masked_softmax(logits, a_denom)
    p_agree[~agg] = 0.0
    p_rec = _masked_softmax(logits, b_denom)
    p_rec[~b_num] = 0.0
    return p_agree, p_rec


def msrl_weights(p_agree: np.ndarray, p_rec: np.ndarray, labels: np.ndarray,
                 partition: ClassPartition, config: LossConfig
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Per-term weights (w_agree, w_rec) from the route probabilities and
    the self labels; constants under differentiation."""
    n = partition.n_classes
    agg, _, b_num, _ = _route_masks(partition, n)
    if config.plain_mode:
        return np.where(agg, 1.0, 0.0), np.where(b_num, 1.0, 0.0)
    if not config.self_supervision:
        return np.where(agg, config.gamma_a, 0.0), np.where(b_num, config.gamma_b, 0.0)
    y = np.asarray(labels, dtype=np.float64)
    w_agree = np.where(agg, config.gamma_a + (1.0 - y) * (1.0 - p_agree), 0.0)
    w_rec = np.where(b_num, config.gamma_b + y * p_rec, 0.0)
    return w_agree, w_rec


def msrl_loss(logits: np.ndarray, partition: ClassPartition, config: LossConfig,
              labels: np.ndarray | None = None,
              weights: tuple[np.ndarray, np.ndarray] | None = None) -> LossOutput:
    """Loss, intermediates and exact gradient for one instance.

    ``labels`` overrides the self labels (0/1 vector, threshold slot
    last); by default they come from the logits via the strict prediction
    rule. ``weights`` injects precomputed (w_agree, w_rec) unchanged,
    which is how a finite-difference check keeps the weights frozen while
    perturbing the logits.
    """
    logits = np.asarray(logits, dtype=np.float64)
    n_classes = logits.shape[0] - 1
    if partition.n_classes != n_classes:
        raise ValueError(
            f"partition covers {partition.n_classes} classes, logits imply {n_classes}"
        )
    th = n_classes
    agg, a_denom, b_num, b_denom = _route_masks(partition, n_classes)

    sigma_a = _masked_softmax(logits, a_denom)
    sigma_b = _masked_softmax(logits, b_denom)
    p_agree = np.where(agg, sigma_a, 0.0)
    p_rec = np.where(b_num, sigma_b, 0.0)

    if weights is not None:
        w_agree, w_rec = (np.asarray(w, dtype=np.float64) for w in weights)
    else:
        if labels is None:
            labels = self_labels(logits)
        w_agree, w_rec = msrl_weights(p_agree, p_rec, labels, partition, config)

    loss = 0.0
    for r in sorted(partition.agreements):
        loss -= float(np.log(w_agree[r] * p_agree[r]))
    for r in sorted(partition.recommendations) + [th]:
        loss -= float(np.log(w_rec[r] * p_rec[r]))

    n_agg = len(partition.agreements)
    n_b = len(partition.recommendations) + 1
    grad = n_agg * sigma_a + n_b * sigma_b
    grad[agg] -= 1.0
    grad[b_num] -= 1.0
    return LossOutput(loss=loss, p_agree=p_agree, p_rec=p_rec,
                      w_agree=w_agree, w_rec=w_rec, grad=grad)


def atl_loss(logits: np.ndarray, positives) -> LossOutput:
    """Adaptive-threshold ranking loss, written out from its definition.

    The first part ranks every positive class above the threshold within
    positives + threshold; the second ranks the threshold above all
    negative classes within negatives + threshold. All term weights are 1.
    Returns the loss with its own analytic gradient.
    """
    logits = np.asarray(logits, dtype=np.float64)
    n_classes = logits.shape[0] - 1
    th = n_classes
    pos = sorted(positives)
    pos_set = set(pos)
    if pos_set and (min(pos) < 0 or max(pos) >= n_classes):
        raise ValueError(f"positive labels {pos} outside class range")
    neg = [r for r in range(n_classes) if r not in pos_set]

    first_idx = np.array(pos + [th], dtype=np.intp)
    first_vals = logits[first_idx]
    e1 = np.exp(first_vals - first_vals.max())
    soft1 = e1 / e1.sum()
    loss = 0.0
    for j, r in enumerate(pos):
        loss -= float(np.log(soft1[j]))

    second_idx = np.array(neg + [th], dtype=np.intp)
    second_vals = logits[second_idx]
    e2 = np.exp(second_vals - second_vals.max())
    soft2 = e2 / e2.sum()
    loss -= float(np.log(soft2[-1]))

    p_agree = np.zeros(n_classes + 1)
    p_agree[first_idx[:-1]] = soft1[:-1]
    p_rec = np.zeros(n_classes + 1)
    p_rec[th] = soft2[-1]
    w_agree = np.zeros(n_classes + 1)
    w_agree[first_idx[:-1]] = 1.0
    w_rec = np.zeros(n_classes + 1)
    w_rec[th] = 1.0

    grad = np.zeros(n_classes + 1)
    grad[first_idx] += len(pos) * soft1
    grad[first_idx[:-1]] -= 1.0
    grad[second_idx] += soft2
    grad[th] -= 1.0
    return LossOutput(loss=loss, p_agree=p_agree, p_rec=p_rec,
                      w_agree=w_agree, w_rec=w_rec, grad=grad)


# ---------------------------------------------------------------------------
# Batched path


def msrl_loss_batch(logits: np.ndarray, agg_mask: np.ndarray, rec_mask: np.ndarray,
                    config: LossConfig) -> tuple[np.ndarray, np.ndarray]:
    """Per-instance losses (batch,) and gradients (batch, n_classes + 1).

    ``agg_mask`` and ``rec_mask`` are boolean (batch, n_classes) and must
    be disjoint; unmasked classes form the others group. Matches the
    scalar path to machine precision.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 2:
        raise ValueError("batched logits must be 2D")
    batch, width = logits.shape
    n_classes = width - 1
    agg_mask = np.asarray(agg_mask, dtype=bool)
    rec_mask = np.asarray(rec_mask, dtype=bool)
    if agg_mask.shape != (batch, n_classes) or rec_mask.shape != (batch, n_classes):
        raise ValueError("masks must have shape (batch, n_classes)")
    if np.any(agg_mask & rec_mask):
        raise ValueError("agreement and recommendation masks overlap")

    th_col = np.ones((batch, 1), dtype=bool)
    agg_full = np.concatenate([agg_mask, ~th_col], axis=1)
    a_denom = np.concatenate([agg_mask, th_col], axis=1)
    b_num = np.concatenate([rec_mask, th_col], axis=1)
    b_denom = np.concatenate([~agg_mask, th_col], axis=1)

    def softmax_where(support):
        masked = np.where(support, logits, -np.inf)
        mx = masked.max(axis=1, keepdims=True)
        e = np.exp(masked - mx)
        e[~support] = 0.0
        return e / e.sum(axis=1, keepdims=True)

    sigma_a = softmax_where(a_denom)
    sigma_b = softmax_where(b_denom)

    if config.plain_mode:
        w_a = np.where(agg_full, 1.0, 0.0)
        w_b = np.where(b_num, 1.0, 0.0)
    elif config.self_supervision:
        th_logit = logits[:, n_classes:]
        y_cls = (logits[:, :n_classes] > th_logit).astype(np.float64)
        y_th = (y_cls.sum(axis=1, keepdims=True) == 0).astype(np.float64)
        y = np.concatenate([y_cls, y_th], axis=1)
        w_a = np.where(agg_full, config.gamma_a + (1.0 - y) * (1.0 - sigma_a), 0.0)
        w_b = np.where(b_num, config.gamma_b + y * sigma_b, 0.0)
    else:
        w_a = np.where(agg_full, config.gamma_a, 0.0)
        w_b = np.where(b_num, config.gamma_b, 0.0)

    log_a = np.where(agg_full, np.log(np.where(agg_full, w_a * sigma_a, 1.0)), 0.0)
    log_b = np.where(b_num, np.log(np.where(b_num, w_b * sigma_b, 1.0)), 0.0)
    losses = -(log_a.sum(axis=1) + log_b.sum(axis=1))

    n_agg = agg_mask.sum(axis=1, keepdims=True).astype(np.float64)
    n_b = rec_mask.sum(axis=1, keepdims=True).astype(np.float64) + 1.0
    grads = n_agg * sigma_a + n_b * sigma_b
    grads[agg_full] -= 1.0
    grads[b_num] -= 1.0
    return losses, grads


def partition_masks(ds_labels, expert_labels, n_classes: int) -> tuple[np.ndarray, np.ndarray]:
    """Boolean (n_classes,) agreement and recommendation masks for one
    instance, suitable for stacking into the batched loss."""
    agg = np.zeros(n_classes, dtype=bool)
    rec = np.zeros(n_classes, dtype=bool)
    for r in ds_labels:
        if r in expert_labels:
            agg[r] = True
        else:
            rec[r] = True
    for r in expert_labels:
        if r not in ds_labels:
            rec[r] = True
    return agg, rec
