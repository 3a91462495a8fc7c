"""Loss functions and error measures for multi-label problems with a none class.

Score vectors have length K+1: index 0 is the none class, indices 1..K are the
pre-defined classes. Label arguments carry only the K pre-defined flags; the
none flag y0 is derived (y0 = 1 iff every pre-defined label is negative).

All losses return exact analytic gradients over the full K+1 scores. The
margin-based losses (ncrl_plain, ncrl_final, margin_regularization, atl)
depend only on score differences, so their gradients sum to zero and their
values are invariant to adding a constant to every score.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LOSS_KINDS = (
    "ncrl_plain",
    "ncrl_final",
    "ncrl_noreg",
    "bce",
    "bce_shifted",
    "atl",
    "pairwise",
)

_P_FLOOR = 1e-12  # guard against log(0) on saturated shifted probabilities


@dataclass
class LossResult:
    """Scalar loss value and its gradient over all K+1 scores."""

    value: float
    grad: np.ndarray


@dataclass
class Margins:
    """Per-label and average margins of a score vector.

    m_pos[i-1] = f_i - f_0 and m_neg = -m_pos for the pre-defined labels;
    m0_pos = f_0 - mean(f_1..f_K) and m0_neg = -m0_pos.
    """

    m_pos: np.ndarray
    m_neg: np.ndarray
    m0_pos: float
    m0_neg: float


def sigmoid(x):
    """Numerically stable logistic function."""
    x = np.asarray(x, dtype=float)
    z = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))


def softplus(x):
    """log(1 + exp(x)) without overflow; note -log sigmoid(x) = softplus(-x)."""
    x = np.asarray(x, dtype=float)
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def log_sigmoid(x):
    return -softplus(-np.asarray(x, dtype=float))


def with_none_flag(pre_labels) -> np.ndarray:
    """Prepend the derived none flag to K pre-defined label flags."""
    y = np.asarray(pre_labels, dtype=int)
    if y.ndim != 1 or y.size < 1:
        raise ValueError("pre-defined labels must be a nonempty 1-D array")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be binary flags")
    return np.concatenate([[1 - y.max(initial=0)], y])


def validate_labels(labels) -> np.ndarray:
    """Check a full K+1 label vector: binary flags with a consistent none flag."""
    y = np.asarray(labels, dtype=int)
    if y.ndim != 1 or y.size < 2:
        raise ValueError("label vector must cover the none class plus K >= 1 labels")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be binary flags")
    if y[0] != int(y[1:].max() == 0):
        raise ValueError("none flag inconsistent with pre-defined labels")
    return y


def margins(f) -> Margins:
    f = np.asarray(f, dtype=float)
    m_pos = f[1:] - f[0]
    k = f.size - 1
    m0_pos = float(f[0] - f[1:].sum() / k)
    return Margins(m_pos=m_pos, m_neg=-m_pos, m0_pos=m0_pos, m0_neg=-m0_pos)


def check_gamma(gamma: float) -> float:
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"shift parameter must lie in [0, 1), got {gamma}")
    return float(gamma)


def _pair(pre_labels, scores, require_finite=True):
    """Validate one (labels, scores) pair and lift it to a batch of one."""
    y = np.asarray(pre_labels, dtype=int)
    f = np.asarray(scores, dtype=float)
    if y.ndim != 1 or f.ndim != 1:
        raise ValueError("labels and scores must be 1-D")
    if y.size < 1:
        raise ValueError("need at least one pre-defined label")
    if f.size != y.size + 1:
        raise ValueError(
            f"scores must have length K+1={y.size + 1}, got {f.size}"
        )
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be binary flags")
    if require_finite and not np.isfinite(f).all():
        raise ValueError("scores must be finite")
    full = np.concatenate([[1 - y.max(initial=0)], y])
    return full[None, :], f[None, :]


# --- batched cores -----------------------------------------------------------
# Y is a (B, K+1) binary matrix including the none column; F is (B, K+1) float.
# Each returns per-instance values (B,) and per-instance gradients (B, K+1).


def _ncrl_plain_batch(Y, F):
    y = Y[:, 1:]
    m_pos = F[:, 1:] - F[:, :1]
    vals = (y * softplus(-m_pos) + (1 - y) * softplus(m_pos)).sum(axis=1)
    g = np.where(y == 1, -sigmoid(-m_pos), sigmoid(m_pos))
    grads = np.empty_like(F)
    grads[:, 1:] = g
    grads[:, 0] = -g.sum(axis=1)
    return vals, grads


def _margin_reg_batch(Y, F):
    k = F.shape[1] - 1
    y0 = Y[:, 0]
    m0_pos = F[:, 0] - F[:, 1:].sum(axis=1) / k
    vals = np.where(y0 == 1, softplus(-m0_pos), softplus(m0_pos))
    g0 = np.where(y0 == 1, -sigmoid(-m0_pos), sigmoid(m0_pos))
    grads = np.empty_like(F)
    grads[:, 0] = g0
    grads[:, 1:] = (-g0 / k)[:, None]
    return vals, grads


def _shifted_neg_terms(m, gamma):
    """-log(min(sigmoid(m) + gamma, 1)) and its derivative w.r.t. m.

    Terms with sigmoid(m) >= 1 - gamma are clamped: zero value, zero gradient.
    At gamma = 0 this is exactly -log sigmoid(m), computed via softplus.
    """
    if gamma == 0.0:
        return softplus(-m), -sigmoid(-m)
    s = sigmoid(m)
    clamped = s >= 1.0 - gamma
    p = np.maximum(np.minimum(s + gamma, 1.0), _P_FLOOR)
    val = np.where(clamped, 0.0, -np.log(p))
    dval = np.where(clamped, 0.0, -(s * (1.0 - s)) / p)
    return val, dval


def _ncrl_shifted_predefined(Y, F, gamma):
    """Pre-defined-label terms of the final loss: positives plain, negatives shifted."""
    y = Y[:, 1:]
    m_pos = F[:, 1:] - F[:, :1]
    neg_val, neg_d = _shifted_neg_terms(-m_pos, gamma)
    vals = (y * softplus(-m_pos) + (1 - y) * neg_val).sum(axis=1)
    g = np.where(y == 1, -sigmoid(-m_pos), -neg_d)
    grads = np.empty_like(F)
    grads[:, 1:] = g
    grads[:, 0] = -g.sum(axis=1)
    return vals, grads


def _ncrl_none_term(Y, F, gamma):
    """Average-margin term with the negative branch shifted."""
    k = F.shape[1] - 1
    y0 = Y[:, 0]
    m0_pos = F[:, 0] - F[:, 1:].sum(axis=1) / k
    neg_val, neg_d = _shifted_neg_terms(-m0_pos, gamma)
    vals = np.where(y0 == 1, softplus(-m0_pos), neg_val)
    d_f0 = np.where(y0 == 1, -sigmoid(-m0_pos), -neg_d)
    grads = np.empty_like(F)
    grads[:, 0] = d_f0
    grads[:, 1:] = (-d_f0 / k)[:, None]
    return vals, grads


def _ncrl_final_batch(Y, F, gamma):
    if gamma == 0.0:
        # no shift: the final loss is exactly the plain loss plus the regularizer
        v1, g1 = _ncrl_plain_batch(Y, F)
        v2, g2 = _margin_reg_batch(Y, F)
        return v1 + v2, g1 + g2
    v1, g1 = _ncrl_shifted_predefined(Y, F, gamma)
    v2, g2 = _ncrl_none_term(Y, F, gamma)
    return v1 + v2, g1 + g2


def _ncrl_noreg_batch(Y, F, gamma):
    if gamma == 0.0:
        return _ncrl_plain_batch(Y, F)
    return _ncrl_shifted_predefined(Y, F, gamma)


def _bce_batch(Y, F):
    y = Y[:, 1:]
    f = F[:, 1:]
    vals = (y * softplus(-f) + (1 - y) * softplus(f)).sum(axis=1)
    grads = np.zeros_like(F)
    grads[:, 1:] = sigmoid(f) - y
    return vals, grads


def _bce_shifted_batch(Y, F, gamma):
    if gamma == 0.0:
        return _bce_batch(Y, F)
    y = Y[:, 1:]
    f = F[:, 1:]
    neg_val, neg_d = _shifted_neg_terms(-f, gamma)
    vals = (y * softplus(-f) + (1 - y) * neg_val).sum(axis=1)
    grads = np.zeros_like(F)
    grads[:, 1:] = np.where(y == 1, -sigmoid(-f), -neg_d)
    return vals, grads


def _masked_lse_softmax(F, mask):
    shifted = np.where(mask, F, -np.inf)
    mx = shifted.max(axis=1, keepdims=True)
    ex = np.exp(shifted - mx)
    total = ex.sum(axis=1, keepdims=True)
    return (mx + np.log(total)).ravel(), ex / total


def _atl_batch(Y, F):
    b = F.shape[0]
    y = Y[:, 1:]
    always = np.ones((b, 1), dtype=bool)
    pos_mask = np.concatenate([always, y == 1], axis=1)
    neg_mask = np.concatenate([always, y == 0], axis=1)
    lse_p, sm_p = _masked_lse_softmax(F, pos_mask)
    lse_n, sm_n = _masked_lse_softmax(F, neg_mask)
    n_pos = (y == 1).sum(axis=1)
    vals = n_pos * lse_p - (F[:, 1:] * (y == 1)).sum(axis=1) + lse_n - F[:, 0]
    grads = n_pos[:, None] * sm_p + sm_n
    grads[:, 1:] -= y == 1
    grads[:, 0] -= 1.0
    return vals, grads


def _pairwise_batch(Y, F):
    y = Y[:, 1:]
    f = F[:, 1:]
    diff = f[:, None, :] - f[:, :, None]  # diff[b, i, j] = f_j - f_i
    pair = (y == 1)[:, :, None] & (y == 0)[:, None, :]
    vals = (softplus(diff) * pair).sum(axis=(1, 2))
    sig = sigmoid(diff) * pair
    grads = np.zeros_like(F)
    grads[:, 1:] = sig.sum(axis=1) - sig.sum(axis=2)
    return vals, grads


def _ncre_batch(Y, F):
    y = Y[:, 1:]
    f = F[:, 1:]
    f0 = F[:, :1]
    pen = (y == 1) * (f < f0) + (y == 0) * (f > f0) + 0.5 * (f == f0)
    return pen.sum(axis=1)


def instance_losses(kind, Y, F, gamma=0.0):
    """Per-instance values and gradients for a whole batch.

    Y: (B, K+1) binary labels including the none column; F: (B, K+1) scores.
    """
    if kind == "ncrl_plain":
        return _ncrl_plain_batch(Y, F)
    if kind == "ncrl_final":
        return _ncrl_final_batch(Y, F, check_gamma(gamma))
    if kind == "ncrl_noreg":
        return _ncrl_noreg_batch(Y, F, check_gamma(gamma))
    if kind == "bce":
        return _bce_batch(Y, F)
    if kind == "bce_shifted":
        return _bce_shifted_batch(Y, F, check_gamma(gamma))
    if kind == "atl":
        return _atl_batch(Y, F)
    if kind == "pairwise":
        return _pairwise_batch(Y, F)
    raise ValueError(f"unknown loss kind {kind!r}; expected one of {LOSS_KINDS}")


def batch_loss(kind, Y, F, gamma=0.0):
    """Mean loss over a batch and the gradient of that mean w.r.t. F."""
    if not np.isfinite(F).all():
        raise ValueError("scores must be finite")
    vals, grads = instance_losses(kind, Y, F, gamma)
    return float(vals.mean()), grads / len(F)


def batch_ncre(Y, F):
    """Ranking error of every instance in a batch (labels include none column)."""
    return _ncre_batch(np.asarray(Y), np.asarray(F, dtype=float))


# --- per-instance operations -------------------------------------------------


def ncre_error(y, f) -> float:
    """Count reversed rankings between the none score and each pre-defined label.

    Positive labels scored below f0 and negative labels scored above f0 each
    add 1; an exact tie with f0 adds 1/2. The result lies in [0, K].
    """
    Y, F = _pair(y, f, require_finite=False)
    return float(_ncre_batch(Y, F)[0])


def ncrl_plain(y, f) -> LossResult:
    """Log-sigmoid surrogate of the none-class ranking error."""
    Y, F = _pair(y, f)
    vals, grads = _ncrl_plain_batch(Y, F)
    return LossResult(float(vals[0]), grads[0])


def margin_regularization(y, f) -> LossResult:
    """Average-margin term keeping f0 calibrated against the mean label score."""
    Y, F = _pair(y, f)
    vals, grads = _margin_reg_batch(Y, F)
    return LossResult(float(vals[0]), grads[0])


def shifted_negative_prob(m_neg: float, gamma: float) -> float:
    """Negative-label probability sigmoid(m_neg) raised by gamma, capped at 1."""
    check_gamma(gamma)
    p = min(float(sigmoid(m_neg)) + gamma, 1.0)
    return max(p, _P_FLOOR)


def ncrl_final(y, f, gamma: float) -> LossResult:
    """Full training loss: ranking terms plus the average-margin term, with every
    negative probability shifted by gamma (clamped terms contribute nothing)."""
    Y, F = _pair(y, f)
    vals, grads = _ncrl_final_batch(Y, F, check_gamma(gamma))
    return LossResult(float(vals[0]), grads[0])


def ncrl_noreg(y, f, gamma: float) -> LossResult:
    """Final loss without the average-margin term (shifted ranking terms only)."""
    Y, F = _pair(y, f)
    vals, grads = _ncrl_noreg_batch(Y, F, check_gamma(gamma))
    return LossResult(float(vals[0]), grads[0])


def bce(y, f) -> LossResult:
    """Independent binary cross entropy over the pre-defined labels.

    The none score f0 is ignored and receives zero gradient; scorers still emit
    it so every loss shares one architecture.
    """
    Y, F = _pair(y, f)
    vals, grads = _bce_batch(Y, F)
    return LossResult(float(vals[0]), grads[0])


def bce_shifted(y, f, gamma: float) -> LossResult:
    """BCE with each negative probability 1 - sigmoid(f_i) shifted by gamma."""
    Y, F = _pair(y, f)
    vals, grads = _bce_shifted_batch(Y, F, check_gamma(gamma))
    return LossResult(float(vals[0]), grads[0])


def atl(y, f) -> LossResult:
    """Adaptive-thresholding baseline: softmax terms pulling positives above f0
    and f0 above the negatives."""
    Y, F = _pair(y, f)
    vals, grads = _atl_batch(Y, F)
    return LossResult(float(vals[0]), grads[0])


def pairwise_ranking(y, f) -> LossResult:
    """Logistic pairwise ranking loss over pre-defined labels only."""
    Y, F = _pair(y, f)
    vals, grads = _pairwise_batch(Y, F)
    return LossResult(float(vals[0]), grads[0])


def hamming_error(y, h) -> int:
    """Number of pre-defined labels misclassified by prediction flags h."""
    y = np.asarray(y, dtype=int)
    h = np.asarray(h, dtype=int)
    if y.shape != h.shape:
        raise ValueError("labels and predictions must have equal length")
    return int((y != h).sum())


def ranking_error(y, f) -> float:
    """Reversed (positive, negative) pairs among pre-defined labels, ties 1/2."""
    y = np.asarray(y, dtype=int)
    f = np.asarray(f, dtype=float)
    if f.size != y.size + 1:
        raise ValueError(f"scores must have length K+1={y.size + 1}, got {f.size}")
    scores = f[1:]
    pair = (y == 1)[:, None] & (y == 0)[None, :]
    rev = (scores[:, None] < scores[None, :]) + 0.5 * (scores[:, None] == scores[None, :])
    return float((rev * pair).sum())
