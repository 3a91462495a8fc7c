"""Numerical check that the plain ranking surrogate is consistent with NCRE.

Given per-label marginal probabilities delta_i = P(y_i = 1 | x), the
conditional surrogate risk has a unique minimizer (up to a shared score
offset) whose margins are logit(delta_i). Minimizing the risk numerically and
comparing against that closed form verifies, trial by trial, that the
recovered scores fall in the Bayes-optimal set for the ranking error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import sigmoid

# margins this close to zero count as ties when checking Bayes membership
TIE_TOL = 1e-6

DEFAULT_STEP = 0.5
DEFAULT_ITERS = 5000


@dataclass
class ConsistencyReport:
    """Aggregate outcome of repeated minimize-and-compare trials."""

    max_margin_deviation: float
    sign_agreement_rate: float
    ncre_risk_gap: float
    trials: int


def _validate_delta(delta) -> np.ndarray:
    d = np.asarray(delta, dtype=float)
    if d.ndim != 1 or d.size < 1:
        raise ValueError("marginals must form a nonempty 1-D vector")
    if not ((d > 0.0) & (d < 1.0)).all():
        raise ValueError("every marginal must lie strictly inside (0, 1)")
    return d


def _check_scores(delta: np.ndarray, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.ndim != 1 or f.size != delta.size + 1:
        raise ValueError(
            f"scores must have length K+1={delta.size + 1}, got {f.size}"
        )
    return f


def ncre_conditional_risk(delta, f) -> float:
    """Expected ranking error at f when label i is positive with prob delta_i."""
    d = _validate_delta(delta)
    f = _check_scores(d, f)
    m = f[1:] - f[0]
    pen = d * (m < 0) + (1 - d) * (m > 0) + 0.5 * (m == 0)
    return float(pen.sum())


def bayes_ncre_risk(delta) -> float:
    """Minimum achievable conditional ranking error: sum of min(delta, 1-delta)."""
    d = _validate_delta(delta)
    return float(np.minimum(d, 1 - d).sum())


def bayes_optimal_membership(delta, f, tie_tol: float = 0.0) -> bool:
    """Whether f ranks every label on the Bayes-optimal side of the none score.

    Requires f_i > f_0 when delta_i > 1/2 and f_i < f_0 when delta_i < 1/2;
    delta_i = 1/2 imposes no constraint. Margins within tie_tol of zero are
    treated as ties and fail the strict inequalities.
    """
    d = _validate_delta(delta)
    f = _check_scores(d, f)
    m = f[1:] - f[0]
    ok_high = (d <= 0.5) | (m > tie_tol)
    ok_low = (d >= 0.5) | (m < -tie_tol)
    return bool((ok_high & ok_low).all())


def optimal_margin_closed_form(delta) -> np.ndarray:
    """Margins of the conditional-risk minimizer: logit(delta) per label."""
    d = _validate_delta(delta)
    return np.log(d / (1 - d))


def _descend(deltas: np.ndarray, scores: np.ndarray, step: float, iters: int):
    """Gradient descent on the conditional surrogate risk, batched over trials.

    deltas is (T, K), scores (T, K+1) mutated in place. The risk gradient is
    sigmoid(f_i - f_0) - delta_i per label and minus their sum for f_0, so the
    per-trial score sum stays constant throughout.
    """
    if step <= 0 or iters < 0:
        raise ValueError("step must be positive and iters nonnegative")
    for it in range(iters):
        g = sigmoid(scores[:, 1:] - scores[:, :1]) - deltas
        scores[:, 1:] -= step * g
        scores[:, 0] += step * g.sum(axis=1)
        if not np.isfinite(scores).all():
            raise FloatingPointError(f"non-finite scores at iteration {it}")
    return scores


def minimize_conditional_ncrl(delta, init=None, step: float = DEFAULT_STEP,
                              iters: int = DEFAULT_ITERS) -> np.ndarray:
    """Minimize the conditional surrogate risk by fixed-step gradient descent."""
    d = _validate_delta(delta)
    if init is None:
        f0 = np.zeros(d.size + 1)
    else:
        f0 = _check_scores(d, init).copy()
    return _descend(d[None, :], f0[None, :], step, iters)[0]


def run_consistency_experiment(trials: int, k: int, seed: int,
                               step: float = DEFAULT_STEP,
                               iters: int = DEFAULT_ITERS) -> ConsistencyReport:
    """Minimize the conditional risk for random marginals and compare outcomes.

    Marginals are drawn uniformly from [0.05, 0.95]^k. Sign agreement is
    measured only on labels with |delta - 1/2| > 0.01; the risk gap is the
    worst per-trial excess of the recovered conditional NCRE risk over the
    Bayes risk.
    """
    if trials < 1 or k < 1:
        raise ValueError("trials and k must be at least 1")
    rng = np.random.default_rng(seed)
    deltas = rng.uniform(0.05, 0.95, size=(trials, k))
    scores = _descend(deltas, np.zeros((trials, k + 1)), step, iters)

    m = scores[:, 1:] - scores[:, :1]
    deviation = float(np.abs(m - np.log(deltas / (1 - deltas))).max())

    decided = np.abs(deltas - 0.5) > 0.01
    sign_ok = np.where(deltas > 0.5, m > TIE_TOL, m < -TIE_TOL)
    agreement = float(sign_ok[decided].mean()) if decided.any() else 1.0

    risk = (deltas * (m < 0) + (1 - deltas) * (m > 0) + 0.5 * (m == 0)).sum(axis=1)
    gap = float((risk - np.minimum(deltas, 1 - deltas).sum(axis=1)).max())
    return ConsistencyReport(
        max_margin_deviation=deviation,
        sign_agreement_rate=agreement,
        ncre_risk_gap=gap,
        trials=int(trials),
    )
