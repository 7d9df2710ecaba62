"""Test-set evaluation with cold-start fallbacks, and mean/std aggregation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .ratings import FactorModel, RatingTriples

FALLBACKS = ("skip", "global-mean", "bias-only")


@dataclass(frozen=True)
class EvalResult:
    rmse: float
    n_scored: int
    n_coldstart: int
    fallback_policy: str
    sse: float

    def as_dict(self) -> dict:
        return {
            "rmse": self.rmse,
            "n_scored": self.n_scored,
            "n_coldstart": self.n_coldstart,
            "fallback_policy": self.fallback_policy,
        }


def evaluate(test: RatingTriples, model: FactorModel, train: RatingTriples,
             fallback: str = "global-mean",
             clamp: tuple[float, float] | None = None) -> EvalResult:
    """RMSE of the model on a test fold, with cold-start entries handled by policy.

    A test entry is cold when its user or item has zero observations in the
    training fold. "skip" excludes cold entries from scoring; "global-mean"
    predicts the training-set mean rating for them; "bias-only" predicts the
    training mean plus whichever of the user/item bias was actually trained.
    Predictions are clamped to the given (lo, hi) interval when provided.
    """
    if fallback not in FALLBACKS:
        raise ValueError(f"fallback must be one of {FALLBACKS}")
    if test.n_users > model.n_users or test.n_items > model.n_items:
        raise ValueError(
            f"test dimensions {test.n_users}x{test.n_items} exceed model "
            f"dimensions {model.n_users}x{model.n_items}"
        )
    if train.n_users != test.n_users or train.n_items != test.n_items:
        raise ValueError("train and test folds disagree on matrix dimensions")

    user_seen = np.bincount(train.users, minlength=test.n_users) > 0
    item_seen = np.bincount(train.items, minlength=test.n_items) > 0
    cold = ~(user_seen[test.users] & item_seen[test.items])
    n_cold = int(cold.sum())

    pred = (
        np.einsum("ij,ij->i", model.user_factors[test.users], model.item_factors[test.items])
        + model.user_bias[test.users]
        + model.item_bias[test.items]
    )
    if fallback == "skip":
        keep = ~cold
        if not keep.any():
            raise ValueError("no scorable test entries (all cold-start with fallback=skip)")
        pred = pred[keep]
        truth = test.ratings[keep]
    else:
        mean = train.mean_rating()
        if fallback == "global-mean":
            pred[cold] = mean
        else:  # bias-only
            bias = np.where(user_seen[test.users], model.user_bias[test.users], 0.0) \
                 + np.where(item_seen[test.items], model.item_bias[test.items], 0.0)
            pred[cold] = mean + bias[cold]
        truth = test.ratings
    if clamp is not None:
        pred = np.clip(pred, clamp[0], clamp[1])

    sse = float(np.sum((truth - pred) ** 2))
    n_scored = int(truth.size)
    return EvalResult(
        rmse=float(np.sqrt(sse / n_scored)),
        n_scored=n_scored,
        n_coldstart=n_cold,
        fallback_policy=fallback,
        sse=sse,
    )


def aggregate(results: Sequence[EvalResult] | Iterable[float]) -> tuple[float, float]:
    """Mean and sample standard deviation (n-1 denominator; 0.0 for a single value)."""
    values = [r.rmse if isinstance(r, EvalResult) else float(r) for r in results]
    if not values:
        raise ValueError("aggregate needs at least one result")
    mean = float(np.mean(values))
    std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    return mean, std
