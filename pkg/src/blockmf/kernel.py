"""Per-block SGD pass, prediction rule, regularized objective, and single-entry gradients.

The update rule is the standard self-regularized form: each parameter moves
by alpha * (err * partner - beta * itself), with err frozen per entry before
any of that entry's updates. The bias-free variant ("pmf") uses the same
factor updates with a single rate/regularizer pair and never reads or writes
the bias vectors. An entry counts as observed because it is stored, not
because its value is positive, so zero and negative rating scales work.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from ._sgd import sgd_span
from .ratings import BlockedRatings, FactorModel, Hyperparams, RatingTriples


class KernelVariant(str, Enum):
    BIASED_SVD = "biased-svd"
    PMF = "pmf"


class DivergenceError(RuntimeError):
    """Raised when SGD produces a non-finite value; names the offending entry."""

    def __init__(self, message: str, *, epoch: int | None = None,
                 block: tuple[int, int] | None = None,
                 entry: tuple[int, int] | None = None, report=None):
        super().__init__(message)
        self.epoch = epoch
        self.block = block
        self.entry = entry
        self.report = report


@dataclass(frozen=True)
class BlockView:
    """A block's contiguous entry slice plus the index ranges it owns."""

    block_row: int
    block_col: int
    users: np.ndarray
    items: np.ndarray
    ratings: np.ndarray
    start: int
    stop: int
    user_range: tuple[int, int]
    item_range: tuple[int, int]

    def __len__(self) -> int:
        return self.stop - self.start


def block_view(blocked: BlockedRatings, block_row: int, block_col: int) -> BlockView:
    start, stop = blocked.block_slice(block_row, block_col)
    return BlockView(
        block_row=block_row,
        block_col=block_col,
        users=blocked.users,
        items=blocked.items,
        ratings=blocked.ratings,
        start=start,
        stop=stop,
        user_range=blocked.grid.user_range(block_row),
        item_range=blocked.grid.item_range(block_col),
    )


def predict(model: FactorModel, user: int, item: int,
            variant: KernelVariant = KernelVariant.BIASED_SVD) -> float:
    """Predicted rating: factor dot product, plus both biases unless pmf. Never clamps."""
    score = float(np.dot(model.user_factors[user], model.item_factors[item]))
    if variant is KernelVariant.BIASED_SVD:
        score += float(model.user_bias[user]) + float(model.item_bias[item])
    return score


def block_pass(view: BlockView, model: FactorModel, hp: Hyperparams,
               variant: KernelVariant = KernelVariant.BIASED_SVD,
               counts: np.ndarray | None = None) -> None:
    """Run one SGD pass over a block's entries in row-major order, in place.

    Touches only the factor rows and bias entries inside the block's
    user_range and item_range. Raises DivergenceError on the first entry
    whose error is non-finite.
    """
    if counts is None:
        counts = _NO_COUNTS
    bad = sgd_span(
        view.users, view.items, view.ratings, view.start, view.stop,
        model.user_factors, model.item_factors, model.user_bias, model.item_bias,
        hp.alphas(), hp.betas(), variant is KernelVariant.BIASED_SVD, counts,
    )
    if bad >= 0:
        u, i = int(view.users[bad]), int(view.items[bad])
        raise DivergenceError(
            f"non-finite error at entry (user={u}, item={i}) in block "
            f"({view.block_row}, {view.block_col})",
            block=(view.block_row, view.block_col), entry=(u, i),
        )


_NO_COUNTS = np.zeros(0, dtype=np.int64)


def objective(data: RatingTriples, model: FactorModel, hp: Hyperparams) -> float:
    """Regularized squared-error objective over the observed entries.

    Squared prediction error summed over entries, plus each beta times the
    squared norm of its parameter group (user factors, item factors, user
    biases, item biases).
    """
    pred = (
        np.einsum("ij,ij->i", model.user_factors[data.users], model.item_factors[data.items])
        + model.user_bias[data.users]
        + model.item_bias[data.items]
    )
    sse = float(np.sum((data.ratings - pred) ** 2))
    return (
        sse
        + hp.beta_user_factor * float(np.sum(model.user_factors ** 2))
        + hp.beta_item_factor * float(np.sum(model.item_factors ** 2))
        + hp.beta_user_bias * float(np.sum(model.user_bias ** 2))
        + hp.beta_item_bias * float(np.sum(model.item_bias ** 2))
    )


class Gradients(NamedTuple):
    user_factor: np.ndarray
    item_factor: np.ndarray
    user_bias: float
    item_bias: float


def gradient_single(entry: tuple[int, int, float], model: FactorModel) -> Gradients:
    """Gradients of one entry's unregularized squared error.

    Analytic forms -2*err*q, -2*err*p, -2*err, -2*err. Used by the
    finite-difference test harness, not by training.
    """
    user, item, rating = entry
    err = rating - predict(model, user, item)
    return Gradients(
        user_factor=-2.0 * err * model.item_factors[item],
        item_factor=-2.0 * err * model.user_factors[user],
        user_bias=-2.0 * err,
        item_bias=-2.0 * err,
    )
