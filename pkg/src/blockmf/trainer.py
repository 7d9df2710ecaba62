"""Epoch loop over blocks with early termination, in serial and parallel modes.

Parallel mode walks the wavefront schedule step by step with a full barrier
between steps: blocks inside one step own disjoint user and item ranges, so
the worker threads never write the same parameter and the result is
bit-reproducible for a fixed configuration. Serial mode visits blocks in
row-major block order. Epoch wall time covers the block-pass phase only;
RMSE evaluation runs between epochs and is not counted.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._sgd import sgd_span, sum_squared_error
from .kernel import DivergenceError, KernelVariant
from .ratings import (FactorModel, Hyperparams, RatingTriples, bucketize,
                      init_model, make_grid)
from .schedule import wavefront

SERIAL = "serial"
PARALLEL = "parallel"


@dataclass(frozen=True)
class TrainConfig:
    hp: Hyperparams
    grid: tuple[int, int] = (1, 1)
    mode: str = SERIAL
    workers: int = 1
    variant: KernelVariant = KernelVariant.BIASED_SVD
    track_visits: bool = False

    def __post_init__(self) -> None:
        if self.mode not in (SERIAL, PARALLEL):
            raise ValueError(f"mode must be {SERIAL!r} or {PARALLEL!r}")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.grid[0] < 1 or self.grid[1] < 1:
            raise ValueError("grid block counts must be at least 1")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_rmse: float
    test_rmse: float | None
    seconds: float


@dataclass
class TrainReport:
    records: list[EpochRecord] = field(default_factory=list)
    stop_reason: str = ""
    # (min, max) of per-entry visit counters after each epoch; only filled
    # when TrainConfig.track_visits is set.
    visit_ranges: list[tuple[int, int]] = field(default_factory=list)

    @property
    def final_train_rmse(self) -> float:
        return self.records[-1].train_rmse

    def seconds_per_iteration(self) -> float:
        """Mean epoch wall time, excluding the first (warmup) epoch when possible."""
        times = [r.seconds for r in self.records]
        if len(times) > 1:
            times = times[1:]
        return float(np.mean(times))


def epoch_rmse(data: RatingTriples, model: FactorModel) -> float:
    """Root mean squared prediction error over the observed entries; no clamping."""
    if not len(data):
        raise ValueError("cannot compute RMSE of an empty rating set")
    sse = sum_squared_error(
        data.users, data.items, data.ratings,
        model.user_factors, model.item_factors, model.user_bias, model.item_bias,
    )
    return math.sqrt(sse / len(data))


ProgressFn = Callable[[EpochRecord], None]


def train(train_data: RatingTriples,
          test_data: RatingTriples | None,
          cfg: TrainConfig,
          progress: ProgressFn | None = None) -> tuple[FactorModel, TrainReport]:
    """Train a factor model on train_data, reporting per-epoch metrics.

    Every block is passed through the SGD kernel exactly once per epoch.
    Training stops when the epoch-over-epoch improvement in training RMSE
    falls below hp.delta, when hp.max_steps is reached, or on divergence
    (raised as DivergenceError with epoch/block context and the partial
    report attached).
    """
    hp = cfg.hp
    I, J = cfg.grid
    grid = make_grid(train_data.n_users, train_data.n_items, I, J)
    blocked = bucketize(train_data, grid)
    model = init_model(train_data.n_users, train_data.n_items, hp)
    alphas, betas = hp.alphas(), hp.betas()
    with_bias = cfg.variant is KernelVariant.BIASED_SVD
    counts = np.zeros(len(train_data) if cfg.track_visits else 0, dtype=np.int64)

    if cfg.mode == PARALLEL:
        steps = wavefront(I, J).steps
    else:
        steps = tuple(((i, j),) for i in range(I) for j in range(J))

    spans = {}
    for step in steps:
        for ij in step:
            spans[ij] = blocked.block_slice(*ij)

    report = TrainReport()
    prev_rmse = epoch_rmse(train_data, model)

    def run_block(ij: tuple[int, int]) -> int:
        start, stop = spans[ij]
        return sgd_span(
            blocked.users, blocked.items, blocked.ratings, start, stop,
            model.user_factors, model.item_factors, model.user_bias, model.item_bias,
            alphas, betas, with_bias, counts,
        )

    def raise_divergence(epoch: int, ij: tuple[int, int], bad: int):
        u, i = int(blocked.users[bad]), int(blocked.items[bad])
        report.stop_reason = "diverged"
        raise DivergenceError(
            f"training diverged at epoch {epoch}, block {ij}, entry "
            f"(user={u}, item={i})",
            epoch=epoch, block=ij, entry=(u, i), report=report,
        )

    pool = ThreadPoolExecutor(max_workers=cfg.workers) if cfg.mode == PARALLEL else None
    try:
        for epoch in range(1, hp.max_steps + 1):
            if cfg.track_visits:
                counts[:] = 0
            t0 = time.perf_counter()
            if pool is None:
                for step in steps:
                    bad = run_block(step[0])
                    if bad >= 0:
                        raise_divergence(epoch, step[0], bad)
            else:
                for step in steps:
                    results = list(pool.map(run_block, step))
                    for ij, bad in zip(step, results):
                        if bad >= 0:
                            raise_divergence(epoch, ij, bad)
            seconds = time.perf_counter() - t0

            train_rmse = epoch_rmse(train_data, model)
            test_rmse = epoch_rmse(test_data, model) if test_data is not None else None
            record = EpochRecord(epoch, train_rmse, test_rmse, seconds)
            report.records.append(record)
            if cfg.track_visits:
                report.visit_ranges.append((int(counts.min()), int(counts.max())))
            if progress is not None:
                progress(record)

            if not math.isfinite(train_rmse):
                report.stop_reason = "diverged"
                raise DivergenceError(
                    f"training RMSE became non-finite at epoch {epoch}",
                    epoch=epoch, report=report,
                )
            if prev_rmse - train_rmse < hp.delta:
                report.stop_reason = "delta-converged"
                break
            prev_rmse = train_rmse
        else:
            report.stop_reason = "max-steps"
    finally:
        if pool is not None:
            pool.shutdown(wait=True)
    return model, report
