"""Sparse rating storage, block partitioning, and the shared model container."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RatingTriples:
    """Observed ratings as parallel (user, item, rating) arrays.

    Sparsity is the normal case: entries may cover any subset of the
    n_users x n_items index space. Duplicate (user, item) pairs are
    rejected at construction. Arrays are frozen after construction so the
    object can be shared across worker threads.
    """

    n_users: int
    n_items: int
    users: np.ndarray
    items: np.ndarray
    ratings: np.ndarray

    def __post_init__(self) -> None:
        if self.n_users < 1 or self.n_items < 1:
            raise ValueError("matrix dimensions must be at least 1x1")
        users = _readonly(np.ascontiguousarray(self.users, dtype=np.int64))
        items = _readonly(np.ascontiguousarray(self.items, dtype=np.int64))
        ratings = _readonly(np.ascontiguousarray(self.ratings, dtype=np.float64))
        if not (users.shape == items.shape == ratings.shape) or users.ndim != 1:
            raise ValueError("users, items and ratings must be 1-d arrays of equal length")
        if users.size:
            if users.min() < 0 or users.max() >= self.n_users:
                raise ValueError("user index out of range")
            if items.min() < 0 or items.max() >= self.n_items:
                raise ValueError("item index out of range")
            key = users * self.n_items + items
            if np.unique(key).size != key.size:
                raise ValueError("duplicate (user, item) pair")
        object.__setattr__(self, "users", users)
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "ratings", ratings)

    def __len__(self) -> int:
        return int(self.users.size)

    def mean_rating(self) -> float:
        if not len(self):
            raise ValueError("no entries")
        return float(self.ratings.mean())


@dataclass(frozen=True)
class BlockGrid:
    """Partition of the (minimally zero-padded) index space into I x J equal blocks.

    Padding is virtual: only the grid arithmetic knows about padded rows and
    columns, no zero entries are materialized. Block (i, j) owns user rows
    [i*row_block_size, (i+1)*row_block_size) and the analogous item columns.
    """

    n_users: int
    n_items: int
    I: int
    J: int
    row_block_size: int
    col_block_size: int
    padded_rows: int
    padded_cols: int

    def user_range(self, block_row: int, clip: bool = True) -> tuple[int, int]:
        lo = block_row * self.row_block_size
        hi = lo + self.row_block_size
        return (lo, min(hi, self.n_users)) if clip else (lo, hi)

    def item_range(self, block_col: int, clip: bool = True) -> tuple[int, int]:
        lo = block_col * self.col_block_size
        hi = lo + self.col_block_size
        return (lo, min(hi, self.n_items)) if clip else (lo, hi)


def make_grid(n_users: int, n_items: int, I: int, J: int) -> BlockGrid:
    """Build the minimal-padding I x J grid over an n_users x n_items space.

    Block sizes follow the ceiling rule ceil(n/I); the padded extent is the
    smallest multiple of the block size covering the real rows/columns.
    """
    if n_users < 1 or n_items < 1:
        raise ValueError("matrix dimensions must be at least 1x1")
    if I < 1 or J < 1:
        raise ValueError("block counts must be at least 1")
    if I > n_users or J > n_items:
        raise ValueError(
            f"grid {I}x{J} has empty blocks for a {n_users}x{n_items} matrix"
        )
    row_block_size = -(-n_users // I)
    col_block_size = -(-n_items // J)
    return BlockGrid(
        n_users=n_users,
        n_items=n_items,
        I=I,
        J=J,
        row_block_size=row_block_size,
        col_block_size=col_block_size,
        padded_rows=row_block_size * I,
        padded_cols=col_block_size * J,
    )


def assign_block(user: int, item: int, grid: BlockGrid) -> tuple[int, int]:
    """Map an observed (user, item) position to its owning (block_row, block_col)."""
    if not (0 <= user < grid.n_users and 0 <= item < grid.n_items):
        raise ValueError(f"entry ({user}, {item}) outside {grid.n_users}x{grid.n_items}")
    return user // grid.row_block_size, item // grid.col_block_size


@dataclass(frozen=True)
class Hyperparams:
    """Learning rates and regularizers named by role, plus the training knobs.

    The four rate/regularizer pairs are role-named (user factor, item factor,
    user bias, item bias) rather than numbered, because numbered conventions
    for them are ambiguous across write-ups of this update rule. Defaults are
    the reference benchmark configuration (rank 13, delta 1e-4).
    """

    k: int = 13
    alpha_user_factor: float = 0.019
    alpha_item_factor: float = 0.004
    alpha_user_bias: float = 0.004
    alpha_item_bias: float = 0.013
    beta_user_factor: float = 0.019
    beta_item_factor: float = 0.019
    beta_user_bias: float = 0.019
    beta_item_bias: float = 0.007
    max_steps: int = 200
    delta: float = 1e-4
    seed: int = 0
    init_scale: float | None = None  # None -> 1 / sqrt(k)

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("rank k must be at least 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        for name in (
            "alpha_user_factor", "alpha_item_factor", "alpha_user_bias", "alpha_item_bias",
            "beta_user_factor", "beta_item_factor", "beta_user_bias", "beta_item_bias",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.init_scale is not None and self.init_scale < 0:
            raise ValueError("init_scale must be non-negative")

    @property
    def effective_init_scale(self) -> float:
        return 1.0 / math.sqrt(self.k) if self.init_scale is None else self.init_scale

    def alphas(self) -> np.ndarray:
        """Learning rates as (user-factor, item-factor, user-bias, item-bias)."""
        return np.array(
            [self.alpha_user_factor, self.alpha_item_factor,
             self.alpha_user_bias, self.alpha_item_bias]
        )

    def betas(self) -> np.ndarray:
        return np.array(
            [self.beta_user_factor, self.beta_item_factor,
             self.beta_user_bias, self.beta_item_bias]
        )


@dataclass
class FactorModel:
    """Learned parameters: per-user/per-item factor rows and bias scalars."""

    user_factors: np.ndarray  # (n_users, k)
    item_factors: np.ndarray  # (n_items, k)
    user_bias: np.ndarray     # (n_users,)
    item_bias: np.ndarray     # (n_items,)

    @property
    def n_users(self) -> int:
        return self.user_factors.shape[0]

    @property
    def n_items(self) -> int:
        return self.item_factors.shape[0]

    @property
    def k(self) -> int:
        return self.user_factors.shape[1]

    def copy(self) -> "FactorModel":
        return FactorModel(
            self.user_factors.copy(), self.item_factors.copy(),
            self.user_bias.copy(), self.item_bias.copy(),
        )

    def is_finite(self) -> bool:
        return bool(
            np.isfinite(self.user_factors).all()
            and np.isfinite(self.item_factors).all()
            and np.isfinite(self.user_bias).all()
            and np.isfinite(self.item_bias).all()
        )


def init_model(n_users: int, n_items: int, hp: Hyperparams) -> FactorModel:
    """Seeded random model: factors uniform on [0, init_scale), biases zero.

    Uses PCG64 seeded with hp.seed; user factors are drawn before item
    factors, so two calls with identical arguments are bit-identical.
    """
    if n_users < 1 or n_items < 1:
        raise ValueError("matrix dimensions must be at least 1x1")
    rng = np.random.Generator(np.random.PCG64(hp.seed))
    scale = hp.effective_init_scale
    return FactorModel(
        user_factors=rng.random((n_users, hp.k)) * scale,
        item_factors=rng.random((n_items, hp.k)) * scale,
        user_bias=np.zeros(n_users),
        item_bias=np.zeros(n_items),
    )


@dataclass(frozen=True)
class BlockedRatings:
    """Ratings re-ordered so each grid block's entries form a contiguous slice.

    Entries are sorted by (block_row, block_col, user, item): within a block
    the traversal order is row-major. offsets has I*J + 1 entries; block
    (i, j) owns the slice [offsets[i*J + j], offsets[i*J + j + 1]).
    """

    grid: BlockGrid
    users: np.ndarray
    items: np.ndarray
    ratings: np.ndarray
    offsets: np.ndarray

    def block_slice(self, block_row: int, block_col: int) -> tuple[int, int]:
        idx = block_row * self.grid.J + block_col
        return int(self.offsets[idx]), int(self.offsets[idx + 1])


def bucketize(data: RatingTriples, grid: BlockGrid) -> BlockedRatings:
    """One-time pass sorting entries into contiguous per-block slices."""
    if grid.n_users != data.n_users or grid.n_items != data.n_items:
        raise ValueError("grid dimensions do not match the data")
    brow = data.users // grid.row_block_size
    bcol = data.items // grid.col_block_size
    order = np.lexsort((data.items, data.users, bcol, brow))
    block_id = brow[order] * grid.J + bcol[order]
    counts = np.bincount(block_id, minlength=grid.I * grid.J)
    offsets = np.zeros(grid.I * grid.J + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return BlockedRatings(
        grid=grid,
        users=_readonly(data.users[order]),
        items=_readonly(data.items[order]),
        ratings=_readonly(data.ratings[order]),
        offsets=_readonly(offsets),
    )
