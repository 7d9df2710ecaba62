"""Dataset loading, normalization to dense-indexed triples, and seeded splits."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ratings import RatingTriples

FORMATS = ("movielens-100k", "movielens-1m", "csv")


class DataError(ValueError):
    """Malformed or inconsistent input data (maps to CLI exit code 2)."""


@dataclass(frozen=True)
class DatasetSpec:
    format: str
    path: str | Path
    rating_scale: tuple[float, float] = (1.0, 5.0)
    csv_header: bool = False

    def __post_init__(self) -> None:
        if self.format not in FORMATS:
            raise DataError(f"unknown format {self.format!r}; expected one of {FORMATS}")
        lo, hi = self.rating_scale
        if not lo < hi:
            raise DataError("rating_scale min must be below max")


@dataclass(frozen=True)
class LoadedDataset:
    """Dense-indexed triples plus the retained id-remapping tables.

    user_ids[dense_index] and item_ids[dense_index] recover the original
    identifiers; both tables are sorted ascending, so remapping is
    deterministic for a given file.
    """

    data: RatingTriples
    user_ids: np.ndarray
    item_ids: np.ndarray


def _parse_lines(path: Path, sep: str, n_fields_min: int, header: bool):
    users, items, ratings = [], [], []
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    start = 1 if header else 0
    for lineno, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        fields = line.split(sep)
        if len(fields) < n_fields_min:
            raise DataError(f"{path}:{lineno}: expected at least {n_fields_min} "
                            f"{sep!r}-separated fields, got {len(fields)}")
        try:
            users.append(int(fields[0]))
            items.append(int(fields[1]))
            ratings.append(float(fields[2]))
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
    if not users:
        raise DataError(f"{path}: no ratings found")
    return np.array(users, dtype=np.int64), np.array(items, dtype=np.int64), np.array(ratings)


def load(spec: DatasetSpec) -> LoadedDataset:
    """Load a ratings file and remap user/item ids to dense 0-based indices."""
    path = Path(spec.path)
    if spec.format == "movielens-100k":
        raw_users, raw_items, ratings = _parse_lines(path, "\t", 4, header=False)
    elif spec.format == "movielens-1m":
        raw_users, raw_items, ratings = _parse_lines(path, "::", 4, header=False)
    else:
        raw_users, raw_items, ratings = _parse_lines(path, ",", 3, header=spec.csv_header)

    lo, hi = spec.rating_scale
    bad = np.flatnonzero((ratings < lo) | (ratings > hi))
    if bad.size:
        raise DataError(f"{path}: rating {ratings[bad[0]]} outside declared "
                        f"scale [{lo}, {hi}]")

    user_ids, users = np.unique(raw_users, return_inverse=True)
    item_ids, items = np.unique(raw_items, return_inverse=True)
    try:
        data = RatingTriples(
            n_users=int(user_ids.size), n_items=int(item_ids.size),
            users=users.astype(np.int64), items=items.astype(np.int64), ratings=ratings,
        )
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    return LoadedDataset(data=data, user_ids=user_ids, item_ids=item_ids)


def save_csv(data: RatingTriples, path: str | Path,
             user_ids: np.ndarray | None = None,
             item_ids: np.ndarray | None = None) -> None:
    """Write triples as user,item,rating lines; optional tables map back to original ids.

    Ratings are written with repr so a reload round-trips exactly.
    """
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for u, i, x in zip(data.users, data.items, data.ratings):
            uu = int(user_ids[u]) if user_ids is not None else int(u)
            ii = int(item_ids[i]) if item_ids is not None else int(i)
            fh.write(f"{uu},{ii},{x!r}\n")


@dataclass(frozen=True)
class Split:
    train: RatingTriples
    test: RatingTriples
    train_fraction: float
    seed: int


def split(data: RatingTriples, train_fraction: float, seed: int) -> Split:
    """Seeded uniform split of the entries into train and test folds.

    The entries are permuted by a PCG64 generator seeded with ``seed`` and
    the first round(train_fraction * N) go to train (round half up). Both
    folds keep the source matrix dimensions, so models trained on one fold
    are dimension-compatible with the other.
    """
    n = len(data)
    if not 0.0 < train_fraction < 1.0:
        raise DataError("train_fraction must be strictly between 0 and 1")
    if n < 2:
        raise DataError("need at least 2 entries to split")
    n_train = int(np.floor(train_fraction * n + 0.5))
    if n_train == 0 or n_train == n:
        raise DataError(
            f"fraction {train_fraction} leaves an empty fold for {n} entries"
        )
    rng = np.random.Generator(np.random.PCG64(seed))
    perm = rng.permutation(n)

    def take(idx: np.ndarray) -> RatingTriples:
        return RatingTriples(
            n_users=data.n_users, n_items=data.n_items,
            users=data.users[idx], items=data.items[idx], ratings=data.ratings[idx],
        )

    return Split(
        train=take(perm[:n_train]),
        test=take(perm[n_train:]),
        train_fraction=train_fraction,
        seed=seed,
    )
