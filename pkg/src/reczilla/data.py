"""User-item interaction datasets: ingestion, synthesis, and splitting.

A dataset is a sparse user-by-item rating matrix with dense internal
indices. External user/item identifiers are mapped to internal indices in
order of first appearance, so any relabeling of the external ids that
preserves row order yields the same internal matrix.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps

from .errors import EmptyDatasetError, InfeasibleError, ParseError, UnsupportedSchemeError


@dataclass(frozen=True)
class Interaction:
    """One raw (user, item, rating[, timestamp]) entry."""

    user_id: object
    item_id: object
    rating: float
    timestamp: int | None = None


class InteractionDataset:
    """Immutable sparse rating matrix over dense user/item index spaces.

    Interactions are stored as parallel arrays (user_idx, item_idx, rating,
    timestamp) in chronological/input order; the CSR matrix is built lazily.
    """

    def __init__(self, name, user_ids, item_ids, user_idx, item_idx,
                 ratings, timestamps=None, family=None):
        self.name = name
        self.family = family if family is not None else name
        self.user_ids = list(user_ids)
        self.item_ids = list(item_ids)
        self.user_idx = np.asarray(user_idx, dtype=np.int64)
        self.item_idx = np.asarray(item_idx, dtype=np.int64)
        self.ratings = np.asarray(ratings, dtype=np.float64)
        self.timestamps = (
            None if timestamps is None else np.asarray(timestamps, dtype=np.int64)
        )
        if not (len(self.user_idx) == len(self.item_idx) == len(self.ratings)):
            raise ValueError("interaction arrays must have equal length")
        if self.timestamps is not None and len(self.timestamps) != len(self.user_idx):
            raise ValueError("timestamp array length mismatch")
        if len(self.user_ids) < 1 or len(self.item_ids) < 1:
            raise ValueError("need at least one user and one item")
        if self.ratings.size and not np.all(np.isfinite(self.ratings)):
            raise ValueError("ratings must be finite")
        self._user_index = {u: i for i, u in enumerate(self.user_ids)}
        self._item_index = {it: i for i, it in enumerate(self.item_ids)}
        self._matrix = None

    @property
    def n_users(self):
        return len(self.user_ids)

    @property
    def n_items(self):
        return len(self.item_ids)

    @property
    def nnz(self):
        return len(self.ratings)

    @property
    def sparsity(self):
        return 1.0 - self.nnz / (self.n_users * self.n_items)

    @property
    def matrix(self) -> sps.csr_matrix:
        """CSR rating matrix of shape (n_users, n_items)."""
        if self._matrix is None:
            self._matrix = sps.csr_matrix(
                (self.ratings, (self.user_idx, self.item_idx)),
                shape=(self.n_users, self.n_items),
            )
        return self._matrix

    def user_index(self, user_id):
        return self._user_index[user_id]

    def item_index(self, item_id):
        return self._item_index[item_id]

    def subset(self, mask, name_suffix):
        """New dataset holding the masked interactions over the same index spaces."""
        mask = np.asarray(mask, dtype=bool)
        return InteractionDataset(
            name=f"{self.name}/{name_suffix}",
            user_ids=self.user_ids,
            item_ids=self.item_ids,
            user_idx=self.user_idx[mask],
            item_idx=self.item_idx[mask],
            ratings=self.ratings[mask],
            timestamps=None if self.timestamps is None else self.timestamps[mask],
            family=self.family,
        )

    def relabel(self, user_map=None, item_map=None, name=None):
        """Rename external ids (bijective); internal indices are unchanged."""
        user_ids = [user_map[u] if user_map else u for u in self.user_ids]
        item_ids = [item_map[i] if item_map else i for i in self.item_ids]
        return InteractionDataset(
            name=name or self.name,
            user_ids=user_ids,
            item_ids=item_ids,
            user_idx=self.user_idx,
            item_idx=self.item_idx,
            ratings=self.ratings,
            timestamps=self.timestamps,
            family=self.family,
        )

    def __eq__(self, other):
        if not isinstance(other, InteractionDataset):
            return NotImplemented
        ts_equal = (self.timestamps is None) == (other.timestamps is None) and (
            self.timestamps is None or np.array_equal(self.timestamps, other.timestamps)
        )
        return (
            self.name == other.name
            and self.family == other.family
            and self.user_ids == other.user_ids
            and self.item_ids == other.item_ids
            and np.array_equal(self.user_idx, other.user_idx)
            and np.array_equal(self.item_idx, other.item_idx)
            and np.array_equal(self.ratings, other.ratings)
            and ts_equal
        )

    def __repr__(self):
        return (
            f"InteractionDataset({self.name!r}, users={self.n_users}, "
            f"items={self.n_items}, nnz={self.nnz})"
        )


@dataclass
class DatasetSplit:
    """Train/validation/test partition of one dataset."""

    train: InteractionDataset
    validation: InteractionDataset
    test: InteractionDataset
    scheme: str = "leave-last-k"
    k: int = 1
    warnings: list = field(default_factory=list)


def _dedup_keep_latest(entries):
    """Keep one entry per (user, item): the latest timestamp, else last seen."""
    best = {}
    for pos, (u, it, r, t) in enumerate(entries):
        key = (u, it)
        prev = best.get(key)
        if prev is None:
            best[key] = (pos, t, r)
        else:
            prev_pos, prev_t, _ = prev
            if t is None or prev_t is None:
                best[key] = (pos, t, r)  # no timestamps: last occurrence wins
            elif t >= prev_t:
                best[key] = (pos, t, r)
    kept = sorted(best.items(), key=lambda kv: kv[1][0])
    return [(u, it, r, t) for (u, it), (_, t, r) in kept]


def from_interactions(entries, name, family=None):
    """Build a dataset from (user, item, rating[, timestamp]) tuples.

    Duplicates are resolved keeping the latest occurrence; internal indices
    follow first appearance.
    """
    norm = []
    for e in entries:
        if isinstance(e, Interaction):
            norm.append((e.user_id, e.item_id, float(e.rating), e.timestamp))
        else:
            u, it, r = e[0], e[1], float(e[2])
            t = int(e[3]) if len(e) > 3 and e[3] is not None else None
            norm.append((u, it, r, t))
    if not norm:
        raise EmptyDatasetError(f"dataset {name!r} has no interactions")
    norm = _dedup_keep_latest(norm)

    user_ids, item_ids = [], []
    user_index, item_index = {}, {}
    u_idx = np.empty(len(norm), dtype=np.int64)
    i_idx = np.empty(len(norm), dtype=np.int64)
    ratings = np.empty(len(norm), dtype=np.float64)
    has_ts = all(t is not None for _, _, _, t in norm)
    ts = np.empty(len(norm), dtype=np.int64) if has_ts else None
    for k, (u, it, r, t) in enumerate(norm):
        if u not in user_index:
            user_index[u] = len(user_ids)
            user_ids.append(u)
        if it not in item_index:
            item_index[it] = len(item_ids)
            item_ids.append(it)
        u_idx[k] = user_index[u]
        i_idx[k] = item_index[it]
        ratings[k] = r
        if has_ts:
            ts[k] = t
    return InteractionDataset(name, user_ids, item_ids, u_idx, i_idx, ratings, ts,
                              family=family)


def ingest(path, delimiter=None, header=None, implicit=False, name=None, family=None):
    """Read a delimiter-separated interaction file into a dataset.

    Columns are ``user, item, rating[, timestamp]``; with ``implicit=True``
    a two-column ``user, item`` file is accepted and ratings default to 1.0.
    ``delimiter=None`` auto-detects comma vs tab; ``header=None`` skips the
    first line when its rating column does not parse as a number.
    """
    import os

    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n").rstrip("\r") for ln in fh]
    lines = [ln for ln in lines if ln.strip() != ""]
    if not lines:
        raise EmptyDatasetError(f"{path}: file is empty")

    if delimiter is None:
        delimiter = "\t" if "\t" in lines[0] else ","

    def parse_line(ln, lineno):
        parts = [p.strip() for p in ln.split(delimiter)]
        min_cols = 2 if implicit else 3
        if len(parts) < min_cols:
            raise ParseError(
                f"expected at least {min_cols} columns, got {len(parts)}", lineno
            )
        u, it = parts[0], parts[1]
        try:
            if implicit and (len(parts) < 3 or parts[2] == ""):
                r = 1.0
            else:
                r = float(parts[2])
        except ValueError:
            raise ParseError(f"rating {parts[2]!r} is not a number", lineno) from None
        t = None
        t_col = 3
        if len(parts) > t_col and parts[t_col] != "":
            try:
                t = int(float(parts[t_col]))
            except ValueError:
                raise ParseError(
                    f"timestamp {parts[t_col]!r} is not a number", lineno
                ) from None
        if not np.isfinite(r):
            raise ParseError(f"rating {r!r} is not finite", lineno)
        return (u, it, r, t)

    start = 0
    if header is True:
        start = 1
    elif header is None:
        try:
            parse_line(lines[0], 1)
        except ParseError:
            start = 1
    if start >= len(lines):
        raise EmptyDatasetError(f"{path}: no data lines after header")

    entries = [parse_line(ln, i + 1) for i, ln in enumerate(lines[start:], start=start)]
    stem = os.path.splitext(os.path.basename(path))[0]
    name = name or stem
    if family is None:
        family = stem.split("__", 1)[0]
    return from_interactions(entries, name=name, family=family)


CANONICAL_HEADER = "user_idx\titem_idx\trating\ttimestamp"


def write_canonical(dataset, path):
    """Write the canonical interchange file (TSV, sorted by user/time/item)."""
    ts = dataset.timestamps
    order = np.lexsort(
        (
            dataset.item_idx,
            ts if ts is not None else np.zeros(dataset.nnz, dtype=np.int64),
            dataset.user_idx,
        )
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CANONICAL_HEADER + "\n")
        for k in order:
            t = "" if ts is None else str(int(ts[k]))
            fh.write(
                f"{int(dataset.user_idx[k])}\t{int(dataset.item_idx[k])}\t"
                f"{repr(float(dataset.ratings[k]))}\t{t}\n"
            )


def read_canonical(path, name=None, family=None):
    """Read a canonical interchange file back into a dataset."""
    import os

    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != CANONICAL_HEADER:
        raise ParseError(f"{path}: missing canonical header", 1)
    entries = []
    for i, ln in enumerate(lines[1:], start=2):
        parts = ln.split("\t")
        if len(parts) != 4:
            raise ParseError(f"expected 4 columns, got {len(parts)}", i)
        t = int(parts[3]) if parts[3] != "" else None
        entries.append((int(parts[0]), int(parts[1]), float(parts[2]), t))
    stem = os.path.splitext(os.path.basename(path))[0]
    return from_interactions(entries, name=name or stem,
                             family=family or stem.split("__", 1)[0])


def _per_user_order(dataset):
    """Indices grouped by user, each group in chronological (or input) order."""
    if dataset.timestamps is not None:
        order = np.argsort(dataset.timestamps, kind="stable")
    else:
        order = np.arange(dataset.nnz)
    by_user = {}
    for k in order:
        by_user.setdefault(int(dataset.user_idx[k]), []).append(int(k))
    return by_user


def split_leave_last_k(dataset, k_val=0, k_test=1):
    """Per-user chronological split: last ``k_test`` to test, previous
    ``k_val`` to validation.

    Users with fewer than ``k_val + k_test + 1`` interactions keep everything
    in train so that no evaluated user is cold.
    """
    if k_test < 1:
        raise ValueError("k_test must be >= 1")
    if k_val < 0:
        raise ValueError("k_val must be >= 0")
    part = np.zeros(dataset.nnz, dtype=np.int8)  # 0 train, 1 val, 2 test
    for _, idxs in _per_user_order(dataset).items():
        if len(idxs) >= k_val + k_test + 1:
            for k in idxs[-k_test:]:
                part[k] = 2
            if k_val:
                for k in idxs[-(k_test + k_val):-k_test]:
                    part[k] = 1
    return DatasetSplit(
        train=dataset.subset(part == 0, "train"),
        validation=dataset.subset(part == 1, "validation"),
        test=dataset.subset(part == 2, "test"),
        scheme="leave-last-k",
        k=k_test,
    )


def split_global_timestamp(dataset, fraction_test=0.2):
    """Hold out interactions newer than the (1 - fraction_test) time quantile.

    Test interactions of users left cold in train are moved back to train.
    """
    if dataset.timestamps is None:
        raise UnsupportedSchemeError("global-timestamp split needs timestamps")
    if not 0.0 < fraction_test < 1.0:
        raise ValueError("fraction_test must be in (0, 1)")
    ts = dataset.timestamps
    threshold = np.quantile(ts, 1.0 - fraction_test)
    in_test = ts > threshold
    notes = []
    if not in_test.any():
        notes.append("empty test split: no timestamps above the quantile")
        warnings.warn(notes[-1])
    train_users = set(dataset.user_idx[~in_test].tolist())
    moved = 0
    for k in np.flatnonzero(in_test):
        if int(dataset.user_idx[k]) not in train_users:
            in_test[k] = False
            moved += 1
    if moved:
        notes.append(f"moved {moved} cold-user interactions back to train")
    split = DatasetSplit(
        train=dataset.subset(~in_test, "train"),
        validation=dataset.subset(np.zeros(dataset.nnz, dtype=bool), "validation"),
        test=dataset.subset(in_test, "test"),
        scheme="global-timestamp",
        k=0,
    )
    split.warnings.extend(notes)
    return split


@dataclass
class SyntheticSpec:
    """Parameters for ``synthesize``."""

    users: int
    items: int
    nnz: int
    popularity_skew: float = 1.0
    rating_levels: int = 5  # 0 means implicit (all ratings 1.0)
    seed: int = 0
    name: str = "synthetic"
    family: str | None = None


def synthesize(spec: SyntheticSpec) -> InteractionDataset:
    """Generate a deterministic synthetic dataset with power-law item popularity.

    Item ``j`` is drawn with probability proportional to ``(j+1)**-skew``;
    per-user item sets are sampled without replacement so no pair repeats.
    """
    if spec.nnz > spec.users * spec.items:
        raise InfeasibleError(
            f"nnz={spec.nnz} exceeds matrix capacity {spec.users * spec.items}"
        )
    if spec.nnz < 1 or spec.users < 1 or spec.items < 1:
        raise ValueError("users, items and nnz must be positive")
    rng = np.random.default_rng(spec.seed)
    weights = (np.arange(1, spec.items + 1, dtype=np.float64)) ** (-spec.popularity_skew)
    weights /= weights.sum()

    counts = np.full(spec.users, spec.nnz // spec.users, dtype=np.int64)
    counts[: spec.nnz % spec.users] += 1
    # Push overflow beyond the per-user item cap onto users with spare room.
    overflow = int(np.sum(np.maximum(counts - spec.items, 0)))
    counts = np.minimum(counts, spec.items)
    u = 0
    while overflow > 0:
        room = spec.items - counts[u]
        take = min(room, overflow)
        counts[u] += take
        overflow -= take
        u += 1

    users, items = [], []
    for uidx in range(spec.users):
        c = int(counts[uidx])
        if c == 0:
            continue
        chosen = rng.choice(spec.items, size=c, replace=False, p=weights)
        users.extend([uidx] * c)
        items.extend(int(j) for j in chosen)
    if spec.rating_levels and spec.rating_levels > 0:
        ratings = rng.integers(1, spec.rating_levels + 1, size=len(users)).astype(float)
    else:
        ratings = np.ones(len(users), dtype=np.float64)
    order = rng.permutation(len(users))
    entries = [
        (f"u{users[k]}", f"i{items[k]}", float(ratings[k]), int(t))
        for t, k in enumerate(order)
    ]
    return from_interactions(entries, name=spec.name, family=spec.family or spec.name)
