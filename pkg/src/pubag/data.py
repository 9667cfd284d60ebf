"""Datasets, sparse text IO, synthetic generation, and PU splits.

A :class:`Dataset` is an immutable CSR triple (``indptr``, ``indices``,
``values``) with optional per-item truth labels in {+1, -1, 0} (0 = unknown)
and optional opaque group tokens. Dense synthetic data is stored in the same
structure with every feature present, so all downstream code has one path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, SparseFormatError
from .seeding import generator


@dataclass(frozen=True)
class Dataset:
    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray
    n_features: int
    truth_labels: np.ndarray | None = None
    groups: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "indptr", np.ascontiguousarray(self.indptr, dtype=np.int64))
        object.__setattr__(self, "indices", np.ascontiguousarray(self.indices, dtype=np.int64))
        object.__setattr__(self, "values", np.ascontiguousarray(self.values, dtype=np.float64))
        if self.truth_labels is not None:
            labels = np.ascontiguousarray(self.truth_labels, dtype=np.int8)
            object.__setattr__(self, "truth_labels", labels)
        n = self.n_items
        if self.indptr[0] != 0 or self.indptr[-1] != len(self.indices) or len(self.indices) != len(self.values):
            raise DataError("inconsistent CSR structure")
        if np.any(np.diff(self.indptr) < 0):
            raise DataError("indptr must be nondecreasing")
        if len(self.indices):
            if self.indices.min() < 0 or self.indices.max() >= self.n_features:
                raise DataError("feature index out of range")
            # Strictly increasing within each row.
            inner = np.diff(self.indices)
            row_starts = self.indptr[1:-1]
            inner_mask = np.ones(len(inner), dtype=bool)
            inner_mask[row_starts - 1] = False
            if np.any(inner[inner_mask] <= 0):
                raise DataError("feature indices must be strictly increasing within a row")
        if not np.all(np.isfinite(self.values)):
            raise DataError("non-finite feature value")
        if self.truth_labels is not None and len(self.truth_labels) != n:
            raise DataError("truth_labels length mismatch")
        if self.groups is not None and len(self.groups) != n:
            raise DataError("groups length mismatch")

    @property
    def n_items(self) -> int:
        return len(self.indptr) - 1

    @classmethod
    def from_dense(cls, array, truth_labels=None, groups=None) -> "Dataset":
        """Store a dense matrix row-major with every feature present."""
        arr = np.asarray(array, dtype=np.float64)
        if arr.ndim != 2:
            raise DataError("expected a 2-D array")
        n, d = arr.shape
        return cls(
            indptr=np.arange(n + 1, dtype=np.int64) * d,
            indices=np.tile(np.arange(d, dtype=np.int64), n),
            values=arr.ravel().copy(),
            n_features=d,
            truth_labels=truth_labels,
            groups=tuple(groups) if groups is not None else None,
        )

    def row_dense(self, i: int) -> np.ndarray:
        out = np.zeros(self.n_features)
        lo, hi = self.indptr[i], self.indptr[i + 1]
        out[self.indices[lo:hi]] = self.values[lo:hi]
        return out

    def to_dense(self) -> np.ndarray:
        return np.vstack([self.row_dense(i) for i in range(self.n_items)])

    def take(self, rows) -> "Dataset":
        """Copy the selected rows into a new dataset (order preserved)."""
        rows = np.asarray(rows, dtype=np.int64)
        counts = self.indptr[rows + 1] - self.indptr[rows]
        indptr = np.zeros(len(rows) + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        total = int(indptr[-1])
        src = np.repeat(self.indptr[rows] - indptr[:-1], counts) + np.arange(total)
        labels = self.truth_labels[rows] if self.truth_labels is not None else None
        grp = tuple(self.groups[i] for i in rows) if self.groups is not None else None
        return Dataset(indptr, self.indices[src], self.values[src],
                       self.n_features, labels, grp)


@dataclass(frozen=True)
class PUSplit:
    """Index sets of known positives and unlabeled items in one dataset."""

    positives: np.ndarray
    unlabeled: np.ndarray
    n_items: int

    def __post_init__(self):
        object.__setattr__(self, "positives", np.ascontiguousarray(self.positives, dtype=np.int64))
        object.__setattr__(self, "unlabeled", np.ascontiguousarray(self.unlabeled, dtype=np.int64))
        if len(self.positives) < 1 or len(self.unlabeled) < 1:
            raise DataError("both the positive and unlabeled sets must be non-empty")
        both = np.concatenate([self.positives, self.unlabeled])
        if both.min() < 0 or both.max() >= self.n_items:
            raise DataError("split index out of range")
        if len(np.intersect1d(self.positives, self.unlabeled)):
            raise DataError("positive and unlabeled sets overlap")

    @property
    def disjoint(self) -> bool:
        return True  # enforced at construction


@dataclass(frozen=True)
class SimConfig:
    """Isotropic-Gaussian PU simulation settings.

    Positives are N(0, sigma^2 I) in ``dim`` dimensions; negatives share the
    covariance with a mean of norm ``mean_separation`` along the first axis.
    Each unlabeled item is a hidden positive with probability ``contamination``.
    """

    dim: int = 50
    sigma: float = 0.6
    mean_separation: float = 1.0
    contamination: float = 0.0
    n_pos: int = 5
    n_unlabeled: int = 50
    n_test: int = 1000
    test_pos_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1 or self.n_pos < 1 or self.n_unlabeled < 1 or self.n_test < 1:
            raise ConfigError("counts must be >= 1")
        if not (self.sigma > 0):
            raise ConfigError("sigma must be positive")
        if not (0.0 <= self.contamination < 1.0):
            raise ConfigError("contamination must be in [0, 1)")
        if not (0.0 < self.test_pos_fraction < 1.0):
            raise ConfigError("test_pos_fraction must be in (0, 1)")
        if self.mean_separation < 0:
            raise ConfigError("mean_separation must be nonnegative")


_LABELS = {"+1": 1, "1": 1, "-1": -1, "0": 0}


def load_sparse(path, groups_path=None) -> Dataset:
    """Read a svmlight-style file: ``label idx:val ...`` with 1-based indices.

    Labels are +1 / -1 / 0, where 0 means unknown truth. Indices must be
    strictly increasing within a line; they are converted to 0-based.
    """
    indptr = [0]
    indices: list[int] = []
    values: list[float] = []
    labels: list[int] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] not in _LABELS:
                raise SparseFormatError(f"bad label {parts[0]!r}", lineno)
            labels.append(_LABELS[parts[0]])
            prev = 0
            for tok in parts[1:]:
                try:
                    idx_s, val_s = tok.split(":", 1)
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError:
                    raise SparseFormatError(f"bad feature token {tok!r}", lineno) from None
                if idx < 1:
                    raise SparseFormatError(f"index {idx} is not 1-based", lineno)
                if idx <= prev:
                    raise SparseFormatError("indices not increasing", lineno)
                prev = idx
                indices.append(idx - 1)
                values.append(val)
            indptr.append(len(indices))
    if len(indptr) == 1:
        raise SparseFormatError("no rows")
    n_features = max(indices) + 1 if indices else 1
    groups = None
    if groups_path is not None:
        groups = load_groups(groups_path)
        if len(groups) != len(indptr) - 1:
            raise SparseFormatError("group file row count does not match data file")
    label_arr = np.array(labels, dtype=np.int8)
    if not label_arr.any():
        label_arr = None
    return Dataset(np.array(indptr, dtype=np.int64), np.array(indices, dtype=np.int64),
                   np.array(values, dtype=np.float64), n_features, label_arr, groups)


def write_sparse(ds: Dataset, path, groups_path=None) -> None:
    """Inverse of :func:`load_sparse` (float formatting aside)."""
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(ds.n_items):
            label = int(ds.truth_labels[i]) if ds.truth_labels is not None else 0
            tag = "+1" if label == 1 else ("-1" if label == -1 else "0")
            lo, hi = ds.indptr[i], ds.indptr[i + 1]
            feats = " ".join(f"{int(j) + 1}:{float(v)!r}" for j, v in
                             zip(ds.indices[lo:hi], ds.values[lo:hi]))
            fh.write(f"{tag} {feats}".rstrip() + "\n")
    if groups_path is not None:
        if ds.groups is None:
            raise DataError("dataset has no groups to write")
        write_groups(ds.groups, groups_path)


def load_groups(path) -> tuple[str, ...]:
    with open(path, "r", encoding="utf-8") as fh:
        return tuple(line.strip() for line in fh if line.strip())


def write_groups(groups, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for g in groups:
            fh.write(f"{g}\n")


def generate_gaussian_pu(cfg: SimConfig) -> tuple[Dataset, PUSplit, Dataset]:
    """Draw (train dataset, PU split, test dataset) from the two-Gaussian mixture.

    The train set is ``n_pos`` known positives followed by ``n_unlabeled``
    unlabeled items whose hidden truth is recorded; the test set holds exactly
    ``floor(test_pos_fraction * n_test)`` positives. Fully determined by
    ``cfg.seed``.
    """
    mu = np.zeros(cfg.dim)
    mu[0] = cfg.mean_separation

    def draw(rng, n, positive):
        x = rng.normal(0.0, cfg.sigma, size=(n, cfg.dim))
        if not positive:
            x += mu
        return x

    rng_pos = generator(cfg.seed, 0)
    rng_mix = generator(cfg.seed, 1)
    rng_test = generator(cfg.seed, 2)

    pos = draw(rng_pos, cfg.n_pos, True)

    hidden = rng_mix.random(cfg.n_unlabeled) < cfg.contamination
    unl = rng_mix.normal(0.0, cfg.sigma, size=(cfg.n_unlabeled, cfg.dim))
    unl[~hidden] += mu

    train = np.vstack([pos, unl])
    truth = np.concatenate([
        np.ones(cfg.n_pos, dtype=np.int8),
        np.where(hidden, 1, -1).astype(np.int8),
    ])
    train_ds = Dataset.from_dense(train, truth_labels=truth)
    split = PUSplit(
        positives=np.arange(cfg.n_pos, dtype=np.int64),
        unlabeled=np.arange(cfg.n_pos, cfg.n_pos + cfg.n_unlabeled, dtype=np.int64),
        n_items=train_ds.n_items,
    )

    n_test_pos = int(cfg.test_pos_fraction * cfg.n_test)
    test = np.vstack([
        draw(rng_test, n_test_pos, True),
        draw(rng_test, cfg.n_test - n_test_pos, False),
    ])
    test_truth = np.concatenate([
        np.ones(n_test_pos, dtype=np.int8),
        -np.ones(cfg.n_test - n_test_pos, dtype=np.int8),
    ])
    test_ds = Dataset.from_dense(test, truth_labels=test_truth)
    return train_ds, split, test_ds


def concat_datasets(a: Dataset, b: Dataset) -> Dataset:
    """Stack two datasets row-wise; feature spaces are unioned by width."""
    indptr = np.concatenate([a.indptr, a.indptr[-1] + b.indptr[1:]])
    labels = None
    if a.truth_labels is not None and b.truth_labels is not None:
        labels = np.concatenate([a.truth_labels, b.truth_labels])
    groups = None
    if a.groups is not None and b.groups is not None:
        groups = a.groups + b.groups
    return Dataset(indptr,
                   np.concatenate([a.indices, b.indices]),
                   np.concatenate([a.values, b.values]),
                   max(a.n_features, b.n_features), labels, groups)


def make_pu_split(ds: Dataset, n_known_pos: int, seed: int) -> PUSplit:
    """Hide all but ``n_known_pos`` uniformly chosen true positives in U."""
    if ds.truth_labels is None:
        raise DataError("make_pu_split requires truth labels")
    if n_known_pos < 1:
        raise DataError("n_known_pos must be >= 1")
    true_pos = np.flatnonzero(ds.truth_labels == 1)
    if n_known_pos > len(true_pos):
        raise DataError(
            f"requested {n_known_pos} known positives but only {len(true_pos)} exist")
    rng = generator(seed)
    chosen = np.sort(rng.choice(true_pos, size=n_known_pos, replace=False))
    mask = np.ones(ds.n_items, dtype=bool)
    mask[chosen] = False
    return PUSplit(positives=chosen, unlabeled=np.flatnonzero(mask), n_items=ds.n_items)


def realized_contamination(ds: Dataset, split: PUSplit) -> float:
    """Fraction of hidden positives among the unlabeled items."""
    if ds.truth_labels is None:
        raise DataError("truth labels required")
    labels = ds.truth_labels[split.unlabeled]
    if np.any(labels == 0):
        raise DataError("unlabeled items with unknown truth")
    return float(np.mean(labels == 1))
