"""Shared helpers for building random fixtures used across test modules."""

import numpy as np

from pubag.data import Dataset, PUSplit


def random_dense_dataset(rng, n, d, labels=True):
    x = rng.normal(0.0, 1.0, size=(n, d))
    truth = rng.choice([1, -1], size=n) if labels else None
    return Dataset.from_dense(x, truth_labels=truth)


def random_sparse_dataset(rng, n, d, density=0.4, labels=False):
    """CSR dataset with random support per row (possibly empty rows)."""
    indptr = [0]
    indices = []
    values = []
    for _ in range(n):
        nnz = rng.binomial(d, density)
        cols = np.sort(rng.choice(d, size=nnz, replace=False))
        indices.extend(cols.tolist())
        values.extend(rng.normal(0.0, 1.0, size=nnz).tolist())
        indptr.append(len(indices))
    truth = rng.choice([1, -1], size=n) if labels else None
    return Dataset(np.array(indptr, dtype=np.int64),
                   np.array(indices, dtype=np.int64),
                   np.array(values, dtype=np.float64), d, truth)


def two_class_problem(rng, n_pos, n_neg, d, sep=1.5):
    """Linearly separated-ish dense data as (dataset, pos_rows, neg_rows)."""
    pos = rng.normal(0.0, 1.0, size=(n_pos, d))
    neg = rng.normal(0.0, 1.0, size=(n_neg, d))
    neg[:, 0] += sep
    ds = Dataset.from_dense(
        np.vstack([pos, neg]),
        truth_labels=np.concatenate([np.ones(n_pos), -np.ones(n_neg)]))
    return ds, np.arange(n_pos, dtype=np.int64), np.arange(n_pos, n_pos + n_neg, dtype=np.int64)


def pu_problem(rng, n_pos, n_unl, d, gamma, sep=1.5):
    """PU layout: known positives first, then unlabeled with hidden truth."""
    pos = rng.normal(0.0, 1.0, size=(n_pos, d))
    hidden = rng.random(n_unl) < gamma
    unl = rng.normal(0.0, 1.0, size=(n_unl, d))
    unl[~hidden, 0] += sep
    truth = np.concatenate([np.ones(n_pos), np.where(hidden, 1, -1)])
    ds = Dataset.from_dense(np.vstack([pos, unl]), truth_labels=truth)
    split = PUSplit(np.arange(n_pos, dtype=np.int64),
                    np.arange(n_pos, n_pos + n_unl, dtype=np.int64),
                    ds.n_items)
    return ds, split
