"""PU meta-algorithms: bagged ensembles over unlabeled subsamples.

The inductive path trains T base classifiers, each on the known positives
against a random size-K subsample of the unlabeled set, and averages their
decisions. The transductive path scores each unlabeled item only with the
classifiers whose subsample excluded it: s(x) = f(x) / n(x), where n(x)
counts the contributing classifiers. A biased single-classifier baseline
(positives vs the whole unlabeled set) and a mean-similarity ranker round
out the method set.

Reproducibility contract: identical inputs, config, and seed give
bit-identical outputs regardless of the parallelism hint, because subsample
seeds are derived up front and aggregation runs in bootstrap order.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .classifiers import (
    _KERNEL_IDS,
    TrainConfig,
    WeightedClassifier,
    decision,
    train_logit,
    train_svm,
)
from .data import Dataset, PUSplit
from .errors import ConfigError, DataError
from .seeding import generator

_TRAINERS = {"svm": train_svm, "logit": train_logit}


def default_bootstrap_count(k: int) -> int:
    """Bootstrap count heuristic: 35 up to K=20, 10 beyond K=30, linear between."""
    if k <= 20:
        return 35
    if k > 30:
        return 10
    return int(35.0 - 2.5 * (k - 20) + 0.5)


@dataclass(frozen=True)
class BaggingConfig:
    subsample_size: int | None = None  # K; defaults to |P|
    n_bootstraps: int | None = None    # T; defaults to default_bootstrap_count(K)
    replacement: str = "without"
    aggregation: str = "mean"
    base_learner: str = "svm"
    train: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0
    parallelism: int = 1

    def __post_init__(self):
        if self.subsample_size is not None and self.subsample_size < 1:
            raise ConfigError("subsample_size must be >= 1")
        if self.n_bootstraps is not None and self.n_bootstraps < 1:
            raise ConfigError("n_bootstraps must be >= 1")
        if self.replacement not in ("without", "with"):
            raise ConfigError("replacement must be 'without' or 'with'")
        if self.aggregation not in ("mean", "majority_vote"):
            raise ConfigError("aggregation must be 'mean' or 'majority_vote'")
        if self.base_learner not in _TRAINERS:
            raise ConfigError("base_learner must be 'svm' or 'logit'")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")

    def resolve(self, n_pos: int, n_unlabeled: int) -> tuple[int, int]:
        """Concrete (K, T) for a given split size."""
        k = self.subsample_size if self.subsample_size is not None else n_pos
        t = self.n_bootstraps if self.n_bootstraps is not None else default_bootstrap_count(k)
        if self.replacement == "without" and k > n_unlabeled:
            raise ConfigError(
                f"subsample size {k} exceeds {n_unlabeled} unlabeled items")
        return k, t


@dataclass
class BaggedClassifier:
    """T base classifiers plus the subsample each was trained against."""

    config: BaggingConfig
    members: tuple[WeightedClassifier, ...]
    subsamples: tuple[np.ndarray, ...]  # item ids per bootstrap (multiset if with)
    positives: np.ndarray

    @property
    def n_bootstraps(self) -> int:
        return len(self.members)


def _draw_positions(n_unlabeled: int, k: int, t_count: int, replacement: str,
                    seed: int) -> list[np.ndarray]:
    """Sorted index arrays into the unlabeled set, one per bootstrap."""
    out = []
    for t in range(t_count):
        rng = generator(seed, t)
        if replacement == "without":
            pos = rng.choice(n_unlabeled, size=k, replace=False)
        else:
            pos = rng.choice(n_unlabeled, size=k, replace=True)
        out.append(np.sort(pos))
    return out


def _train_members(ds: Dataset, split: PUSplit, cfg: BaggingConfig):
    k, t_count = cfg.resolve(len(split.positives), len(split.unlabeled))
    positions = _draw_positions(len(split.unlabeled), k, t_count,
                                cfg.replacement, cfg.seed)
    trainer = _TRAINERS[cfg.base_learner]

    def fit(pos):
        return trainer(ds, split.positives, split.unlabeled[pos], cfg.train)

    if cfg.parallelism > 1:
        with ThreadPoolExecutor(max_workers=cfg.parallelism) as ex:
            members = list(ex.map(fit, positions))
    else:
        members = [fit(pos) for pos in positions]
    return members, positions


def bagging_inductive(ds: Dataset, split: PUSplit, cfg: BaggingConfig) -> BaggedClassifier:
    """Train the ensemble; its decision is the bootstrap-order aggregate."""
    members, positions = _train_members(ds, split, cfg)
    return BaggedClassifier(
        config=cfg,
        members=tuple(members),
        subsamples=tuple(split.unlabeled[p] for p in positions),
        positives=split.positives.copy(),
    )


def _member_matrix(bag: BaggedClassifier):
    """Stacked (weights, biases) when every member is linear, else None."""
    if bag.config.aggregation != "mean":
        return None
    if not all(m.is_linear for m in bag.members):
        return None
    w = np.stack([m.weights for m in bag.members])
    b = np.array([m.bias for m in bag.members])
    return w, b


def bagged_decision(bag: BaggedClassifier, ds: Dataset, rows=None) -> np.ndarray:
    """Aggregate decision: mean of member decisions, or mean sign vote.

    Mean aggregation over all-linear members collapses to a single scoring
    pass with the averaged weight vector; zero decisions vote +1 under
    majority_vote.
    """
    stacked = _member_matrix(bag)
    if stacked is not None:
        w, b = stacked
        rows_arr = np.arange(ds.n_items, dtype=np.int64) if rows is None \
            else np.asarray(rows, dtype=np.int64)
        return kernels.linear_scores(ds.indptr, ds.indices, ds.values, rows_arr,
                                     np.ascontiguousarray(w.mean(axis=0)),
                                     float(b.mean()))
    total = None
    for m in bag.members:
        f = decision(m, ds, rows)
        if bag.config.aggregation == "majority_vote":
            f = np.where(f >= 0, 1.0, -1.0)
        total = f if total is None else total + f
    return total / len(bag.members)


@dataclass
class EnsembleScore:
    """Transductive scores over the unlabeled items.

    ``f`` and ``n`` are the aggregate contribution sum and count per item;
    ``scores`` is f/n, except for flagged items (never excluded by any
    subsample), which fall back to the mean over all T members.
    """

    items: np.ndarray
    f: np.ndarray
    n: np.ndarray
    scores: np.ndarray
    flagged: np.ndarray
    gamma_t: np.ndarray | None
    subsamples: tuple[np.ndarray, ...]


def _subsample_contamination(ds: Dataset, subsamples) -> np.ndarray | None:
    if ds.truth_labels is None:
        return None
    labels = [ds.truth_labels[s] for s in subsamples]
    if any(np.any(l == 0) for l in labels):
        return None
    return np.array([np.mean(l == 1) for l in labels])


def bagging_transductive(ds: Dataset, split: PUSplit, cfg: BaggingConfig) -> EnsembleScore:
    """Score each unlabeled item with the members that did not train on it."""
    members, positions = _train_members(ds, split, cfg)
    n_u = len(split.unlabeled)
    vote = cfg.aggregation == "majority_vote"
    f_sum = np.zeros(n_u)
    n_cnt = np.zeros(n_u, dtype=np.int64)
    all_sum = np.zeros(n_u)
    for member, pos in zip(members, positions):
        out = np.ones(n_u, dtype=bool)
        out[pos] = False  # duplicates collapse: exclusion is by distinct item
        f = decision(member, ds, split.unlabeled)
        if vote:
            f = np.where(f >= 0, 1.0, -1.0)
        f_sum[out] += f[out]
        n_cnt[out] += 1
        all_sum += f
    flagged = n_cnt == 0
    scores = np.empty(n_u)
    scores[~flagged] = f_sum[~flagged] / n_cnt[~flagged]
    scores[flagged] = all_sum[flagged] / len(members)
    subsamples = tuple(split.unlabeled[p] for p in positions)
    return EnsembleScore(
        items=split.unlabeled.copy(),
        f=f_sum,
        n=n_cnt,
        scores=scores,
        flagged=flagged,
        gamma_t=_subsample_contamination(ds, subsamples),
        subsamples=subsamples,
    )


def biased_baseline(ds: Dataset, split: PUSplit, train_cfg: TrainConfig,
                    learner: str = "svm"):
    """One classifier on positives vs the whole unlabeled set.

    Returns (classifier, transductive scores over the unlabeled items).
    """
    if learner not in _TRAINERS:
        raise ConfigError("learner must be 'svm' or 'logit'")
    clf = _TRAINERS[learner](ds, split.positives, split.unlabeled, train_cfg)
    return clf, decision(clf, ds, split.unlabeled)


def mean_similarity_baseline(ds: Dataset, split: PUSplit, kernel: str = "linear",
                             rbf_sigma: float = 1.0) -> np.ndarray:
    """Rank unlabeled items by mean kernel similarity to the positives."""
    if kernel not in _KERNEL_IDS:
        raise ConfigError(f"unknown kernel {kernel!r}")
    if kernel == "rbf" and not rbf_sigma > 0:
        raise ConfigError("rbf_sigma must be positive")
    coef = np.full(len(split.positives), 1.0 / len(split.positives))
    return kernels.expansion_scores(
        ds.indptr, ds.indices, ds.values, split.positives, coef,
        _KERNEL_IDS[kernel], rbf_sigma,
        ds.indptr, ds.indices, ds.values, split.unlabeled)


def speedup_threshold(t: int, alpha: float) -> float:
    """Minimal unlabeled-to-positive ratio past which bagging wins on cost.

    With per-classifier training cost proportional to n^alpha, T bootstraps
    of size 2|P| beat one full-set run once |U|/|P| exceeds 2 T^(1/alpha) - 1.
    """
    if t < 1:
        raise ConfigError("t must be >= 1")
    if not alpha > 0:
        raise ConfigError("alpha must be positive")
    return 2.0 * t ** (1.0 / alpha) - 1.0


@dataclass
class BootstrapDiagnostics:
    """Per-bootstrap realized contamination and member test performance."""

    gamma_t: np.ndarray
    member_auc: np.ndarray | None

    @property
    def correlation(self) -> float:
        if self.member_auc is None:
            raise DataError("no member AUC recorded")
        return float(np.corrcoef(self.gamma_t, self.member_auc)[0, 1])


def contamination_diagnostics(bag: BaggedClassifier, ds: Dataset,
                              test_ds: Dataset | None = None) -> BootstrapDiagnostics:
    """Realized subsample contamination, optionally with per-member test AUC."""
    gamma_t = _subsample_contamination(ds, bag.subsamples)
    if gamma_t is None:
        raise DataError("subsample contamination requires full truth labels")
    member_auc = None
    if test_ds is not None:
        from .evaluation import auc  # local import: avoid a module cycle
        if test_ds.truth_labels is None:
            raise DataError("test dataset lacks truth labels")
        member_auc = np.array([
            auc(decision(m, test_ds), test_ds.truth_labels) for m in bag.members])
    return BootstrapDiagnostics(gamma_t=gamma_t, member_auc=member_auc)


def write_scores_jsonl(es: EnsembleScore, path) -> None:
    """One record per unlabeled item, in item order."""
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(len(es.items)):
            rec = {
                "item": int(es.items[i]),
                "score": float(es.scores[i]),
                "f": float(es.f[i]),
                "n": int(es.n[i]),
                "flagged": bool(es.flagged[i]),
            }
            fh.write(json.dumps(rec) + "\n")


def read_scores_jsonl(path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
