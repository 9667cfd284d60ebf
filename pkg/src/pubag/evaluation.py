"""Ranking metrics, grouped cross-validation, grid search, paired tests.

All metric functions take a score vector and a label vector in {+1, -1} and
are tie-aware: AUC gives half credit to tied pairs (Mann-Whitney convention)
and the PR curve groups tied scores into a single threshold. Everything here
is pure and deterministic.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .seeding import generator


def _check_scored(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise DataError("scores and labels must be equal-length vectors")
    if not np.all(np.isfinite(scores)):
        raise DataError("non-finite score")
    if not np.all((labels == 1) | (labels == -1)):
        raise DataError("labels must be +1 or -1")
    pos = labels == 1
    if not pos.any() or pos.all():
        raise DataError("need at least one positive and one negative label")
    return scores, pos


def _midranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    _, inv, counts = np.unique(x, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts).astype(np.float64)
    return (ends - (counts - 1) / 2.0)[inv]


def auc(scores, labels) -> float:
    """Tie-aware Mann-Whitney AUC: P(s+ > s-) + 0.5 P(s+ = s-)."""
    scores, pos = _check_scored(scores, labels)
    n_pos = int(pos.sum())
    n_neg = len(scores) - n_pos
    rank_sum = _midranks(scores)[pos].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def _threshold_counts(scores, pos):
    """Cumulative true/false positives at each distinct threshold, descending."""
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    p = pos[order].astype(np.int64)
    # Last index of each tied block marks one threshold.
    last = np.flatnonzero(np.diff(s) != 0)
    last = np.append(last, len(s) - 1)
    tp = np.cumsum(p)[last]
    fp = (last + 1) - tp
    return s[last], tp.astype(np.float64), fp.astype(np.float64)


def roc_curve(scores, labels):
    """(fpr, tpr, thresholds) from (0, 0) to (1, 1); thresholds[0] = +inf."""
    scores, pos = _check_scored(scores, labels)
    n_pos = pos.sum()
    n_neg = len(scores) - n_pos
    thr, tp, fp = _threshold_counts(scores, pos)
    fpr = np.concatenate([[0.0], fp / n_neg])
    tpr = np.concatenate([[0.0], tp / n_pos])
    return fpr, tpr, np.concatenate([[np.inf], thr])


def precision_recall(scores, labels):
    """(recall, precision, thresholds, aupr) at each distinct threshold.

    The area holds precision constant over each recall step (no linear
    interpolation between PR points).
    """
    scores, pos = _check_scored(scores, labels)
    n_pos = pos.sum()
    thr, tp, fp = _threshold_counts(scores, pos)
    recall = tp / n_pos
    precision = tp / (tp + fp)
    steps = np.diff(np.concatenate([[0.0], recall]))
    aupr = float(steps @ precision)
    return recall, precision, thr, aupr


@dataclass(frozen=True)
class MetricsReport:
    roc_points: tuple
    auc: float
    pr_points: tuple
    aupr: float
    n_pos: int
    n_neg: int

    def to_dict(self) -> dict:
        return {
            "auc": self.auc,
            "aupr": self.aupr,
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
            "roc_points": [[float(a), float(b)] for a, b in self.roc_points],
            "pr_points": [[float(a), float(b)] for a, b in self.pr_points],
        }


def compute_metrics(scores, labels) -> MetricsReport:
    scores, pos = _check_scored(scores, labels)
    fpr, tpr, _ = roc_curve(scores, labels)
    recall, precision, _, aupr_val = precision_recall(scores, labels)
    return MetricsReport(
        roc_points=tuple(zip(fpr.tolist(), tpr.tolist())),
        auc=auc(scores, labels),
        pr_points=tuple(zip(recall.tolist(), precision.tolist())),
        aupr=aupr_val,
        n_pos=int(pos.sum()),
        n_neg=int(len(scores) - pos.sum()),
    )


def write_metrics_json(report: MetricsReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh)


def write_curves_csv(report: MetricsReport, path) -> None:
    """Tidy rows (curve, x, y) for external plotting tools."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["curve", "x", "y"])
        for f, t in report.roc_points:
            w.writerow(["roc", f, t])
        for r, p in report.pr_points:
            w.writerow(["pr", r, p])


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: np.ndarray  # per-item fold id in [0, k)
    group_respecting: bool

    def fold_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def splits(self):
        """Yield (train_rows, test_rows) per fold."""
        for fold in range(self.k):
            test = self.fold_rows(fold)
            train = np.flatnonzero(self.assignments != fold)
            yield train, test


def grouped_kfold(ds_or_groups, k: int, seed: int) -> FoldPlan:
    """Assign whole groups to folds, largest first onto the smallest fold.

    Accepts a Dataset (uses its ``groups``; items without groups are their
    own singleton group) or a plain sequence of group tokens. Groups are
    shuffled before the size-descending pass so equal-size groups land
    differently under different seeds.
    """
    if k < 2:
        raise DataError("k must be >= 2")
    groups = getattr(ds_or_groups, "groups", None)
    if groups is None and not hasattr(ds_or_groups, "n_items"):
        groups = tuple(ds_or_groups)
    n = getattr(ds_or_groups, "n_items", len(groups) if groups else 0)
    group_respecting = groups is not None
    if groups is None:
        groups = tuple(range(n))
    members: dict = {}
    for i, g in enumerate(groups):
        members.setdefault(g, []).append(i)
    if len(members) < k:
        raise DataError(f"{len(members)} groups cannot fill {k} folds")
    keys = list(members)
    rng = generator(seed)
    rng.shuffle(keys)
    keys.sort(key=lambda g: len(members[g]), reverse=True)  # stable: shuffle breaks ties
    sizes = np.zeros(k, dtype=np.int64)
    assignments = np.empty(len(groups), dtype=np.int64)
    for g in keys:
        fold = int(np.argmin(sizes))
        rows = members[g]
        assignments[rows] = fold
        sizes[fold] += len(rows)
    return FoldPlan(k=k, assignments=assignments, group_respecting=group_respecting)


@dataclass(frozen=True)
class GridCell:
    value: float
    score: float | None
    error: str | None = None


@dataclass(frozen=True)
class GridResult:
    best: float
    best_score: float
    cells: tuple[GridCell, ...]

    def to_dict(self) -> dict:
        return {
            "best": self.best,
            "best_score": self.best_score,
            "cells": [{"value": c.value, "score": c.score, "error": c.error}
                      for c in self.cells],
        }


def default_c_grid() -> np.ndarray:
    """Total-cost grid e^-12, e^-10, ..., e^0, e^2 (8 values)."""
    return np.exp(np.arange(-12, 3, 2, dtype=np.float64))


def grid_search(score_fn, grid, plan: FoldPlan | None = None) -> GridResult:
    """Evaluate ``score_fn`` per grid value, keeping the full table.

    Without a plan, ``score_fn(value)`` returns the cell score directly.
    With a plan, ``score_fn(value, train_rows, test_rows)`` is averaged over
    the folds. A cell whose evaluation raises is recorded as failed; ties
    prefer the smaller value (stronger regularization first when the grid is
    a cost grid).
    """
    grid = [float(v) for v in grid]
    if not grid:
        raise DataError("empty grid")
    cells = []
    for value in grid:
        try:
            if plan is None:
                score = float(score_fn(value))
            else:
                score = float(np.mean([score_fn(value, tr, te)
                                       for tr, te in plan.splits()]))
            cells.append(GridCell(value, score))
        except Exception as exc:  # noqa: BLE001 - cell failures are data
            cells.append(GridCell(value, None, f"{type(exc).__name__}: {exc}"))
    scored = [c for c in cells if c.score is not None]
    if not scored:
        raise DataError("every grid cell failed")
    best = min(scored, key=lambda c: (-c.score, c.value))
    return GridResult(best=best.value, best_score=best.score, cells=tuple(cells))


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # W+: rank sum of positive differences
    p_value: float
    n_used: int


def wilcoxon_paired(a, b) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped; ties in |difference| share midranks; the
    p-value uses the normal approximation with tie-corrected variance and a
    0.5 continuity correction, so at least 6 usable pairs are required.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DataError("paired samples must be equal-length vectors")
    d = a - b
    d = d[d != 0]
    n = len(d)
    if n == 0:
        raise DataError("no usable pairs: all differences are zero")
    if n < 6:
        raise DataError(f"only {n} nonzero pairs; need at least 6 for the normal approximation")
    ranks = _midranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    _, counts = np.unique(np.abs(d), return_counts=True)
    var -= float(np.sum(counts.astype(np.float64) ** 3 - counts)) / 48.0
    if var <= 0:
        raise DataError("degenerate variance in signed-rank test")
    delta = w_plus - mean
    z = (delta - 0.5 * np.sign(delta)) / math.sqrt(var) if delta != 0 else 0.0
    p = math.erfc(abs(z) / math.sqrt(2.0))
    return WilcoxonResult(statistic=w_plus, p_value=min(1.0, p), n_used=n)
