"""Weighted binary base classifiers.

Two trainers share one configuration type: an asymmetric-cost soft-margin SVM
(L1 hinge, linear or RBF kernel) solved by dual coordinate descent, and a
class-weighted L2-regularized logistic regression (linear only) solved by
damped Newton. The bias is a regularized constant feature, which keeps the
SVM dual box-constrained; for kernel classifiers the same convention appears
as the augmented kernel k(x, x') + 1.

Cost rule: with the ``balanced`` split the total penalty mass is equal per
class, C+ * n+ = C- * n- with C+ + C- = C.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .data import Dataset
from .errors import ConfigError, DataError, UnsupportedConfigurationError
from .seeding import kernel_seed

SVM_DEFAULT_TOL = 1e-3
LOGIT_DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITERATIONS = 10_000
GRAM_LIMIT = 6144  # largest n for which the kernel solver caches the full Gram (~300 MB)

_KERNEL_IDS = {"linear": 0, "rbf": 1}


@dataclass(frozen=True)
class TrainConfig:
    c: float = 1.0
    cost_split: str | tuple[float, float] = "balanced"
    kernel: str = "linear"
    rbf_sigma: float = 1.0
    tolerance: float | None = None
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    bias_mode: str = "augmented_constant"
    seed: int = 0

    def __post_init__(self):
        if not (self.c > 0 and np.isfinite(self.c)):
            raise ConfigError("total cost must be positive and finite")
        if isinstance(self.cost_split, (tuple, list)):
            cp, cn = self.cost_split
            if not (cp > 0 and cn > 0):
                raise ConfigError("explicit class costs must be positive")
            object.__setattr__(self, "cost_split", (float(cp), float(cn)))
        elif self.cost_split != "balanced":
            raise ConfigError("cost_split must be 'balanced' or an explicit pair")
        if self.kernel not in _KERNEL_IDS:
            raise ConfigError(f"unknown kernel {self.kernel!r}")
        if self.kernel == "rbf" and not (self.rbf_sigma > 0):
            raise ConfigError("rbf_sigma must be positive")
        if self.tolerance is not None and not (self.tolerance > 0):
            raise ConfigError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        if self.bias_mode != "augmented_constant":
            raise ConfigError("only the augmented_constant bias mode is supported")


def per_class_costs(cfg: TrainConfig, n_pos: int, n_neg: int) -> tuple[float, float]:
    if isinstance(cfg.cost_split, tuple):
        return cfg.cost_split
    n = n_pos + n_neg
    return cfg.c * n_neg / n, cfg.c * n_pos / n


def assemble_problem(pos_rows, neg_rows, cfg: TrainConfig):
    """Stack (rows, labels, per-example costs) for a training call."""
    pos_rows = np.asarray(pos_rows, dtype=np.int64)
    neg_rows = np.asarray(neg_rows, dtype=np.int64)
    if len(pos_rows) == 0 or len(neg_rows) == 0:
        raise DataError("both classes must be non-empty")
    c_pos, c_neg = per_class_costs(cfg, len(pos_rows), len(neg_rows))
    rows = np.concatenate([pos_rows, neg_rows])
    y = np.concatenate([np.ones(len(pos_rows)), -np.ones(len(neg_rows))])
    cost = np.concatenate([np.full(len(pos_rows), c_pos), np.full(len(neg_rows), c_neg)])
    return rows, y, cost


@dataclass
class Diagnostics:
    iterations: int
    violation: float
    converged: bool
    loss_trace: np.ndarray | None = None


@dataclass
class WeightedClassifier:
    """Trained decision function: explicit weights or a kernel expansion."""

    kind: str
    config: TrainConfig
    n_features: int
    bias: float
    weights: np.ndarray | None = None
    support: Dataset | None = None
    coef: np.ndarray | None = None
    diagnostics: Diagnostics | None = None
    alpha: np.ndarray | None = field(default=None, repr=False)

    @property
    def is_linear(self) -> bool:
        return self.weights is not None


def _warn_if_unconverged(kind, diag):
    if not diag.converged:
        warnings.warn(
            f"{kind} training stopped at {diag.iterations} iterations with "
            f"residual {diag.violation:.3g} above tolerance",
            RuntimeWarning,
            stacklevel=3,
        )


def train_svm(ds: Dataset, pos_rows, neg_rows, cfg: TrainConfig,
              use_fast_path: bool = True) -> WeightedClassifier:
    """Asymmetric-cost soft-margin SVM via dual coordinate descent.

    The linear kernel keeps an explicit primal weight vector; the RBF kernel
    (or ``use_fast_path=False``) stores the dual expansion over its support.
    Non-convergence within ``max_iterations`` epochs is a warning, not an
    error, and is flagged in the diagnostics.
    """
    rows, y, cost = assemble_problem(pos_rows, neg_rows, cfg)
    tol = cfg.tolerance if cfg.tolerance is not None else SVM_DEFAULT_TOL
    seed = kernel_seed(cfg.seed)
    if cfg.kernel == "linear" and use_fast_path:
        w_aug, alpha, epochs, violation, converged = kernels.svm_linear_cd(
            ds.indptr, ds.indices, ds.values, rows, y, cost,
            ds.n_features, tol, cfg.max_iterations, seed)
        diag = Diagnostics(int(epochs), float(violation), bool(converged))
        _warn_if_unconverged("svm", diag)
        return WeightedClassifier(
            kind="svm", config=cfg, n_features=ds.n_features,
            bias=float(w_aug[-1]), weights=w_aug[:-1].copy(),
            diagnostics=diag, alpha=alpha)
    alpha, epochs, violation, converged = kernels.svm_kernel_cd(
        ds.indptr, ds.indices, ds.values, rows, y, cost,
        _KERNEL_IDS[cfg.kernel], cfg.rbf_sigma, tol, cfg.max_iterations,
        seed, GRAM_LIMIT)
    diag = Diagnostics(int(epochs), float(violation), bool(converged))
    _warn_if_unconverged("svm", diag)
    signed = alpha * y
    keep = alpha > 0.0
    return WeightedClassifier(
        kind="svm", config=cfg, n_features=ds.n_features,
        bias=float(signed.sum()), support=ds.take(rows[keep]),
        coef=signed[keep].copy(), diagnostics=diag, alpha=alpha)


def train_logit(ds: Dataset, pos_rows, neg_rows, cfg: TrainConfig) -> WeightedClassifier:
    """Class-weighted logistic regression by Newton with Armijo backtracking.

    Minimizes (1/2C)||w||^2 + C+ sum_pos log(1+e^-f) + C- sum_neg log(1+e^f)
    to a gradient infinity norm within tolerance. Linear kernel only; the
    Hessian is dense in the feature dimension.
    """
    if cfg.kernel != "linear":
        raise UnsupportedConfigurationError("logistic regression supports the linear kernel only")
    rows, y, cost = assemble_problem(pos_rows, neg_rows, cfg)
    tol = cfg.tolerance if cfg.tolerance is not None else LOGIT_DEFAULT_TOL
    w_aug, iters, ginf, converged, trace = kernels.logit_newton(
        ds.indptr, ds.indices, ds.values, rows, y, cost,
        1.0 / cfg.c, ds.n_features, tol, cfg.max_iterations)
    diag = Diagnostics(int(iters), float(ginf), bool(converged), np.asarray(trace))
    _warn_if_unconverged("logit", diag)
    return WeightedClassifier(
        kind="logit", config=cfg, n_features=ds.n_features,
        bias=float(w_aug[-1]), weights=w_aug[:-1].copy(), diagnostics=diag)


def decision(clf: WeightedClassifier, ds: Dataset, rows=None) -> np.ndarray:
    """Decision values w.x + b (linear) or sum_i coef_i k(x_i, x) + b."""
    rows = np.arange(ds.n_items, dtype=np.int64) if rows is None \
        else np.asarray(rows, dtype=np.int64)
    if clf.is_linear:
        if ds.n_features > clf.n_features:
            raise DataError("dataset is wider than the classifier's feature space")
        w = clf.weights
        if ds.n_features < clf.n_features:
            w = w[:ds.n_features]
        return kernels.linear_scores(ds.indptr, ds.indices, ds.values, rows, w, clf.bias)
    sup = clf.support
    return kernels.expansion_scores(
        sup.indptr, sup.indices, sup.values,
        np.arange(sup.n_items, dtype=np.int64), clf.coef,
        _KERNEL_IDS[clf.config.kernel], clf.config.rbf_sigma,
        ds.indptr, ds.indices, ds.values, rows) + clf.bias


def svm_kkt_violation(clf: WeightedClassifier, ds: Dataset, pos_rows, neg_rows) -> float:
    """Recompute the max projected-gradient residual of a trained SVM."""
    if clf.kind != "svm" or clf.alpha is None:
        raise DataError("expected a trained SVM with dual coefficients")
    rows, y, cost = assemble_problem(pos_rows, neg_rows, clf.config)
    if clf.is_linear:
        w_aug = np.concatenate([clf.weights, [clf.bias]])
        return float(kernels.svm_linear_violation(
            ds.indptr, ds.indices, ds.values, rows, y, cost, w_aug, clf.alpha))
    return float(kernels.svm_kernel_violation(
        ds.indptr, ds.indices, ds.values, rows, y, cost, clf.alpha,
        _KERNEL_IDS[clf.config.kernel], clf.config.rbf_sigma))


def svm_primal_objective(ds: Dataset, rows, y, cost, weights, bias) -> float:
    margins = y * kernels.linear_scores(
        ds.indptr, ds.indices, ds.values, np.asarray(rows, dtype=np.int64),
        np.asarray(weights, dtype=np.float64), float(bias))
    hinge = np.maximum(0.0, 1.0 - margins)
    return float(0.5 * (weights @ weights + bias * bias) + cost @ hinge)


def svm_dual_objective(ds: Dataset, rows, y, alpha, kernel: str = "linear",
                       rbf_sigma: float = 1.0) -> float:
    rows = np.asarray(rows, dtype=np.int64)
    signed = np.asarray(alpha) * np.asarray(y)
    x = ds.to_dense()[rows]
    if kernel == "linear":
        gram = x @ x.T + 1.0
    else:
        sq = np.sum(x * x, axis=1)
        dist2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (x @ x.T), 0.0)
        gram = np.exp(-dist2 / (2.0 * rbf_sigma ** 2)) + 1.0
    return float(np.sum(alpha) - 0.5 * signed @ gram @ signed)


def logit_objective(ds: Dataset, rows, y, cost, c_total, weights, bias) -> float:
    margins = y * kernels.linear_scores(
        ds.indptr, ds.indices, ds.values, np.asarray(rows, dtype=np.int64),
        np.asarray(weights, dtype=np.float64), float(bias))
    loss = cost @ np.logaddexp(0.0, -margins)
    return float(loss + 0.5 / c_total * (weights @ weights + bias * bias))


def logit_gradient(ds: Dataset, rows, y, cost, c_total, weights, bias) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    margins = y * kernels.linear_scores(
        ds.indptr, ds.indices, ds.values, rows, weights, float(bias))
    sig = np.empty(len(rows))
    posm = margins >= 0
    e = np.exp(-margins[posm])
    sig[posm] = e / (1.0 + e)
    sig[~posm] = 1.0 / (1.0 + np.exp(margins[~posm]))
    r = -cost * sig * y
    g = np.zeros(ds.n_features + 1)
    for i, row in enumerate(rows):
        lo, hi = ds.indptr[row], ds.indptr[row + 1]
        g[ds.indices[lo:hi]] += r[i] * ds.values[lo:hi]
    g[-1] = r.sum()
    g[:-1] += weights / c_total
    g[-1] += bias / c_total
    return g


def _config_to_dict(cfg: TrainConfig) -> dict:
    d = {
        "c": cfg.c,
        "cost_split": list(cfg.cost_split) if isinstance(cfg.cost_split, tuple) else cfg.cost_split,
        "kernel": cfg.kernel,
        "rbf_sigma": cfg.rbf_sigma,
        "tolerance": cfg.tolerance,
        "max_iterations": cfg.max_iterations,
        "bias_mode": cfg.bias_mode,
        "seed": cfg.seed,
    }
    return d


def _config_from_dict(d: dict) -> TrainConfig:
    d = dict(d)
    if isinstance(d.get("cost_split"), list):
        d["cost_split"] = tuple(d["cost_split"])
    return TrainConfig(**d)


def classifier_to_dict(clf: WeightedClassifier) -> dict:
    """JSON-serializable layout: kind, kernel, weights or expansion, bias,
    config, diagnostics."""
    out = {
        "schema_version": 1,
        "kind": clf.kind,
        "n_features": clf.n_features,
        "kernel": ({"type": "rbf", "sigma": clf.config.rbf_sigma}
                   if clf.config.kernel == "rbf" else {"type": "linear"}),
        "bias": clf.bias,
        "linear": None,
        "expansion": None,
        "config": _config_to_dict(clf.config),
        "diagnostics": None,
    }
    if clf.diagnostics is not None:
        out["diagnostics"] = {
            "iterations": clf.diagnostics.iterations,
            "violation": clf.diagnostics.violation,
            "converged": clf.diagnostics.converged,
        }
    if clf.is_linear:
        out["linear"] = {"weights": clf.weights.tolist()}
    else:
        out["expansion"] = {
            "coef": clf.coef.tolist(),
            "support": {
                "indptr": clf.support.indptr.tolist(),
                "indices": clf.support.indices.tolist(),
                "values": clf.support.values.tolist(),
            },
        }
    return out


def classifier_from_dict(d: dict) -> WeightedClassifier:
    if d.get("schema_version") != 1:
        raise ConfigError("unknown classifier schema version")
    cfg = _config_from_dict(d["config"])
    diag = None
    if d.get("diagnostics"):
        diag = Diagnostics(d["diagnostics"]["iterations"],
                           d["diagnostics"]["violation"],
                           d["diagnostics"]["converged"])
    if d["linear"] is not None:
        return WeightedClassifier(
            kind=d["kind"], config=cfg, n_features=d["n_features"],
            bias=d["bias"], weights=np.asarray(d["linear"]["weights"], dtype=np.float64),
            diagnostics=diag)
    exp = d["expansion"]
    support = Dataset(
        np.asarray(exp["support"]["indptr"], dtype=np.int64),
        np.asarray(exp["support"]["indices"], dtype=np.int64),
        np.asarray(exp["support"]["values"], dtype=np.float64),
        d["n_features"])
    return WeightedClassifier(
        kind=d["kind"], config=cfg, n_features=d["n_features"], bias=d["bias"],
        support=support, coef=np.asarray(exp["coef"], dtype=np.float64),
        diagnostics=diag)


def save_classifier(clf: WeightedClassifier, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(classifier_to_dict(clf), fh)


def load_classifier(path) -> WeightedClassifier:
    with open(path, "r", encoding="utf-8") as fh:
        return classifier_from_dict(json.load(fh))
