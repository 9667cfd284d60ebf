"""Experiment harness: seeded sweeps, method comparisons, timing runs.

Each runner consumes an :class:`ExperimentConfig` and appends JSON-lines
records to the output path: a header record with the canonical config and
its hash, then one record per (cell, replicate, method) in fixed iteration
order, then summary records. Every record carries enough provenance (config
hash, derived seed, method id, cell coordinates) to re-run it bit-identically.
Failures in one replicate are recorded and skipped, never fatal.

The parallelism hint never changes output bytes: it only fans out member
training inside one bagging call, and it is excluded from the config hash.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .classifiers import _KERNEL_IDS, TrainConfig, decision
from .data import Dataset, SimConfig, generate_gaussian_pu, load_sparse, make_pu_split
from .errors import ConfigError, DataError
from .evaluation import auc, precision_recall, wilcoxon_paired
from .pu import (
    BaggingConfig,
    bagged_decision,
    bagging_inductive,
    bagging_transductive,
    biased_baseline,
    mean_similarity_baseline,
    speedup_threshold,
)
from .seeding import kernel_seed

SCHEMA_VERSION = 1

EXPERIMENT_KINDS = ("sim_sweep", "k_sweep", "t_sweep", "method_compare", "timing")

DEFAULT_GAMMA_GRID = (0.0, 0.2, 0.4, 0.6, 0.8)
DEFAULT_NP_GRID = (5, 10, 20, 50, 100, 200, 300)


def seed_int(seed: int, *path: int) -> int:
    """Derived 64-bit seed as a plain int (stable across platforms)."""
    return int(kernel_seed(seed, *path))


@dataclass(frozen=True)
class MethodSpec:
    """One method entry: a preset name plus config overrides.

    ``kind`` selects the algorithm family; ``train``/``bagging`` are raw
    override dicts applied onto the per-run TrainConfig/BaggingConfig.
    ``k_scale`` sizes the subsample as round(k_scale * |P|) at split time.
    """

    method_id: str
    kind: str  # bagging | biased | mean_similarity
    base_learner: str = "logit"
    k_scale: float | None = None
    train: dict = field(default_factory=dict)
    bagging: dict = field(default_factory=dict)
    kernel: str = "linear"
    rbf_sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("bagging", "biased", "mean_similarity"):
            raise ConfigError(f"unknown method kind {self.kind!r}")
        if self.base_learner not in ("svm", "logit"):
            raise ConfigError("base_learner must be 'svm' or 'logit'")
        if self.k_scale is not None and not self.k_scale > 0:
            raise ConfigError("k_scale must be positive")

    def to_dict(self) -> dict:
        return {
            "id": self.method_id, "kind": self.kind,
            "base_learner": self.base_learner, "k_scale": self.k_scale,
            "train": dict(self.train), "bagging": dict(self.bagging),
            "kernel": self.kernel, "rbf_sigma": self.rbf_sigma,
        }


def _preset(method_id, kind, **kw):
    return MethodSpec(method_id=method_id, kind=kind, **kw)


METHOD_PRESETS = {
    "bagging_svm": lambda: _preset("bagging_svm", "bagging", base_learner="svm"),
    "bagging_logit": lambda: _preset("bagging_logit", "bagging", base_learner="logit"),
    "bagging1": lambda: _preset("bagging1", "bagging", base_learner="svm", k_scale=1.0),
    "bagging5": lambda: _preset("bagging5", "bagging", base_learner="svm", k_scale=5.0),
    "biased_svm": lambda: _preset("biased_svm", "biased", base_learner="svm"),
    "biased_logit": lambda: _preset("biased_logit", "biased", base_learner="logit"),
    "baseline_similarity": lambda: _preset("baseline_similarity", "mean_similarity"),
}


def method_from_dict(d: dict) -> MethodSpec:
    d = dict(d)
    preset_name = d.pop("preset", None)
    if preset_name is not None and preset_name not in METHOD_PRESETS:
        raise ConfigError(f"unknown preset {preset_name!r}")
    base = METHOD_PRESETS[preset_name]() if preset_name else None
    fields = {
        "method_id": d.pop("id", preset_name),
        "kind": d.pop("kind", base.kind if base else None),
        "base_learner": d.pop("base_learner", base.base_learner if base else "logit"),
        "k_scale": d.pop("k_scale", base.k_scale if base else None),
        "train": d.pop("train", {}),
        "bagging": d.pop("bagging", {}),
        "kernel": d.pop("kernel", base.kernel if base else "linear"),
        "rbf_sigma": d.pop("rbf_sigma", base.rbf_sigma if base else 1.0),
    }
    if d:
        raise ConfigError(f"unknown method keys {sorted(d)}")
    if fields["method_id"] is None or fields["kind"] is None:
        raise ConfigError("method needs an id and a kind (or a preset)")
    return MethodSpec(**fields)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    methods: tuple[MethodSpec, ...]
    source: dict = field(default_factory=lambda: {"type": "synthetic"})
    sim: dict = field(default_factory=dict)  # SimConfig overrides, sans seed
    replicates: int = 1
    seed: int = 0
    output: str | None = None
    gamma_grid: tuple[float, ...] = DEFAULT_GAMMA_GRID
    k_grid: tuple[int | None, ...] = (None,)
    t_grid: tuple[int | None, ...] = (None,)
    np_grid: tuple[int, ...] = DEFAULT_NP_GRID
    parallelism: int = 1

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if not self.methods:
            raise ConfigError("at least one method is required")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        src_type = self.source.get("type")
        if src_type not in ("synthetic", "files"):
            raise ConfigError("source.type must be 'synthetic' or 'files'")
        if src_type == "files":
            tasks = self.source.get("files", [])
            if not tasks:
                raise ConfigError("files source lists no file pairs")
            for entry in tasks:
                for key in ("data", "groups"):
                    p = entry.get(key)
                    if p is not None and not os.path.exists(p):
                        raise ConfigError(f"missing input file: {p}")
        if self.sim:
            SimConfig(**{**self.sim, "seed": 0})  # validate overrides early

    def canonical_dict(self) -> dict:
        """Config identity for hashing: excludes output path and parallelism,
        neither of which may change result bytes."""
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "methods": [m.to_dict() for m in self.methods],
            "source": self.source,
            "sim": self.sim,
            "replicates": self.replicates,
            "seed": self.seed,
            "gamma_grid": list(self.gamma_grid),
            "k_grid": list(self.k_grid),
            "t_grid": list(self.t_grid),
            "np_grid": list(self.np_grid),
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def config_from_dict(d: dict) -> ExperimentConfig:
    d = dict(d)
    version = d.pop("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported config schema version {version}")
    methods = tuple(method_from_dict(m) for m in d.pop("methods", []))
    kw = {}
    for key in ("kind", "source", "sim", "replicates", "seed", "output", "parallelism"):
        if key in d:
            kw[key] = d.pop(key)
    for key in ("gamma_grid", "k_grid", "t_grid", "np_grid"):
        if key in d:
            kw[key] = tuple(d.pop(key))
    if d:
        raise ConfigError(f"unknown config keys {sorted(d)}")
    if "kind" not in kw:
        raise ConfigError("config needs a kind")
    return ExperimentConfig(methods=methods, **kw)


@dataclass(frozen=True)
class TimingRecord:
    """Per-method wall-clock measurement plus the untimed quality scores."""

    method_id: str
    seconds: tuple[float, ...]
    t: int | None
    k: int | None
    n_pos: int
    n_unlabeled: int
    auc: float | None = None
    aupr: float | None = None

    def __post_init__(self):
        if not self.seconds or any(s <= 0 for s in self.seconds):
            raise ConfigError("timing needs positive wall-clock measurements")

    @property
    def seconds_median(self) -> float:
        return float(np.median(self.seconds))

    def to_dict(self) -> dict:
        return {
            "method": self.method_id,
            "seconds_median": self.seconds_median,
            "seconds": list(self.seconds),
            "t": self.t, "k": self.k,
            "n_pos": self.n_pos, "n_unlabeled": self.n_unlabeled,
            "auc": self.auc, "aupr": self.aupr,
        }


class RecordWriter:
    """Single serialized JSONL writer; every record lands as one full line."""

    def __init__(self, path):
        self.records: list[dict] = []
        self._fh = open(path, "w", encoding="utf-8") if path else None

    def write(self, record: dict) -> None:
        self.records.append(record)
        if self._fh is not None:
            self._fh.write(json.dumps(record) + "\n")
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def _similarity_scores(ds, pos_rows, target_ds, target_rows, kernel, sigma):
    coef = np.full(len(pos_rows), 1.0 / len(pos_rows))
    return kernels.expansion_scores(
        ds.indptr, ds.indices, ds.values, np.asarray(pos_rows, np.int64), coef,
        _KERNEL_IDS[kernel], sigma,
        target_ds.indptr, target_ds.indices, target_ds.values,
        np.asarray(target_rows, np.int64))


def _bagging_config(spec: MethodSpec, n_pos: int, k, t, seed: int,
                    parallelism: int) -> BaggingConfig:
    bag_kw = dict(spec.bagging)
    train_kw = dict(spec.train)
    if k is not None:
        bag_kw["subsample_size"] = int(k)
    elif spec.k_scale is not None and "subsample_size" not in bag_kw:
        bag_kw["subsample_size"] = max(1, int(round(spec.k_scale * n_pos)))
    if t is not None:
        bag_kw["n_bootstraps"] = int(t)
    train_kw["seed"] = seed_int(seed, 1)
    return BaggingConfig(
        base_learner=spec.base_learner,
        train=TrainConfig(**train_kw),
        seed=seed_int(seed, 0),
        parallelism=parallelism,
        **bag_kw,
    )


def _train_config(spec: MethodSpec, seed: int) -> TrainConfig:
    train_kw = dict(spec.train)
    train_kw["seed"] = seed_int(seed, 1)
    return TrainConfig(**train_kw)


def _inductive_auc(spec, train_ds, split, test_ds, k, t, seed, parallelism):
    """Train per spec, score the held-out test set, return its AUC."""
    if spec.kind == "bagging":
        bag = bagging_inductive(train_ds, split,
                                _bagging_config(spec, len(split.positives), k, t,
                                                seed, parallelism))
        scores = bagged_decision(bag, test_ds)
    elif spec.kind == "biased":
        clf, _ = biased_baseline(train_ds, split, _train_config(spec, seed),
                                 learner=spec.base_learner)
        scores = decision(clf, test_ds)
    else:
        scores = _similarity_scores(train_ds, split.positives, test_ds,
                                    np.arange(test_ds.n_items), spec.kernel,
                                    spec.rbf_sigma)
    return float(auc(scores, test_ds.truth_labels))


def _transductive_scores(spec, ds, split, k, t, seed, parallelism):
    if spec.kind == "bagging":
        es = bagging_transductive(ds, split,
                                  _bagging_config(spec, len(split.positives), k, t,
                                                  seed, parallelism))
        return es.scores
    if spec.kind == "biased":
        _, scores = biased_baseline(ds, split, _train_config(spec, seed),
                                    learner=spec.base_learner)
        return scores
    return mean_similarity_baseline(ds, split, kernel=spec.kernel,
                                    rbf_sigma=spec.rbf_sigma)


def _sim_config(cfg: ExperimentConfig, gamma: float | None, seed: int) -> SimConfig:
    kw = dict(cfg.sim)
    if gamma is not None:
        kw["contamination"] = gamma
    kw["seed"] = seed
    return SimConfig(**kw)


def _grid_cells(cfg: ExperimentConfig):
    """Fixed cell enumeration for the sweep kinds: gamma-major, then K, then T."""
    cells = []
    for gi, gamma in enumerate(cfg.gamma_grid):
        for ki, k in enumerate(cfg.k_grid):
            for ti, t in enumerate(cfg.t_grid):
                cells.append((len(cells), gi, float(gamma), k, t))
    return cells


def run_sim_sweep(cfg: ExperimentConfig) -> list[dict]:
    """Synthetic grid sweep: AUC on a fresh test set per cell and replicate.

    Datasets depend only on (gamma, replicate), so every method and every
    (K, T) cell sees the same draw, keeping comparisons paired.
    """
    if cfg.source.get("type") != "synthetic":
        raise ConfigError("sweep experiments require the synthetic source")
    writer = RecordWriter(cfg.output)
    chash = cfg.config_hash()
    writer.write({"type": "header", "schema_version": SCHEMA_VERSION,
                  "kind": cfg.kind, "config": cfg.canonical_dict(),
                  "config_hash": chash})
    try:
        cache_key, cache_val = None, None
        for cell, gi, gamma, k, t in _grid_cells(cfg):
            for r in range(cfg.replicates):
                if cache_key != (gi, r):
                    sim = _sim_config(cfg, gamma, seed_int(cfg.seed, 0, gi, r))
                    cache_key, cache_val = (gi, r), generate_gaussian_pu(sim)
                train_ds, split, test_ds = cache_val
                for mi, spec in enumerate(cfg.methods):
                    base = {"type": "result", "config_hash": chash, "cell": cell,
                            "gamma": gamma, "k": k, "t": t, "replicate": r,
                            "method": spec.method_id,
                            "seed": seed_int(cfg.seed, 1, cell, r, mi)}
                    try:
                        base["auc"] = _inductive_auc(
                            spec, train_ds, split, test_ds, k, t,
                            base["seed"], cfg.parallelism)
                    except Exception as exc:  # noqa: BLE001 - recorded, not fatal
                        base["type"] = "error"
                        base["error"] = f"{type(exc).__name__}: {exc}"
                    writer.write(base)
    finally:
        writer.close()
    return writer.records


def run_k_sweep(cfg: ExperimentConfig) -> list[dict]:
    return run_sim_sweep(cfg)


def run_t_sweep(cfg: ExperimentConfig) -> list[dict]:
    return run_sim_sweep(cfg)


def _load_tasks(cfg: ExperimentConfig):
    """Yield (task_id, dataset) for the configured source."""
    src = cfg.source
    if src.get("type") == "synthetic":
        for r in range(cfg.replicates):
            sim = _sim_config(cfg, None, seed_int(cfg.seed, 0, 0, r))
            train_ds, _, _ = generate_gaussian_pu(sim)
            yield f"synthetic/{r}", train_ds
    else:
        for entry in src.get("files", []):
            ds = load_sparse(entry["data"], entry.get("groups"))
            yield entry.get("id", os.path.basename(entry["data"])), ds


def run_method_compare(cfg: ExperimentConfig) -> list[dict]:
    """Transductive comparison over tasks x |P| sizes x replicates.

    Scores each method on hidden truth inside the unlabeled set, then emits
    per-method macro means and pairwise signed-rank tests over the records
    where both methods succeeded.
    """
    writer = RecordWriter(cfg.output)
    chash = cfg.config_hash()
    writer.write({"type": "header", "schema_version": SCHEMA_VERSION,
                  "kind": cfg.kind, "config": cfg.canonical_dict(),
                  "config_hash": chash})
    per_method: dict[str, dict[tuple, float]] = {m.method_id: {} for m in cfg.methods}
    try:
        synthetic = cfg.source.get("type") == "synthetic"
        tasks = list(_load_tasks(cfg))
        for task_i, (task_id, ds) in enumerate(tasks):
            if ds.truth_labels is None:
                writer.write({"type": "skip", "task": task_id,
                              "reason": "no truth labels"})
                continue
            # Synthetic tasks already encode one replicate each.
            reps = 1 if synthetic else cfg.replicates
            for ni, n_pos in enumerate(cfg.np_grid):
                for r in range(reps):
                    split_seed = seed_int(cfg.seed, 2, task_i, ni, r)
                    try:
                        split = make_pu_split(ds, n_pos, split_seed)
                    except DataError as exc:
                        writer.write({"type": "skip", "task": task_id,
                                      "n_pos": n_pos, "replicate": r,
                                      "reason": str(exc)})
                        continue
                    truth = ds.truth_labels[split.unlabeled]
                    known = truth != 0
                    if known.sum() == 0 or len(set(truth[known].tolist())) < 2:
                        writer.write({"type": "skip", "task": task_id,
                                      "n_pos": n_pos, "replicate": r,
                                      "reason": "unlabeled truth not two-class"})
                        continue
                    for mi, spec in enumerate(cfg.methods):
                        rec = {"type": "result", "config_hash": chash,
                               "task": task_id, "n_pos": n_pos, "replicate": r,
                               "method": spec.method_id,
                               "seed": seed_int(cfg.seed, 3, task_i, ni, r, mi)}
                        try:
                            scores = _transductive_scores(
                                spec, ds, split, None, None, rec["seed"],
                                cfg.parallelism)
                            rec["auc"] = float(auc(scores[known], truth[known]))
                            per_method[spec.method_id][(task_i, ni, r)] = rec["auc"]
                        except Exception as exc:  # noqa: BLE001
                            rec["type"] = "error"
                            rec["error"] = f"{type(exc).__name__}: {exc}"
                        writer.write(rec)
        for spec in cfg.methods:
            vals = per_method[spec.method_id]
            writer.write({"type": "summary", "method": spec.method_id,
                          "n_results": len(vals),
                          "macro_auc": float(np.mean(list(vals.values())))
                          if vals else None})
        for i, a in enumerate(cfg.methods):
            for b in cfg.methods[i + 1:]:
                keys = sorted(set(per_method[a.method_id]) & set(per_method[b.method_id]))
                rec = {"type": "wilcoxon", "method_a": a.method_id,
                       "method_b": b.method_id, "n_pairs": len(keys)}
                try:
                    res = wilcoxon_paired(
                        [per_method[a.method_id][k] for k in keys],
                        [per_method[b.method_id][k] for k in keys])
                    rec.update(statistic=res.statistic, p_value=res.p_value,
                               n_used=res.n_used)
                except DataError as exc:
                    rec["skipped"] = str(exc)
                writer.write(rec)
    finally:
        writer.close()
    return writer.records


def _timing_dataset(cfg: ExperimentConfig):
    src = cfg.source
    if src.get("type") == "synthetic":
        sim = _sim_config(cfg, None, seed_int(cfg.seed, 0))
        return generate_gaussian_pu(sim)
    entry = src["files"][0]
    ds = load_sparse(entry["data"], entry.get("groups"))
    if ds.truth_labels is None:
        raise ConfigError("timing on files requires labeled data")
    pos = np.flatnonzero(ds.truth_labels == 1)
    rest = np.flatnonzero(ds.truth_labels != 1)
    from .data import PUSplit
    return ds, PUSplit(pos, rest, ds.n_items), None


def run_timing(cfg: ExperimentConfig) -> list[dict]:
    """Median train-only wall time per method, plus the predicted ratio
    thresholds at alpha in {2, 3}. Scoring quality is reported untimed."""
    writer = RecordWriter(cfg.output)
    chash = cfg.config_hash()
    writer.write({"type": "header", "schema_version": SCHEMA_VERSION,
                  "kind": cfg.kind, "config": cfg.canonical_dict(),
                  "config_hash": chash})
    try:
        train_ds, split, test_ds = _timing_dataset(cfg)
        n_pos, n_unl = len(split.positives), len(split.unlabeled)
        for mi, spec in enumerate(cfg.methods):
            seed = seed_int(cfg.seed, 4, mi)
            seconds = []
            trained = None
            for r in range(cfg.replicates):
                t0 = time.monotonic()
                if spec.kind == "bagging":
                    bcfg = _bagging_config(spec, n_pos, None, None, seed,
                                           cfg.parallelism)
                    trained = bagging_inductive(train_ds, split, bcfg)
                    k_used, t_used = bcfg.resolve(n_pos, n_unl)
                elif spec.kind == "biased":
                    trained, _ = biased_baseline(train_ds, split,
                                                 _train_config(spec, seed),
                                                 learner=spec.base_learner)
                    k_used, t_used = n_unl, 1
                else:
                    mean_similarity_baseline(train_ds, split, kernel=spec.kernel,
                                             rbf_sigma=spec.rbf_sigma)
                    k_used, t_used = None, None
                seconds.append(time.monotonic() - t0)
            auc_val = aupr_val = None
            if test_ds is not None and test_ds.truth_labels is not None:
                if spec.kind == "bagging":
                    scores = bagged_decision(trained, test_ds)
                elif spec.kind == "biased":
                    scores = decision(trained, test_ds)
                else:
                    scores = _similarity_scores(train_ds, split.positives, test_ds,
                                                np.arange(test_ds.n_items),
                                                spec.kernel, spec.rbf_sigma)
                auc_val = float(auc(scores, test_ds.truth_labels))
                _, _, _, aupr_val = precision_recall(scores, test_ds.truth_labels)
            rec = TimingRecord(spec.method_id, tuple(float(s) for s in seconds),
                               t_used, k_used, n_pos, n_unl, auc_val, aupr_val)
            writer.write({"type": "timing", "config_hash": chash,
                          **rec.to_dict()})
        t_ref = None
        for spec in cfg.methods:
            if spec.kind == "bagging":
                t_ref = _bagging_config(spec, n_pos, None, None, 0, 1) \
                    .resolve(n_pos, n_unl)[1]
                break
        if t_ref is not None:
            writer.write({"type": "thresholds", "t": t_ref,
                          "ratio": n_unl / n_pos,
                          "alpha_2": speedup_threshold(t_ref, 2),
                          "alpha_3": speedup_threshold(t_ref, 3)})
    finally:
        writer.close()
    return writer.records


def run_score(ds: Dataset, split, method: MethodSpec, seed: int,
              parallelism: int = 1) -> np.ndarray:
    """One-shot transductive scoring used by the CLI score verb."""
    return _transductive_scores(method, ds, split, None, None,
                                seed_int(seed, 5), parallelism)


RUNNERS = {
    "sim_sweep": run_sim_sweep,
    "k_sweep": run_k_sweep,
    "t_sweep": run_t_sweep,
    "method_compare": run_method_compare,
    "timing": run_timing,
}


def run_experiment(cfg: ExperimentConfig) -> list[dict]:
    return RUNNERS[cfg.kind](cfg)
