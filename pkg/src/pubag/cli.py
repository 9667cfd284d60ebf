"""Command-line experiment runner.

Verbs map onto the experiment kinds (``sim-sweep``, ``k-sweep``, ``t-sweep``,
``compare``, ``timing``) plus ``score`` for one-shot transductive scoring of
a positive/unlabeled file pair. Every verb accepts ``--config`` with a JSON
experiment config; flags override individual config fields. Failures print a
single machine-readable JSON object to stderr and exit nonzero (2 for
config or input problems, 1 for anything else).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .data import PUSplit, concat_datasets, load_sparse
from .errors import ConfigError, DataError, Error
from .experiments import (
    METHOD_PRESETS,
    config_from_dict,
    method_from_dict,
    run_experiment,
    run_score,
    seed_int,
)
from .pu import bagging_transductive

_VERB_KINDS = {
    "sim-sweep": "sim_sweep",
    "k-sweep": "k_sweep",
    "t-sweep": "t_sweep",
    "compare": "method_compare",
    "timing": "timing",
}

_DEFAULT_METHODS = {
    "sim_sweep": ["bagging_logit", "biased_logit"],
    "k_sweep": ["bagging_logit"],
    "t_sweep": ["bagging_logit"],
    "method_compare": ["bagging1", "biased_svm", "baseline_similarity"],
    # Timing defaults use the kernel solver, whose superlinear cost is the
    # regime where subsample bagging beats one full-set run.
    "timing": [
        {"preset": "bagging_svm", "train": {"kernel": "rbf", "rbf_sigma": 8.0}},
        {"preset": "biased_svm", "train": {"kernel": "rbf", "rbf_sigma": 8.0}},
    ],
}


def _csv_floats(text):
    return [float(v) for v in text.split(",") if v != ""]


def _csv_ints(text):
    return [int(v) for v in text.split(",") if v != ""]


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment config file")
    p.add_argument("--seed", type=int, help="top-level seed override")
    p.add_argument("--output", help="JSONL output path override")
    p.add_argument("--replicates", type=int, help="replicate count override")
    p.add_argument("--parallelism", type=int,
                   help="worker threads for member training (never changes results)")
    p.add_argument("--gamma-grid", type=_csv_floats, metavar="G1,G2,...",
                   help="contamination grid override")
    p.add_argument("--k-grid", type=_csv_ints, metavar="K1,K2,...",
                   help="subsample size grid override")
    p.add_argument("--t-grid", type=_csv_ints, metavar="T1,T2,...",
                   help="bootstrap count grid override")
    p.add_argument("--np-grid", type=_csv_ints, metavar="N1,N2,...",
                   help="known-positive count grid override (compare)")
    p.add_argument("--method", action="append", dest="methods",
                   metavar="PRESET", choices=sorted(METHOD_PRESETS),
                   help="method preset; repeat for several (overrides config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pubag",
        description="Bagged positive-unlabeled learning experiments.")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, kind in _VERB_KINDS.items():
        p = sub.add_parser(verb, help=f"run a {kind} experiment")
        _add_experiment_flags(p)
        p.set_defaults(kind=kind)
    p = sub.add_parser("score", help="transductively score unlabeled items")
    p.add_argument("--data", help="one sparse file; +1 rows are the positives")
    p.add_argument("--positives", help="sparse file of positive items")
    p.add_argument("--unlabeled", help="sparse file of unlabeled items")
    p.add_argument("--method", default="bagging_svm",
                   choices=sorted(METHOD_PRESETS))
    p.add_argument("--c", type=float, help="total misclassification cost")
    p.add_argument("--k", type=int, help="subsample size")
    p.add_argument("--t", type=int, help="bootstrap count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--output", help="JSONL output path (default: stdout)")
    return parser


def _experiment_config(args):
    cfg = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise ConfigError("config file must hold a JSON object")
    cfg["kind"] = args.kind  # the verb decides the experiment kind
    for flag, key in (("seed", "seed"), ("output", "output"),
                      ("replicates", "replicates"),
                      ("parallelism", "parallelism"),
                      ("gamma_grid", "gamma_grid"), ("k_grid", "k_grid"),
                      ("t_grid", "t_grid"), ("np_grid", "np_grid")):
        value = getattr(args, flag, None)
        if value is not None:
            cfg[key] = value
    if args.methods:
        cfg["methods"] = [{"preset": name} for name in args.methods]
    elif not cfg.get("methods"):
        cfg["methods"] = [m if isinstance(m, dict) else {"preset": m}
                          for m in _DEFAULT_METHODS[args.kind]]
    return config_from_dict(cfg)


def _score_inputs(args):
    if args.data and (args.positives or args.unlabeled):
        raise ConfigError("give either --data or --positives/--unlabeled, not both")
    if args.data:
        ds = load_sparse(args.data)
        if ds.truth_labels is None:
            raise DataError("--data file labels no positives (+1)")
        pos = np.flatnonzero(ds.truth_labels == 1)
        unl = np.flatnonzero(ds.truth_labels != 1)
        if len(pos) == 0 or len(unl) == 0:
            raise DataError("--data file needs +1 rows and non-positive rows")
        return ds, PUSplit(pos, unl, ds.n_items)
    if not (args.positives and args.unlabeled):
        raise ConfigError("score needs --data or both --positives and --unlabeled")
    ds_p = load_sparse(args.positives)
    ds_u = load_sparse(args.unlabeled)
    ds = concat_datasets(ds_p, ds_u)
    return ds, PUSplit(np.arange(ds_p.n_items, dtype=np.int64),
                       np.arange(ds_p.n_items, ds.n_items, dtype=np.int64),
                       ds.n_items)


def _cmd_score(args) -> int:
    ds, split = _score_inputs(args)
    spec_dict = {"preset": args.method}
    if args.c is not None:
        spec_dict["train"] = {"c": args.c}
    bag_over = {}
    if args.k is not None:
        bag_over["subsample_size"] = args.k
    if args.t is not None:
        bag_over["n_bootstraps"] = args.t
    if bag_over:
        spec_dict["bagging"] = bag_over
    spec = method_from_dict(spec_dict)
    if spec.kind == "bagging":
        from .experiments import _bagging_config
        es = bagging_transductive(
            ds, split, _bagging_config(spec, len(split.positives), None, None,
                                       seed_int(args.seed, 5), args.parallelism))
        records = [{"item": int(es.items[i]), "score": float(es.scores[i]),
                    "n": int(es.n[i]), "flagged": bool(es.flagged[i])}
                   for i in range(len(es.items))]
    else:
        scores = run_score(ds, split, spec, args.seed, args.parallelism)
        records = [{"item": int(it), "score": float(s)}
                   for it, s in zip(split.unlabeled, scores)]
    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        for rec in records:
            out.write(json.dumps(rec) + "\n")
    finally:
        if args.output:
            out.close()
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "score":
            return _cmd_score(args)
        run_experiment(_experiment_config(args))
        return 0
    except (Error, FileNotFoundError, json.JSONDecodeError, KeyError, TypeError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort machine-readable error
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
