"""Benchmark command-line interface.

Exit codes: 0 success, 2 configuration error, 3 run error.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import os
import sys

import numpy as np

from .ansaetze import AnsatzSpec
from .data import IngestionError, load_dataset, synth_dataset
from .encodings import EncodingSpec, verify_kernel_locality
from .expressibility import estimate_frame_potential
from .gradients import cross_entropy
from .measurements import predict_class
from .models import build_model, load_checkpoint
from .train import (ConfigError, ExperimentConfig, confusion_matrix,
                    macro_metrics, parse_experiment_config, sweep, train)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUN = 3


def _default_workers() -> int:
    return int(os.environ.get("QPQC_WORKERS", "1"))


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qpqc", description="quantum-circuit classifier benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=False):
        if config:
            p.add_argument("--config", required=True, help="INI config path")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output path")
        p.add_argument("--workers", type=int, default=_default_workers())

    p = sub.add_parser("synth-data", help="generate a synthetic dataset")
    common(p)
    p.add_argument("--shape", default="16x16x3", help="HxWxC")
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--per-class", type=int, default=125)

    p = sub.add_parser("train", help="train one configuration")
    common(p, config=True)

    p = sub.add_parser("sweep", help="run a configuration grid")
    common(p, config=True)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    common(p, config=True)

    p = sub.add_parser("verify-appendix-a",
                       help="check two-qubit kernel mixing groups")
    common(p)

    p = sub.add_parser("expressibility",
                       help="frame-potential estimates for QAOA encodings")
    common(p)
    p.add_argument("--pairs", type=int, default=5000)

    p = sub.add_parser("param-count",
                       help="report trainable parameter count")
    common(p, config=True)
    return parser


def _parse_shape(text: str) -> tuple[int, int, int]:
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise ConfigError(f"shape must be HxWxC, got {text!r}")
    return tuple(int(p) for p in parts)


def _load_config(args) -> ExperimentConfig:
    config = parse_experiment_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.out is not None and args.command == "train":
        config.metrics_out_path = args.out
    return config


def _cmd_synth_data(args) -> int:
    if args.out is None:
        raise ConfigError("synth-data requires --out")
    manifest = synth_dataset(args.out, _parse_shape(args.shape),
                             args.classes, args.per_class,
                             args.seed if args.seed is not None else 0)
    print(manifest)
    return EXIT_OK


def _cmd_train(args) -> int:
    config = _load_config(args)
    records = train(config)
    best = max(r.val_acc for r in records)
    print(f"epochs={len(records)} best_val_acc={best:.4f}")
    return EXIT_OK


def _sweep_grid(args) -> list[ExperimentConfig]:
    import configparser
    base = parse_experiment_config(args.config)
    parser = configparser.ConfigParser()
    parser.read(args.config)
    if "sweep" not in parser:
        return [base]
    allowed = {"encodings", "ansaetze", "measurements", "seeds"}
    section = parser["sweep"]
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in section [sweep]")

    def split(key, fallback):
        if key not in section:
            return fallback
        return [v.strip() for v in section.get(key).split(",") if v.strip()]

    encodings = split("encodings", [base.model.encoding.kind
                                    if base.model.encoding else "angle_x"])
    ansaetze = split("ansaetze", [base.model.ansatz.kind
                                  if base.model.ansatz else "ring"])
    measurements = split("measurements", [base.model.measurement_kind])
    seeds = [int(s) for s in split("seeds", [str(base.seed)])]
    grid = []
    for enc, ans, meas, seed in itertools.product(
            encodings, ansaetze, measurements, seeds):
        e_base = base.model.encoding or EncodingSpec("angle_x")
        a_base = base.model.ansatz or AnsatzSpec("ring")
        from dataclasses import replace
        model = replace(base.model,
                        encoding=replace(e_base, kind=enc),
                        ansatz=replace(a_base, kind=ans),
                        measurement_kind=meas)
        grid.append(replace(base, model=model, seed=seed,
                            metrics_out_path=None, checkpoint_path=None))
    return grid


def _cmd_sweep(args) -> int:
    if args.out is None:
        raise ConfigError("sweep requires --out")
    grid = _sweep_grid(args)
    rows = sweep(grid, args.out, workers=args.workers)
    errors = sum(1 for r in rows if r["status"] == "error")
    print(f"rows={len(rows)} errors={errors}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    config = _load_config(args)
    if not config.checkpoint_path:
        raise ConfigError("eval needs a checkpoint path in [train]")
    model = build_model(config.model)
    model.set_params(load_checkpoint(config.checkpoint_path, config.model))
    _, val_set = load_dataset(config.dataset_path, config.model.image_shape,
                              config.model.class_count, config.seed,
                              config.split_fraction)
    k = config.model.class_count
    losses, preds = [], []
    for i in range(len(val_set)):
        scores = model.forward(val_set.images[i])[:k]
        losses.append(cross_entropy(
            scores, int(val_set.labels[i]),
            probabilities=model.scores_are_probabilities)[0])
        preds.append(predict_class(scores))
    cm = confusion_matrix(val_set.labels, np.asarray(preds), k)
    acc, prec, rec, f1 = macro_metrics(cm)
    print(f"val_loss={np.mean(losses):.6f} val_acc={acc:.4f} "
          f"precision={prec:.4f} recall={rec:.4f} f1={f1:.4f}")
    return EXIT_OK


def _cmd_verify_appendix_a(args) -> int:
    seed = args.seed if args.seed is not None else 0
    rows = []
    ok = True
    for n in range(3, 9):
        for p in range(n - 1):
            report = verify_kernel_locality(p, n, trials=10, seed=seed)
            rows.append((p, n, report.max_off_group, report.passed))
            ok = ok and report.passed
    for p, n, worst, passed in rows:
        print(f"p={p} n={n} max_off_group={worst:.3e} "
              f"{'ok' if passed else 'FAIL'}")
    if not ok:
        print("kernel locality verification failed", file=sys.stderr)
        return EXIT_RUN
    return EXIT_OK


def _cmd_expressibility(args) -> int:
    seed = args.seed if args.seed is not None else 0
    rows = []
    for kind in ("qaoa_x", "qaoa_y", "qaoa_z"):
        for n in (4, 8):
            for t in (1, 2):
                est = estimate_frame_potential(
                    EncodingSpec(kind), n, t, args.pairs, seed)
                rows.append([kind, n, t, f"{est.mean:.8g}",
                             f"{est.std_error:.8g}", f"{est.ratio:.6g}"])
    header = ["variant", "n_qubits", "t", "mean", "std_error", "ratio"]
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
    else:
        print(",".join(header))
        for row in rows:
            print(",".join(str(v) for v in row))
    return EXIT_OK


def _cmd_param_count(args) -> int:
    config = _load_config(args)
    model = build_model(config.model)
    print(model.parameter_count)
    return EXIT_OK


COMMANDS = {
    "synth-data": _cmd_synth_data,
    "train": _cmd_train,
    "sweep": _cmd_sweep,
    "eval": _cmd_eval,
    "verify-appendix-a": _cmd_verify_appendix_a,
    "expressibility": _cmd_expressibility,
    "param-count": _cmd_param_count,
}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, IngestionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - contract: run errors exit 3
        print(f"run error: {exc}", file=sys.stderr)
        return EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())
