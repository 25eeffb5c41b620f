"""Experiment configuration, training loop, metrics, and grid sweeps."""
from __future__ import annotations

import configparser
import csv
import hashlib
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .ansaetze import AnsatzSpec
from .data import load_dataset
from .encodings import EncodingSpec
from .gradients import AdamConfig, AdamState, adam_step, cross_entropy
from .measurements import predict_class
from .models import Model, ModelConfig, build_model, save_checkpoint


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    model: ModelConfig
    dataset_path: str
    split_fraction: float = 0.8
    batch_size: int = 16
    epochs: int = 30
    patience: int = 10
    learning_rate: float = 0.01
    seed: int = 0
    metrics_out_path: str | None = None
    checkpoint_path: str | None = None

    def __post_init__(self):
        if not 0.0 < self.split_fraction < 1.0:
            raise ConfigError("split_fraction must be in (0, 1)")
        if self.patience > self.epochs:
            raise ConfigError("patience must not exceed epochs")
        if self.batch_size < 1 or self.epochs < 1 or self.patience < 1:
            raise ConfigError("batch_size, epochs, patience must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")


@dataclass
class MetricsRecord:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float
    precision: float
    recall: float
    f1: float
    wall_seconds: float

    def __post_init__(self):
        for a in (self.train_acc, self.val_acc):
            if not 0.0 <= a <= 1.0:
                raise ValueError("accuracy out of [0, 1]")


FIELDS = ["epoch", "train_loss", "train_acc", "val_loss", "val_acc",
          "precision", "recall", "f1", "wall_seconds"]


def confusion_matrix(true: np.ndarray, pred: np.ndarray,
                     k: int) -> np.ndarray:
    m = np.zeros((k, k), dtype=np.int64)
    np.add.at(m, (true, pred), 1)
    return m


def macro_metrics(cm: np.ndarray) -> tuple[float, float, float, float]:
    """(accuracy, precision, recall, macro-F1); empty classes count as 0."""
    tp = np.diag(cm).astype(np.float64)
    pred_tot = cm.sum(axis=0).astype(np.float64)
    true_tot = cm.sum(axis=1).astype(np.float64)
    prec = np.divide(tp, pred_tot, out=np.zeros_like(tp),
                     where=pred_tot > 0)
    rec = np.divide(tp, true_tot, out=np.zeros_like(tp), where=true_tot > 0)
    denom = prec + rec
    f1 = np.divide(2 * prec * rec, denom, out=np.zeros_like(tp),
                   where=denom > 0)
    acc = tp.sum() / cm.sum()
    return float(acc), float(prec.mean()), float(rec.mean()), float(f1.mean())


def _evaluate(model: Model, images: np.ndarray, labels: np.ndarray
              ) -> tuple[float, np.ndarray]:
    k = model.config.class_count
    losses = np.empty(labels.size)
    preds = np.empty(labels.size, dtype=np.int64)
    for i in range(labels.size):
        scores = model.forward(images[i])[:k]
        losses[i], _ = cross_entropy(
            scores, int(labels[i]),
            probabilities=model.scores_are_probabilities)
        preds[i] = predict_class(scores)
    return float(losses.mean()), preds


def train(config: ExperimentConfig) -> list[MetricsRecord]:
    """Adam training with early stopping on validation loss.

    Writes per-epoch rows to the metrics CSV and checkpoints the
    best-validation parameters. Byte-deterministic under (config, seed)
    except for the wall_seconds column.
    """
    train_set, val_set = load_dataset(
        config.dataset_path, config.model.image_shape,
        config.model.class_count, config.seed, config.split_fraction)
    model = build_model(config.model)
    k = config.model.class_count
    params = model.get_params()
    adam_cfg = AdamConfig(learning_rate=config.learning_rate)
    adam = AdamState.zeros(params.size)
    shuffle_rng = np.random.default_rng(config.seed)

    writer = None
    fh = None
    if config.metrics_out_path:
        fh = open(config.metrics_out_path, "w", newline="")
        writer = csv.writer(fh)
        writer.writerow(FIELDS)

    records: list[MetricsRecord] = []
    best_val = np.inf
    best_epoch = -1
    t0 = time.monotonic()
    try:
        for epoch in range(config.epochs):
            order = shuffle_rng.permutation(len(train_set))
            epoch_losses = []
            epoch_hits = 0
            for start in range(0, order.size, config.batch_size):
                batch = order[start:start + config.batch_size]
                model.zero_grads()
                for i in batch:
                    scores = model.forward(train_set.images[i])[:k]
                    loss, d_scores = cross_entropy(
                        scores, int(train_set.labels[i]),
                        probabilities=model.scores_are_probabilities)
                    model.backward(d_scores)
                    epoch_losses.append(loss)
                    epoch_hits += predict_class(scores) \
                        == train_set.labels[i]
                grads = model.get_grads() / batch.size
                params, adam = adam_step(params, grads, adam, adam_cfg)
                model.set_params(params)

            val_loss, preds = _evaluate(model, val_set.images,
                                        val_set.labels)
            cm = confusion_matrix(val_set.labels, preds, k)
            val_acc, prec, rec, f1 = macro_metrics(cm)
            rec_row = MetricsRecord(
                epoch=epoch,
                train_loss=float(np.mean(epoch_losses)),
                train_acc=float(epoch_hits / order.size),
                val_loss=val_loss, val_acc=val_acc,
                precision=prec, recall=rec, f1=f1,
                wall_seconds=time.monotonic() - t0)
            records.append(rec_row)
            if writer is not None:
                writer.writerow(_format_row(rec_row))
                fh.flush()
            if val_loss < best_val:
                best_val = val_loss
                best_epoch = epoch
                if config.checkpoint_path:
                    save_checkpoint(config.checkpoint_path, config.model,
                                    params)
            if epoch - best_epoch >= config.patience:
                break
    finally:
        if fh is not None:
            fh.close()
    return records


def _format_row(rec: MetricsRecord) -> list[str]:
    return [str(rec.epoch)] + [f"{getattr(rec, f):.12g}"
                               for f in FIELDS[1:]]


# ---------------------------------------------------------------------------
# INI configuration

_MODEL_KEYS = {"arch", "image_shape", "class_count", "seed",
               "measurement_kind", "qubits_per_circuit", "qks", "fc_depth"}
_ENCODING_KEYS = {"kind", "layers", "ordering", "ordering_seed"}
_ANSATZ_KEYS = {"kind", "layers", "seed", "qcnn_conv_pool_layers",
                "qcnn_fc_depth"}
_DATA_KEYS = {"path", "split_fraction"}
_TRAIN_KEYS = {"batch_size", "epochs", "patience", "learning_rate", "seed",
               "metrics_out", "checkpoint"}
_SWEEP_KEYS = {"encodings", "ansaetze", "measurements", "seeds"}
_SECTIONS = {"model": _MODEL_KEYS, "encoding": _ENCODING_KEYS,
             "ansatz": _ANSATZ_KEYS, "data": _DATA_KEYS,
             "train": _TRAIN_KEYS, "sweep": _SWEEP_KEYS}


def _parse_shape(text: str) -> tuple[int, int, int]:
    parts = text.lower().replace("x", " ").split()
    if len(parts) != 3:
        raise ConfigError(f"image_shape must be HxWxC, got {text!r}")
    return tuple(int(p) for p in parts)


def parse_experiment_config(path: str) -> ExperimentConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _SECTIONS[section]:
                raise ConfigError(
                    f"unknown key {key!r} in section [{section}]")
    if "model" not in parser or "data" not in parser:
        raise ConfigError("config needs [model] and [data] sections")

    m = parser["model"]
    try:
        encoding = None
        if "encoding" in parser:
            e = parser["encoding"]
            encoding = EncodingSpec(
                e.get("kind", "angle_x"),
                e.getint("layers", 1),
                e.get("ordering", "flatten"),
                e.getint("ordering_seed") if "ordering_seed" in e else None)
        ansatz = None
        if "ansatz" in parser:
            a = parser["ansatz"]
            ansatz = AnsatzSpec(
                a.get("kind", "ring"),
                layers=a.getint("layers", 1),
                seed=a.getint("seed", 0),
                qcnn_conv_pool_layers=a.getint("qcnn_conv_pool_layers", 2),
                qcnn_fc_depth=a.get("qcnn_fc_depth", "shallow"))
        model = ModelConfig(
            arch=m.get("arch"),
            image_shape=_parse_shape(m.get("image_shape", "16x16x3")),
            class_count=m.getint("class_count", 4),
            seed=m.getint("seed", 0),
            encoding=encoding,
            ansatz=ansatz,
            measurement_kind=m.get("measurement_kind", "pauli_z"),
            qubits_per_circuit=m.getint("qubits_per_circuit", 8),
            qks=m.getint("qks", 2),
            fc_depth=m.get("fc_depth", "shallow"))
        d = parser["data"]
        t = parser["train"] if "train" in parser else {}
        t_get = parser["train"] if "train" in parser else None

        def tval(key, conv, default):
            if t_get is None or key not in t_get:
                return default
            return conv(t_get.get(key))

        return ExperimentConfig(
            model=model,
            dataset_path=d.get("path"),
            split_fraction=d.getfloat("split_fraction", 0.8),
            batch_size=tval("batch_size", int, 16),
            epochs=tval("epochs", int, 30),
            patience=tval("patience", int, 10),
            learning_rate=tval("learning_rate", float, 0.01),
            seed=tval("seed", int, 0),
            metrics_out_path=tval("metrics_out", str, None),
            checkpoint_path=tval("checkpoint", str, None))
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc


# ---------------------------------------------------------------------------
# sweep

SWEEP_FIELDS = ["config_id", "arch", "encoding", "ansatz", "measurement",
                "seed", "status", "best_val_acc", "param_count",
                "wall_seconds"]


def config_id(config: ExperimentConfig) -> str:
    return hashlib.sha256(repr(config).encode()).hexdigest()[:12]


def _run_one(config: ExperimentConfig) -> dict:
    row = {
        "config_id": config_id(config),
        "arch": config.model.arch,
        "encoding": config.model.encoding.kind
        if config.model.encoding else "",
        "ansatz": config.model.ansatz.kind if config.model.ansatz else "",
        "measurement": config.model.measurement_kind,
        "seed": config.seed,
    }
    t0 = time.monotonic()
    try:
        records = train(config)
        row["status"] = "ok"
        row["best_val_acc"] = f"{max(r.val_acc for r in records):.12g}"
        row["param_count"] = build_model(config.model).parameter_count
    except Exception as exc:  # noqa: BLE001 - error rows keep the sweep alive
        row["status"] = "error"
        row["best_val_acc"] = ""
        row["param_count"] = ""
        row["error"] = str(exc)
    row["wall_seconds"] = f"{time.monotonic() - t0:.3f}"
    return row


def sweep(grid: list[ExperimentConfig], out_path: str,
          workers: int = 1) -> list[dict]:
    """Run a config grid, one summary row each; resumable by config_id."""
    if not grid:
        raise ConfigError("sweep grid is empty")
    done = set()
    rows: list[dict] = []
    if os.path.exists(out_path):
        with open(out_path, newline="") as fh:
            for row in csv.DictReader(fh):
                done.add(row["config_id"])
                rows.append(row)
    pending = [c for c in grid if config_id(c) not in done]
    new_file = not os.path.exists(out_path)
    with open(out_path, "a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_FIELDS,
                                extrasaction="ignore")
        if new_file:
            writer.writeheader()
        if workers <= 1:
            results = map(_run_one, pending)
        else:
            pool = ThreadPoolExecutor(max_workers=workers)
            results = pool.map(_run_one, pending)
        for row in results:
            writer.writerow(row)
            fh.flush()
            rows.append(row)
        if workers > 1:
            pool.shutdown()
    return rows
