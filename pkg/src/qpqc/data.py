"""Dataset plumbing: a tiny raw-tensor image format, a deterministic
synthetic texture generator, and stratified ingestion.

On-disk layout is a manifest CSV (`filename,label`) next to one file per
image: 16-byte header (magic "QIMG", u32 H, W, C little-endian) followed
by H*W*C little-endian float32 pixels in (H, W, C) order.
"""
from __future__ import annotations

import csv
import os
import struct
from dataclasses import dataclass

import numpy as np

QIMG_MAGIC = b"QIMG"
HEADER = struct.Struct("<4sIII")


class IngestionError(ValueError):
    pass


def write_qimg(path: str, image: np.ndarray) -> None:
    """image is (H, W, C) float."""
    h, w, c = image.shape
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(QIMG_MAGIC, h, w, c))
        fh.write(np.asarray(image, dtype="<f4").tobytes())


def read_qimg(path: str) -> np.ndarray:
    name = os.path.basename(path)
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IngestionError(f"cannot read tensor {name}: {exc}") from exc
    if len(raw) < HEADER.size:
        raise IngestionError(f"corrupt tensor {name}: truncated header")
    magic, h, w, c = HEADER.unpack_from(raw)
    if magic != QIMG_MAGIC:
        raise IngestionError(f"corrupt tensor {name}: bad magic")
    body = raw[HEADER.size:]
    if len(body) != h * w * c * 4:
        raise IngestionError(f"corrupt tensor {name}: expected "
                             f"{h * w * c} pixels")
    return np.frombuffer(body, dtype="<f4").reshape(h, w, c).astype(
        np.float64)


# ---------------------------------------------------------------------------
# synthetic texture families

def _grid(h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    return np.meshgrid(np.arange(h), np.arange(w), indexing="ij")


def _texture(family: int, h: int, w: int,
             rng: np.random.Generator) -> np.ndarray:
    r, c = _grid(h, w)
    freq = 3
    # small phase jitter keeps class means informative (a linear probe on
    # raw pixels must stay above 0.8)
    phase = rng.uniform(0.0, 0.6)
    if family == 0:     # horizontal stripes
        base = np.sin(2 * np.pi * freq * r / h + phase)
    elif family == 1:   # vertical stripes
        base = np.sin(2 * np.pi * freq * c / w + phase)
    elif family == 2:   # checkerboard
        base = np.sin(2 * np.pi * freq * r / h + phase) \
            * np.sin(2 * np.pi * freq * c / w + phase)
    elif family == 3:   # centered blob
        rr = (r - h / 2 + rng.uniform(-1, 1)) ** 2 \
            + (c - w / 2 + rng.uniform(-1, 1)) ** 2
        base = 2.0 * np.exp(-rr / (2 * (h / 4) ** 2)) - 1.0
    elif family == 4:   # rising diagonal stripes
        base = np.sin(2 * np.pi * freq * (r + c) / (h + w) + phase)
    elif family == 5:   # falling diagonal stripes
        base = np.sin(2 * np.pi * freq * (r - c) / (h + w) + phase)
    elif family == 6:   # concentric rings
        rr = np.sqrt((r - h / 2) ** 2 + (c - w / 2) ** 2)
        base = np.sin(2 * np.pi * freq * rr / h + phase)
    elif family == 7:   # dot lattice
        base = np.sin(2 * np.pi * freq * r / h + phase) \
            + np.sin(2 * np.pi * freq * c / w + phase) - 1.0
    elif family == 8:   # linear ramp, jittered direction
        ang = rng.uniform(-0.3, 0.3)
        base = 2.0 * (np.cos(ang) * c / w + np.sin(ang) * r / h) - 1.0
    elif family == 9:   # quadrant blocks
        base = np.where(r < h / 2,
                        np.where(c < w / 2, 1.0, -1.0),
                        np.where(c < w / 2, -1.0, 1.0))
    else:
        raise ValueError(f"no texture family {family}")
    return base


def synth_image(family: int, shape: tuple[int, int, int],
                rng: np.random.Generator) -> np.ndarray:
    h, w, c = shape
    base = _texture(family, h, w, rng)
    contrast = rng.uniform(0.7, 1.0)
    img = np.empty((h, w, c))
    for ch in range(c):
        gain = rng.uniform(0.8, 1.0)
        plane = 0.5 + 0.5 * contrast * gain * base
        plane = plane + rng.normal(0.0, 0.03, size=(h, w))
        img[:, :, ch] = plane
    return np.clip(img, 0.0, 1.0)


def linear_probe_accuracy(images: np.ndarray, labels: np.ndarray,
                          seed: int = 0, ridge: float = 1e-3) -> float:
    """Held-out accuracy of a one-vs-rest ridge classifier on raw pixels."""
    n = images.shape[0]
    x = images.reshape(n, -1)
    x = np.hstack([x, np.ones((n, 1))])
    k = labels.max() + 1
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    cut = int(0.8 * n)
    tr, te = order[:cut], order[cut:]
    y = np.eye(k)[labels[tr]]
    a = x[tr].T @ x[tr] + ridge * np.eye(x.shape[1])
    wts = np.linalg.solve(a, x[tr].T @ y)
    pred = (x[te] @ wts).argmax(axis=1)
    return float(np.mean(pred == labels[te]))


def synth_dataset(path: str, image_shape: tuple[int, int, int],
                  class_count: int, per_class: int, seed: int) -> str:
    """Generate a labeled texture dataset; returns the manifest path.

    Deterministic: regeneration with the same arguments is byte-identical.
    Self-checks that a linear probe separates the classes at >= 0.8.
    """
    if not 1 <= class_count <= 10:
        raise ValueError("class_count must be in 1..10")
    os.makedirs(path, exist_ok=True)
    rng = np.random.default_rng(seed)
    rows = []
    images = []
    labels = []
    for label in range(class_count):
        for j in range(per_class):
            img = synth_image(label, image_shape, rng)
            name = f"img_{label:02d}_{j:04d}.qimg"
            write_qimg(os.path.join(path, name), img)
            rows.append((name, label))
            images.append(img)
            labels.append(label)
    acc = linear_probe_accuracy(np.asarray(images, dtype=np.float32),
                                np.asarray(labels))
    if acc < 0.8:
        raise RuntimeError(f"synthetic classes not separable enough "
                           f"(probe accuracy {acc:.2f})")
    manifest = os.path.join(path, "manifest.csv")
    with open(manifest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["filename", "label"])
        writer.writerows(rows)
    return manifest


# ---------------------------------------------------------------------------
# ingestion

@dataclass
class Dataset:
    images: np.ndarray   # (N, C, H, W) float64 in [0, 1]
    labels: np.ndarray   # (N,) int64

    def __len__(self) -> int:
        return self.labels.size


def load_dataset(path: str, image_shape: tuple[int, int, int],
                 class_count: int, seed: int,
                 split_fraction: float = 0.8) -> tuple[Dataset, Dataset]:
    """Stratified train/validation split, deterministic under seed."""
    if not 0.0 < split_fraction < 1.0:
        raise ValueError("split_fraction must be in (0, 1)")
    manifest = os.path.join(path, "manifest.csv")
    if not os.path.exists(manifest):
        raise IngestionError(f"missing manifest {manifest}")
    h, w, c = image_shape
    names, labels = [], []
    with open(manifest, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["filename", "label"]:
            raise IngestionError("manifest must start with filename,label")
        for row in reader:
            names.append(row[0])
            labels.append(int(row[1]))
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise IngestionError("manifest lists no samples")
    if labels.min() < 0 or labels.max() >= class_count:
        raise IngestionError(
            f"manifest labels span {labels.min()}..{labels.max()}, "
            f"config expects {class_count} classes")
    images = np.empty((labels.size, c, h, w))
    for i, name in enumerate(names):
        img = read_qimg(os.path.join(path, name))
        if img.shape != (h, w, c):
            raise IngestionError(f"tensor {name} has shape {img.shape}, "
                                 f"expected {(h, w, c)}")
        if img.max() > 1.0:
            img = img / 255.0
        images[i] = np.clip(img, 0.0, 1.0).transpose(2, 0, 1)

    rng = np.random.default_rng(seed)
    train_idx, val_idx = [], []
    for k in range(class_count):
        idx = np.flatnonzero(labels == k)
        idx = idx[rng.permutation(idx.size)]
        cut = int(round(split_fraction * idx.size))
        train_idx.extend(idx[:cut])
        val_idx.extend(idx[cut:])
    train_idx = np.asarray(sorted(train_idx))
    val_idx = np.asarray(sorted(val_idx))
    return (Dataset(images[train_idx], labels[train_idx]),
            Dataset(images[val_idx], labels[val_idx]))
