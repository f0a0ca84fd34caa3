"""Mini-batch SGD with momentum, step learning-rate decay, per-epoch
validation, and best-validation checkpoint selection.

The optimizer protocol is deliberately small: anything exposing
parameters() and loss_and_gradients(images, labels) can be stepped, which is
how the update rule is tested against hand-computed recurrences.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import imgio
from .corpus import Manifest


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    epochs: int = 70
    lr0: float = 0.01
    momentum: float = 0.9
    decay_period: int = 20
    decay_factor: float = 10.0
    seed: int = 0

    def validate(self) -> "TrainConfig":
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.decay_factor <= 1:
            raise ValueError("decay_factor must be > 1")
        if self.decay_period < 1:
            raise ValueError("decay_period must be >= 1")
        return self

    @staticmethod
    def from_mapping(data: dict) -> "TrainConfig":
        fields = {f for f in TrainConfig.__dataclass_fields__}
        kwargs = {k: v for k, v in data.items() if k in fields}
        cfg = TrainConfig(**kwargs)
        return cfg.validate()


@dataclass
class Checkpoint:
    """In-memory snapshot of every model array at one epoch."""
    arrays: list[np.ndarray]
    epoch: int
    validation_accuracy: float
    training_loss: float


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    lr: float
    train_loss: float
    val_accuracy: float


@dataclass
class TrainResult:
    best: Checkpoint
    history: list[EpochStats] = field(default_factory=list)


def lr_at(epoch: int, config: TrainConfig) -> float:
    """lr0 divided by decay_factor once per completed decay_period."""
    if epoch < 0:
        raise ValueError("negative epoch")
    return config.lr0 / config.decay_factor ** (epoch // config.decay_period)


def train_step(model, batch, lr: float, momentum: float,
               state: list[np.ndarray]) -> float:
    """One SGD-with-momentum update: v <- momentum*v - lr*g; w <- w + v."""
    images, labels = batch
    loss, _ = model.loss_and_gradients(images, labels)
    if not np.isfinite(loss):
        raise TrainingError(f"non-finite loss {loss!r}; aborting")
    for p, v in zip(model.parameters(), state):
        v *= momentum
        v -= lr * p.grad
        p.value += v
    return loss


def snapshot(model) -> list[np.ndarray]:
    return [arr.copy() for _, arr, _ in model.named_arrays()]


def restore(model, arrays: Sequence[np.ndarray]) -> None:
    own = model.named_arrays()
    if len(own) != len(arrays):
        raise TrainingError("snapshot does not match model layout")
    for (_, dst, _), src in zip(own, arrays):
        dst[...] = src


def load_corpus(manifest: Manifest, image_root: str | Path | None = None):
    """Stack manifest images into memory as (N, 128, 128) uint8 + label ids.

    Training corpora are augmentation outputs: 8-bit grayscale, 128 a side.
    """
    if len(manifest) == 0:
        raise TrainingError("empty manifest")
    root = Path(image_root) if image_root is not None else None
    images = np.empty((len(manifest), 128, 128), dtype=np.uint8)
    labels = np.empty(len(manifest), dtype=np.int64)
    for i, rec in enumerate(manifest.records):
        src = Path(rec.source_path)
        if root is not None and not src.is_absolute():
            src = root / src
        img = imgio.read_gray(src)
        if img.shape != (128, 128):
            raise TrainingError(
                f"{rec.record_id}: expected 128x128 image, got {img.shape}")
        images[i] = img
        labels[i] = rec.label.id
    return images, labels


def _batched_logits(model, images_u8: np.ndarray, batch_size: int) -> np.ndarray:
    out = np.empty((len(images_u8), 10), dtype=np.float32)
    for start in range(0, len(images_u8), batch_size):
        chunk = images_u8[start:start + batch_size].astype(np.float32) / 255.0
        out[start:start + len(chunk)] = model.forward(chunk)
    return out


def accuracy_on(model, images_u8: np.ndarray, labels: np.ndarray,
                batch_size: int = 256) -> float:
    logits = _batched_logits(model, images_u8, batch_size)
    return float((logits.argmax(axis=1) == labels).mean())


def validate(model, manifest: Manifest,
             image_root: str | Path | None = None) -> float:
    """Fraction of manifest records whose argmax activation is the label."""
    images, labels = load_corpus(manifest, image_root)
    return accuracy_on(model, images, labels)


def train(model, train_manifest: Manifest, val_manifest: Manifest,
          config: TrainConfig,
          progress: Optional[Callable[[EpochStats], None]] = None) -> TrainResult:
    """Run the full schedule and leave the best-validation weights in place.

    Each epoch shuffles with a PRNG seeded from (config.seed, epoch), visits
    every record once (final short batch included), then measures validation
    accuracy. Best checkpoint: highest accuracy, earliest epoch on ties.
    """
    config.validate()
    train_images, train_labels = load_corpus(train_manifest)
    val_images, val_labels = load_corpus(val_manifest)
    n = len(train_images)

    state = [np.zeros_like(p.value) for p in model.parameters()]
    history: list[EpochStats] = []
    best: Optional[Checkpoint] = None

    for epoch in range(config.epochs):
        lr = lr_at(epoch, config)
        rng = np.random.default_rng(np.random.SeedSequence((config.seed, epoch)))
        order = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            images = train_images[idx].astype(np.float32) / 255.0
            loss = train_step(model, (images, train_labels[idx]), lr,
                              config.momentum, state)
            loss_sum += loss * len(idx)
        train_loss = loss_sum / n
        val_accuracy = accuracy_on(model, val_images, val_labels)
        stats = EpochStats(epoch, lr, train_loss, val_accuracy)
        history.append(stats)
        if progress is not None:
            progress(stats)
        if best is None or val_accuracy > best.validation_accuracy:
            best = Checkpoint(snapshot(model), epoch, val_accuracy, train_loss)

    restore(model, best.arrays)
    return TrainResult(best=best, history=history)


def write_history(history: Sequence[EpochStats], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "lr", "train_loss", "val_accuracy"])
        for row in history:
            writer.writerow([row.epoch, row.lr, row.train_loss, row.val_accuracy])
