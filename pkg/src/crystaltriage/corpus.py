"""Label taxonomy, image manifests, class statistics and the train/val/test split.

A manifest is the single source of truth for a corpus: it references image
files on disk but never stores pixels. All operations here are pure functions
over immutable manifests.
"""

import json
import math
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

SPLITS = ("train", "validation", "test", "unassigned")
ORIGINS = ("original", "augmented")


class ManifestError(ValueError):
    """Raised when a manifest violates a structural invariant."""


@dataclass(frozen=True)
class ClassLabel:
    id: int
    name: str
    is_crystal: bool


#: The ten trial-outcome categories, id order fixed once and for all.
LABELS: tuple[ClassLabel, ...] = (
    ClassLabel(0, "bad_drop", False),
    ClassLabel(1, "clear", False),
    ClassLabel(2, "heavy_precipitate", False),
    ClassLabel(3, "large_crystals", True),
    ClassLabel(4, "light_precipitate", False),
    ClassLabel(5, "medium_crystals", True),
    ClassLabel(6, "micro_crystals", True),
    ClassLabel(7, "needles_plates", True),
    ClassLabel(8, "phase_separation", False),
    ClassLabel(9, "small_crystals", True),
)

NUM_CLASSES = len(LABELS)
CRYSTAL_IDS = frozenset(l.id for l in LABELS if l.is_crystal)
_BY_NAME = {l.name: l for l in LABELS}


def label_by_name(name: str) -> ClassLabel:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise ManifestError(f"unknown label name: {name!r}") from None


def label_by_id(label_id: int) -> ClassLabel:
    if not 0 <= label_id < NUM_CLASSES:
        raise ManifestError(f"label id out of range: {label_id}")
    return LABELS[label_id]


@dataclass(frozen=True)
class ImageRecord:
    record_id: str
    source_path: str
    label: ClassLabel
    split: str = "unassigned"
    origin: str = "original"
    parent_id: Optional[str] = None
    augmentation_seed: Optional[int] = None

    def to_json(self) -> dict:
        return {
            "record_id": self.record_id,
            "source_path": self.source_path,
            "label": self.label.name,
            "split": self.split,
            "origin": self.origin,
            "parent_id": self.parent_id,
            "augmentation_seed": self.augmentation_seed,
        }

    @staticmethod
    def from_json(obj: dict) -> "ImageRecord":
        return ImageRecord(
            record_id=obj["record_id"],
            source_path=obj["source_path"],
            label=label_by_name(obj["label"]),
            split=obj.get("split") or "unassigned",
            origin=obj.get("origin") or "original",
            parent_id=obj.get("parent_id"),
            augmentation_seed=obj.get("augmentation_seed"),
        )


@dataclass(frozen=True)
class Manifest:
    records: tuple[ImageRecord, ...]
    image_width: int = 1280
    image_height: int = 960
    created_at: float = 0.0
    seed: int = 0

    def __len__(self) -> int:
        return len(self.records)

    def validate(self) -> "Manifest":
        seen: dict[str, ImageRecord] = {}
        for rec in self.records:
            if rec.record_id in seen:
                raise ManifestError(f"duplicate id: {rec.record_id!r}")
            seen[rec.record_id] = rec
            if rec.split not in SPLITS:
                raise ManifestError(f"unknown split: {rec.split!r}")
            if rec.origin not in ORIGINS:
                raise ManifestError(f"unknown origin: {rec.origin!r}")
            if rec.origin == "augmented" and rec.parent_id is None:
                raise ManifestError(f"augmented record with absent parent: {rec.record_id!r}")
            if rec.origin == "original" and rec.parent_id is not None:
                raise ManifestError(f"original record with parent: {rec.record_id!r}")
        # Parent consistency is checked when the parent record is present in
        # this manifest; augmentation outputs reference parents kept elsewhere.
        for rec in self.records:
            if rec.origin != "augmented":
                continue
            parent = seen.get(rec.parent_id)
            if parent is None:
                continue
            if parent.label.id != rec.label.id:
                raise ManifestError(f"label mismatch with parent: {rec.record_id!r}")
            if parent.split != rec.split:
                raise ManifestError(f"split leakage: {rec.record_id!r} ({rec.split}) vs "
                                    f"parent {parent.record_id!r} ({parent.split})")
        return self


def make_manifest(records: Iterable[ImageRecord], image_width: int = 1280,
                  image_height: int = 960, seed: int = 0) -> Manifest:
    m = Manifest(records=tuple(records), image_width=image_width,
                 image_height=image_height, created_at=time.time(), seed=seed)
    return m.validate()


def load_manifest(path: str | Path) -> Manifest:
    """Read a newline-delimited JSON manifest, one record per line.

    Malformed records are rejected, never repaired.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"manifest not found: {path}")
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            records.append(ImageRecord.from_json(obj))
    return make_manifest(records)


def save_manifest(manifest: Manifest, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for rec in manifest.records:
            fh.write(json.dumps(rec.to_json()) + "\n")


def class_histogram(manifest: Manifest, split: Optional[str] = None) -> np.ndarray:
    """Per-class record counts, optionally restricted to one split."""
    counts = np.zeros(NUM_CLASSES, dtype=np.int64)
    for rec in manifest.records:
        if split is None or rec.split == split:
            counts[rec.label.id] += 1
    return counts


def crystal_fraction(manifest: Manifest) -> float:
    """Fraction of records whose label denotes crystal presence."""
    if len(manifest) == 0:
        raise ManifestError("crystal_fraction of an empty manifest is undefined")
    counts = class_histogram(manifest)
    crystal = sum(int(counts[i]) for i in CRYSTAL_IDS)
    return crystal / int(counts.sum())


def _largest_remainder(n: int, ratios: Sequence[float]) -> list[int]:
    """Apportion n items to the given ratios; remainders go to the largest
    fractional parts, ties broken by lower bucket index."""
    quotas = [n * r for r in ratios]
    base = [math.floor(q) for q in quotas]
    leftover = n - sum(base)
    order = sorted(range(len(ratios)), key=lambda i: (-(quotas[i] - base[i]), i))
    for i in order[:leftover]:
        base[i] += 1
    return base


def stratified_split(manifest: Manifest, ratios: Sequence[float], seed: int) -> Manifest:
    """Assign every record to train/validation/test, stratified per class.

    Within each class, records are shuffled by a PRNG seeded from
    (seed, class id) and partitioned by largest-remainder rounding of the
    ratios, so per-class counts are within one record of the exact products.
    Re-running with the same seed reproduces the assignment bit for bit.
    """
    if len(ratios) != 3:
        raise ManifestError(f"expected 3 ratios, got {len(ratios)}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ManifestError(f"ratios must sum to 1, got {sum(ratios)!r}")
    if any(r < 0 for r in ratios):
        raise ManifestError("ratios must be non-negative")
    for rec in manifest.records:
        if rec.origin != "original":
            raise ManifestError(f"cannot split augmented record: {rec.record_id!r}")
        if rec.split != "unassigned":
            raise ManifestError(f"record already split: {rec.record_id!r}")

    by_class: dict[int, list[int]] = {}
    for idx, rec in enumerate(manifest.records):
        by_class.setdefault(rec.label.id, []).append(idx)

    assignment = ["unassigned"] * len(manifest.records)
    for class_id in sorted(by_class):
        indices = by_class[class_id]
        rng = np.random.default_rng(np.random.SeedSequence((seed, class_id)))
        perm = rng.permutation(len(indices))
        sizes = _largest_remainder(len(indices), ratios)
        cursor = 0
        for split_name, size in zip(("train", "validation", "test"), sizes):
            for k in perm[cursor:cursor + size]:
                assignment[indices[k]] = split_name
            cursor += size

    records = tuple(replace(rec, split=assignment[i])
                    for i, rec in enumerate(manifest.records))
    out = Manifest(records=records, image_width=manifest.image_width,
                   image_height=manifest.image_height, created_at=time.time(),
                   seed=seed)
    return out.validate()
