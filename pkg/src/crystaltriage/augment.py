"""Image preprocessing pipeline and class-rebalancing augmentation.

The pipeline order is fixed: grayscale, then (training only) a random
right-angle orientation, then a centered square crop, then an area-average
downsample. Raw images are H x W x 3 uint8 arrays in RGB order; grayscale
images are H x W float arrays with values in [0, 1].
"""

import hashlib
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Mapping, Optional

import numpy as np
import scipy.sparse

from . import imgio
from .corpus import Manifest, ManifestError, class_histogram, make_manifest

CROP_SIDE = 960
NET_SIDE = 128

# ITU-R 601 luma weights folded with the 1/255 rescale; a matmul against a
# float32 copy beats per-channel table lookups on strided uint8 input.
_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float32) / 255.0


def to_grayscale(image: np.ndarray) -> np.ndarray:
    """Convert H x W x 3 uint8 RGB pixels to H x W float32 luminance in [0,1]."""
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected H x W x 3 pixels, got shape {image.shape}")
    gray = image.astype(np.float32) @ _LUMA
    return np.clip(gray, 0.0, 1.0)


def random_orientation(image: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Rotate by a uniform choice of {0, 90, 180, 270} degrees, then flip
    horizontally with probability 0.5, then vertically with probability 0.5.

    Consumes exactly three draws from rng, in that order.
    """
    quarter_turns = int(rng.integers(4))
    flip_h = bool(rng.random() < 0.5)
    flip_v = bool(rng.random() < 0.5)
    out = np.rot90(image, quarter_turns)
    if flip_h:
        out = out[:, ::-1]
    if flip_v:
        out = out[::-1, :]
    return out


def center_crop(image: np.ndarray, side: int) -> np.ndarray:
    h, w = image.shape[:2]
    if h < side or w < side:
        raise ValueError(f"image {w}x{h} smaller than crop window {side}")
    top = (h - side) // 2
    left = (w - side) // 2
    return image[top:top + side, left:left + side]


@lru_cache(maxsize=16)
def _area_weights(in_size: int, out_size: int, dtype: str) -> scipy.sparse.csr_matrix:
    """Sparse (out_size x in_size) matrix averaging input cells into output
    cells by exact overlap area. Rows sum to 1; built in exact rational
    arithmetic, so non-integer scale factors stay unbiased."""
    scale = Fraction(in_size, out_size)
    rows, cols, vals = [], [], []
    for i in range(out_size):
        lo, hi = i * scale, (i + 1) * scale
        j = int(lo)
        while Fraction(j) < hi:
            overlap = min(hi, Fraction(j + 1)) - max(lo, Fraction(j))
            if overlap > 0:
                rows.append(i)
                cols.append(j)
                vals.append(float(overlap / scale))
            j += 1
    mat = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(out_size, in_size),
                                  dtype=np.float64)
    return mat.astype(dtype)


def downsample(image: np.ndarray, side: int) -> np.ndarray:
    """Area-average a square grayscale image down to side x side."""
    h, w = image.shape[:2]
    if h != w:
        raise ValueError(f"expected square input, got {w}x{h}")
    if h < side:
        raise ValueError(f"cannot upsample {h} to {side}")
    image = np.ascontiguousarray(image, dtype=image.dtype
                                 if image.dtype.kind == "f" else np.float32)
    if h == side:
        return image
    weights = _area_weights(h, side, image.dtype.str)
    out = weights @ image
    out = weights @ np.ascontiguousarray(out.T)
    return out.T


def preprocess(image: np.ndarray, rng: Optional[np.random.Generator] = None,
               crop_side: int = CROP_SIDE, net_side: int = NET_SIDE) -> np.ndarray:
    """Full pipeline from raw RGB pixels to a network-ready tile.

    The random orientation runs only when an rng is supplied; inference paths
    pass rng=None and get the deterministic grayscale-crop-downsample chain.
    """
    gray = to_grayscale(image)
    if rng is not None:
        gray = random_orientation(gray, rng)
    return downsample(center_crop(gray, crop_side), net_side)


@dataclass(frozen=True)
class BalancePlan:
    """Nominal per-class replica multiplicity, inversely proportional to
    class size: m_c = round(T / N_c), clamped to at least 1, with T the
    largest class count."""
    multiplicity: dict[int, int]
    target_count: int


def balance_plan(histogram: Mapping[int, int] | np.ndarray) -> BalancePlan:
    if not isinstance(histogram, Mapping):
        arr = np.asarray(histogram)
        histogram = {i: int(arr[i]) for i in range(len(arr))}
    if not histogram:
        raise ValueError("empty histogram")
    for class_id, count in histogram.items():
        if count <= 0:
            raise ValueError(f"cannot balance class {class_id} with count {count}")
    target = max(histogram.values())
    multiplicity = {c: max(1, round(target / n)) for c, n in histogram.items()}
    return BalancePlan(multiplicity=multiplicity, target_count=target)


def _replica_counts(plan: BalancePlan, class_counts: Mapping[int, int]) -> dict[int, tuple[int, int]]:
    """Per class: (base replicas per record, how many leading records get one
    extra). Distributing the remainder brings every class to exactly
    target_count, which a uniform rounded multiplicity cannot."""
    out = {}
    for class_id, n in class_counts.items():
        if class_id not in plan.multiplicity:
            raise ValueError(f"plan missing class {class_id}")
        out[class_id] = divmod(plan.target_count, n) if n <= plan.target_count else (1, 0)
    return out


def derive_seed(seed: int, record_id: str, replica: int) -> int:
    """Stable per-replica seed from (run seed, parent id, replica index)."""
    digest = hashlib.sha256(f"{seed}|{record_id}|{replica}".encode()).digest()
    return int.from_bytes(digest[:8], "big") & (2**63 - 1)


def augment_dataset(manifest: Manifest, plan: BalancePlan, seed: int,
                    out_dir: str | Path, image_root: str | Path | None = None) -> Manifest:
    """Produce the balanced, preprocessed corpus.

    Every original record of class c yields roughly target/N_c replicas (the
    remainder spread over the first records of the class in manifest order),
    each pushed through the training pipeline with its own derived seed and
    written to out_dir as an 8-bit grayscale PNG. The returned manifest holds
    only the augmented records, in parent order then replica order.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    root = Path(image_root) if image_root is not None else None

    counts = {c: int(n) for c, n in enumerate(class_histogram(manifest)) if n > 0}
    schedule = _replica_counts(plan, counts)
    seen_per_class: dict[int, int] = {c: 0 for c in counts}

    out_records = []
    for rec in manifest.records:
        if rec.origin != "original":
            raise ManifestError(f"cannot augment augmented record: {rec.record_id!r}")
        base, extra = schedule[rec.label.id]
        rank = seen_per_class[rec.label.id]
        seen_per_class[rec.label.id] = rank + 1
        replicas = base + (1 if rank < extra else 0)

        src = Path(rec.source_path)
        if root is not None and not src.is_absolute():
            src = root / src
        gray = to_grayscale(imgio.read_rgb(src))

        for k in range(replicas):
            rep_seed = derive_seed(seed, rec.record_id, k)
            rng = np.random.default_rng(rep_seed)
            tile = random_orientation(gray, rng)
            tile = downsample(center_crop(tile, CROP_SIDE), NET_SIDE)
            pixels = np.clip(np.rint(tile * 255.0), 0, 255).astype(np.uint8)
            rep_id = f"{rec.record_id}.a{k}"
            path = out_dir / f"{rep_id}.png"
            imgio.write_gray(path, pixels)
            out_records.append(replace(
                rec,
                record_id=rep_id,
                source_path=str(path),
                origin="augmented",
                parent_id=rec.record_id,
                augmentation_seed=rep_seed,
            ))

    out = make_manifest(out_records, image_width=NET_SIDE, image_height=NET_SIDE,
                        seed=seed)
    return out
