"""Label-conditioned synthetic trial images.

Each class gets a simple, deterministic visual motif on a noisy bright
background, sized so the motifs survive the 960-crop / 128-downsample
pipeline. Motifs are deliberately plain: they exist to exercise the training
and evaluation machinery, not to imitate real optics. micro_crystals and
phase_separation intentionally share small round features and stay the
hardest pair to tell apart.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import cv2
import numpy as np

from . import imgio
from .corpus import ImageRecord, Manifest, label_by_id, label_by_name, make_manifest

_BLOCK = 16  # background noise is drawn per block, then expanded to pixels


@dataclass(frozen=True)
class SynthSpec:
    counts: dict[int, int] = field(default_factory=dict)
    width: int = 1280
    height: int = 960
    seed: int = 0
    noise_level: float = 0.5

    def validate(self) -> "SynthSpec":
        for class_id, count in self.counts.items():
            label_by_id(class_id)
            if count < 0:
                raise ValueError(f"negative count for class {class_id}")
        if self.width < 960 or self.height < 960:
            raise ValueError("images must be at least 960 pixels on each side")
        if not 0.0 <= self.noise_level <= 1.0:
            raise ValueError("noise_level must lie in [0, 1]")
        return self


def parse_counts(text: str) -> dict[int, int]:
    """Parse 'clear=5,bad_drop=3' into {1: 5, 0: 3}."""
    counts: dict[int, int] = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        name, _, value = part.partition("=")
        counts[label_by_name(name.strip()).id] = int(value)
    return counts


def _background(rng: np.random.Generator, height: int, width: int,
                noise_level: float) -> np.ndarray:
    base = 205 + int(rng.integers(-8, 9))
    tint = rng.integers(-5, 6, size=3)
    blocks_h = -(-height // _BLOCK)
    blocks_w = -(-width // _BLOCK)
    noise = rng.normal(0.0, 18.0 * noise_level, size=(blocks_h, blocks_w))
    grain = np.kron(noise, np.ones((_BLOCK, _BLOCK)))[:height, :width]
    img = base + tint[None, None, :] + grain[:, :, None]
    return np.clip(img, 0, 255).astype(np.uint8)


def _paint_squares(img: np.ndarray, rng: np.random.Generator, count: int,
                   sizes: tuple[int, int], grays: tuple[int, int]) -> None:
    """Stamp count axis-aligned dark squares with vectorized writes."""
    h, w = img.shape[:2]
    side_lo, side_hi = sizes
    xs = rng.integers(0, w - side_hi, size=count)
    ys = rng.integers(0, h - side_hi, size=count)
    sides = rng.integers(side_lo, side_hi + 1, size=count)
    values = rng.integers(grays[0], grays[1] + 1, size=count).astype(np.uint8)
    for side in np.unique(sides):
        sel = sides == side
        for dy in range(side):
            for dx in range(side):
                img[ys[sel] + dy, xs[sel] + dx] = values[sel, None]


def _convex_polygon(rng: np.random.Generator, center: tuple[float, float],
                    diameter: float) -> np.ndarray:
    k = int(rng.integers(5, 9))
    angles = np.sort(rng.uniform(0.0, 2.0 * np.pi, size=k))
    radii = rng.uniform(0.6, 1.0, size=k) * diameter / 2.0
    pts = np.stack([center[0] + radii * np.cos(angles),
                    center[1] + radii * np.sin(angles)], axis=1)
    return pts.astype(np.int32)


def _paint_polygons(img: np.ndarray, rng: np.random.Generator, count: int,
                    diameter: tuple[float, float], grays: tuple[int, int]) -> None:
    h, w = img.shape[:2]
    margin = int(diameter[1])
    for _ in range(count):
        center = (float(rng.integers(margin, w - margin)),
                  float(rng.integers(margin, h - margin)))
        d = rng.uniform(*diameter)
        gray = int(rng.integers(grays[0], grays[1] + 1))
        pts = _convex_polygon(rng, center, d)
        cv2.fillPoly(img, [pts], (gray, gray, gray))


def _draw_bad_drop(img, rng):
    h, w = img.shape[:2]
    cx = w / 2 + rng.uniform(150, 300) * rng.choice([-1, 1])
    cy = h / 2 + rng.uniform(100, 220) * rng.choice([-1, 1])
    k = int(rng.integers(12, 21))
    angles = np.sort(rng.uniform(0.0, 2.0 * np.pi, size=k))
    radii = rng.uniform(0.5, 1.0, size=k) * rng.uniform(250, 380)
    pts = np.stack([cx + radii * np.cos(angles),
                    cy + radii * np.sin(angles)], axis=1).astype(np.int32)
    gray = int(rng.integers(100, 135))
    cv2.fillPoly(img, [pts], (gray, gray, gray))


def _draw_clear(img, rng):
    pass  # background only


def _draw_heavy_precipitate(img, rng):
    _paint_squares(img, rng, int(rng.integers(4000, 8001)), (1, 3), (40, 100))


def _draw_light_precipitate(img, rng):
    _paint_squares(img, rng, int(rng.integers(400, 901)), (1, 3), (40, 100))


def _draw_phase_separation(img, rng):
    h, w = img.shape[:2]
    for _ in range(int(rng.integers(40, 101))):
        r = int(rng.integers(6, 15))
        x = int(rng.integers(r + 1, w - r - 1))
        y = int(rng.integers(r + 1, h - r - 1))
        rim = int(rng.integers(80, 110))
        core = int(rng.integers(210, 235))
        cv2.circle(img, (x, y), r, (core, core, core), -1)
        cv2.circle(img, (x, y), r, (rim, rim, rim), 2)


def _draw_micro_crystals(img, rng):
    _paint_squares(img, rng, int(rng.integers(300, 801)), (3, 4), (55, 90))


def _draw_small_crystals(img, rng):
    _paint_polygons(img, rng, int(rng.integers(40, 91)), (6.0, 10.0), (60, 110))


def _draw_medium_crystals(img, rng):
    _paint_polygons(img, rng, int(rng.integers(8, 21)), (16.0, 26.0), (60, 110))


def _draw_large_crystals(img, rng):
    _paint_polygons(img, rng, int(rng.integers(2, 6)), (45.0, 80.0), (60, 110))


def _draw_needles_plates(img, rng):
    h, w = img.shape[:2]
    for _ in range(int(rng.integers(10, 31))):
        length = rng.uniform(100, 220)
        thickness = rng.uniform(4, 10)
        angle = rng.uniform(0.0, np.pi)
        cx = rng.uniform(length, w - length)
        cy = rng.uniform(length, h - length)
        along = np.array([np.cos(angle), np.sin(angle)])
        across = np.array([-np.sin(angle), np.cos(angle)])
        corners = np.array([
            along * (length / 2) + across * (thickness / 2),
            along * (length / 2) - across * (thickness / 2),
            -along * (length / 2) - across * (thickness / 2),
            -along * (length / 2) + across * (thickness / 2),
        ]) + np.array([cx, cy])
        gray = int(rng.integers(70, 120))
        cv2.fillPoly(img, [corners.astype(np.int32)], (gray, gray, gray))


_MOTIFS = {
    "bad_drop": _draw_bad_drop,
    "clear": _draw_clear,
    "heavy_precipitate": _draw_heavy_precipitate,
    "large_crystals": _draw_large_crystals,
    "light_precipitate": _draw_light_precipitate,
    "medium_crystals": _draw_medium_crystals,
    "micro_crystals": _draw_micro_crystals,
    "needles_plates": _draw_needles_plates,
    "phase_separation": _draw_phase_separation,
    "small_crystals": _draw_small_crystals,
}


def render_image(spec: SynthSpec, class_id: int, index: int) -> np.ndarray:
    """Render one image; (seed, class, index) fully determine the pixels."""
    rng = np.random.default_rng(np.random.SeedSequence((spec.seed, class_id, index)))
    img = _background(rng, spec.height, spec.width, spec.noise_level)
    _MOTIFS[label_by_id(class_id).name](img, rng)
    return img


def generate(spec: SynthSpec, out_dir: str | Path) -> Manifest:
    """Write counts[c] PNG files per class plus records referencing them.

    Records come out in class-id order then index order, origin original,
    split unassigned.
    """
    spec.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for class_id in sorted(spec.counts):
        label = label_by_id(class_id)
        for i in range(spec.counts[class_id]):
            record_id = f"{label.name}-{i:05d}"
            path = out_dir / f"{record_id}.png"
            imgio.write_rgb(path, render_image(spec, class_id, i))
            records.append(ImageRecord(record_id=record_id, source_path=str(path),
                                       label=label))
    return make_manifest(records, image_width=spec.width,
                         image_height=spec.height, seed=spec.seed)
