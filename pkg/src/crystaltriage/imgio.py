"""Thin PNG read/write helpers around OpenCV.

All arrays cross this boundary in RGB channel order (or single-channel
grayscale); the BGR convention stays inside this module.
"""

from pathlib import Path

import cv2
import numpy as np

# low compression level: encode speed matters more than file size here
_PNG_PARAMS = [cv2.IMWRITE_PNG_COMPRESSION, 1]


def read_rgb(path: str | Path) -> np.ndarray:
    """Read an 8-bit image file as an H x W x 3 RGB uint8 array."""
    img = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if img is None:
        raise FileNotFoundError(f"cannot read image: {path}")
    # cvtColor instead of a ::-1 view: downstream math wants contiguous rows
    return cv2.cvtColor(img, cv2.COLOR_BGR2RGB)


def decode_rgb(data: bytes) -> np.ndarray:
    """Decode an in-memory image file (PNG, JPEG, ...) to RGB uint8."""
    img = cv2.imdecode(np.frombuffer(data, dtype=np.uint8), cv2.IMREAD_COLOR)
    if img is None:
        raise ValueError("cannot decode image data")
    return cv2.cvtColor(img, cv2.COLOR_BGR2RGB)


def write_rgb(path: str | Path, pixels: np.ndarray) -> None:
    if pixels.ndim != 3 or pixels.shape[2] != 3 or pixels.dtype != np.uint8:
        raise ValueError("expected H x W x 3 uint8 pixels")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    bgr = cv2.cvtColor(pixels, cv2.COLOR_RGB2BGR)
    if not cv2.imwrite(str(path), bgr, _PNG_PARAMS):
        raise OSError(f"cannot write image: {path}")


def write_gray(path: str | Path, pixels: np.ndarray) -> None:
    if pixels.ndim != 2 or pixels.dtype != np.uint8:
        raise ValueError("expected H x W uint8 pixels")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), pixels, _PNG_PARAMS):
        raise OSError(f"cannot write image: {path}")


def read_gray(path: str | Path) -> np.ndarray:
    """Read a single-channel 8-bit image as an H x W uint8 array."""
    img = cv2.imread(str(path), cv2.IMREAD_GRAYSCALE)
    if img is None:
        raise FileNotFoundError(f"cannot read image: {path}")
    return img
