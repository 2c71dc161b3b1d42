"""Handwritten-digit ingestion (IDX files) and an offline stand-in renderer.

``render_synthetic_digits`` draws pen-stroke zeros and ones on a 28x28
canvas with randomised size, slant, stroke width and wobble. It exists for
machines without the MNIST files; its output goes through exactly the same
IDX path as the real data.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import FormatError
from .idx import read_idx, write_idx
from .images import EventImage, Label, pool_mean

DIGIT_SHAPE = (8, 8)


def downsample_digit(raw: np.ndarray) -> np.ndarray:
    """28x28 bytes -> 8x8 floats in [0, 1] by area averaging."""
    return pool_mean(np.asarray(raw, dtype=float), DIGIT_SHAPE) / 255.0


def load_digits(
    images_path: str | Path,
    labels_path: str | Path,
    normal_digit: int = 0,
    anomalous_digit: int = 1,
    prefix: str = "digit",
) -> list[EventImage]:
    images = read_idx(images_path)
    labels = read_idx(labels_path)
    if images.ndim != 3 or labels.ndim != 1 or images.shape[0] != labels.shape[0]:
        raise FormatError(f"IDX image dims {images.shape} do not match label dims {labels.shape}")
    out = []
    for i in np.flatnonzero((labels == normal_digit) | (labels == anomalous_digit)):
        label = Label.NORMAL if labels[i] == normal_digit else Label.ANOMALOUS
        out.append(EventImage(downsample_digit(images[i]), label, {"digit": int(labels[i]), "index": int(i)}, f"{prefix}_{i:05d}"))
    return out


# --------------------------------------------------------------------------
# synthetic stand-in
# --------------------------------------------------------------------------

_GRID = np.stack(np.meshgrid(np.arange(28) + 0.5, np.arange(28) + 0.5, indexing="xy"), axis=-1).reshape(-1, 2)


def _stroke(points: np.ndarray, width: float) -> np.ndarray:
    """Anti-aliased polyline of the given half-width, as a 28x28 array in [0, 1]."""
    a, b = points[:-1], points[1:]
    ab = b - a
    t = np.einsum("pk,sk->ps", _GRID, ab) - np.einsum("sk,sk->s", a, ab)
    t = np.clip(t / np.maximum(np.einsum("sk,sk->s", ab, ab), 1e-12), 0, 1)
    proj = a[None] + t[..., None] * ab[None]
    dist = np.min(np.linalg.norm(_GRID[:, None, :] - proj, axis=-1), axis=1)
    return np.clip(width + 0.5 - dist, 0.0, 1.0).reshape(28, 28)


def _zero(rng: np.random.Generator) -> np.ndarray:
    cx, cy = 14 + rng.normal(0, 1.0, 2)
    ax, ay = rng.uniform(4.5, 7.5), rng.uniform(7.5, 10.0)
    tilt = rng.normal(0, 0.25)
    t = np.linspace(0, 2 * np.pi * rng.uniform(0.93, 1.05), 60)
    wobble = 1 + 0.08 * rng.normal() * np.sin(2 * t + rng.uniform(0, 6.3)) + 0.05 * rng.normal() * np.cos(3 * t)
    x, y = ax * wobble * np.sin(t), -ay * wobble * np.cos(t)
    c, s = np.cos(tilt), np.sin(tilt)
    pts = np.stack([cx + c * x - s * y, cy + s * x + c * y], axis=1)
    return _stroke(pts, rng.uniform(0.9, 1.9))


def _one(rng: np.random.Generator) -> np.ndarray:
    cx, cy = 14 + rng.normal(0, 1.2), 14 + rng.normal(0, 0.8)
    half = rng.uniform(7.5, 10.0)
    slant = rng.normal(0, 0.25)
    dx, dy = np.sin(slant) * half, np.cos(slant) * half
    pts = [np.array([[cx + dx, cy - dy], [cx - dx, cy + dy]])]
    if rng.random() < 0.4:
        # flag at the top
        top = pts[0][0]
        pts.append(np.array([top, top + [-rng.uniform(2, 4), rng.uniform(1.5, 3)]]))
    img = np.zeros((28, 28))
    width = rng.uniform(0.9, 2.0)
    for p in pts:
        img = np.maximum(img, _stroke(p, width))
    return img


def render_synthetic_digits(n_per_class: int, seed: int, digits: Sequence[int] = (0, 1)) -> tuple[np.ndarray, np.ndarray]:
    """Return (uint8 images of shape (N, 28, 28), uint8 labels), classes interleaved."""
    rng = np.random.default_rng(seed)
    painters = {0: _zero, 1: _one}
    images, labels = [], []
    for _ in range(n_per_class):
        for d in digits:
            img = painters[d](rng)
            images.append(np.round(255 * img).astype(np.uint8))
            labels.append(d)
    return np.stack(images), np.asarray(labels, dtype=np.uint8)


def write_synthetic_idx(directory: str | Path, n_per_class: int, seed: int, stem: str = "synthetic") -> tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    images, labels = render_synthetic_digits(n_per_class, seed)
    img_path = directory / f"{stem}-images-idx3-ubyte"
    lbl_path = directory / f"{stem}-labels-idx1-ubyte"
    write_idx(img_path, images)
    write_idx(lbl_path, labels)
    return img_path, lbl_path
