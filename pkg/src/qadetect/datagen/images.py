"""Image containers, fractional pooling, feature extraction and dataset I/O."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from ..encoding import FeatureVector
from ..errors import DataError, FormatError


class Label(str, Enum):
    NORMAL = "normal"
    ANOMALOUS = "anomalous"


@dataclass
class EventImage:
    pixels: np.ndarray
    label: Label
    meta: dict = field(default_factory=dict)
    source_id: str = ""

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=float)
        self.label = Label(self.label)
        if self.pixels.ndim != 2:
            raise DataError("image pixels must be a 2-D grid")
        if not np.all(np.isfinite(self.pixels)):
            raise DataError(f"non-finite pixel in {self.source_id!r}")
        if np.any(self.pixels < 0):
            raise DataError(f"negative pixel in {self.source_id!r}")


def overlap_matrix(n_in: int, n_out: int) -> np.ndarray:
    """W[i, j] = length of input cell j inside output bin i, in input-cell units.

    Columns sum to one, so ``W @ x`` conserves the total of ``x``.
    """
    edges = np.linspace(0.0, n_in, n_out + 1)
    lo, hi = edges[:-1, None], edges[1:, None]
    j = np.arange(n_in)[None, :]
    return np.clip(np.minimum(hi, j + 1) - np.maximum(lo, j), 0.0, None)


def pool_sum(image: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Integrate ``image`` onto a coarser grid; fractional cells are split by area."""
    rows = overlap_matrix(image.shape[0], shape[0])
    cols = overlap_matrix(image.shape[1], shape[1])
    return rows @ image @ cols.T


def pool_mean(image: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Area-average ``image`` onto a coarser grid."""
    cell = (image.shape[0] / shape[0]) * (image.shape[1] / shape[1])
    return pool_sum(image, shape) / cell


def image_to_features(img: EventImage, n_qubits: int) -> FeatureVector:
    """Row-major flatten, zero-pad to 2**n_qubits and L2-normalize."""
    flat = img.pixels.reshape(-1)
    if not np.any(flat):
        raise DataError(f"image {img.source_id!r} is all zero")
    return FeatureVector.normalized(flat, img.source_id, n_qubits)


def save_dataset(directory: str | Path, splits: dict[str, list[EventImage]], meta: dict) -> Path:
    """Write one ``.npy`` per image under ``images/`` plus ``metadata.json``."""
    directory = Path(directory)
    (directory / "images").mkdir(parents=True, exist_ok=True)
    index = {}
    for split, images in splits.items():
        records = []
        for img in images:
            fname = f"images/{img.source_id}.npy"
            np.save(directory / fname, img.pixels)
            records.append({"id": img.source_id, "label": img.label.value, "file": fname, "meta": img.meta})
        index[split] = records
    doc = {"meta": meta, "splits": index}
    (directory / "metadata.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return directory


def load_dataset(directory: str | Path) -> tuple[dict[str, list[EventImage]], dict]:
    directory = Path(directory)
    try:
        doc = json.loads((directory / "metadata.json").read_text())
    except FileNotFoundError:
        raise FormatError(f"no metadata.json in {directory}; run 'generate' first") from None
    splits = {}
    for split, records in doc["splits"].items():
        splits[split] = [
            EventImage(_load_pixels(directory / r["file"]), Label(r["label"]), r.get("meta", {}), r["id"]) for r in records
        ]
    return splits, doc.get("meta", {})


def _load_pixels(path: Path) -> np.ndarray:
    try:
        return np.load(path, allow_pickle=False)
    except (ValueError, EOFError) as exc:
        raise FormatError(f"unreadable image file {path}: {exc}") from None
