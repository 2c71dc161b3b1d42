"""Static SVG figures rendered from the CSV outputs of ``eval``."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .datagen.images import Label  # noqa: E402
from .evaluation import read_scores_csv  # noqa: E402

# fixed salt and no date stamp keep the SVG bytes reproducible
matplotlib.rcParams["svg.hashsalt"] = "qadetect"
_SVG_META = {"Date": None, "Creator": None}


def _read_roc(path: Path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([float(r["fpr"]) for r in rows]), np.array([float(r["tpr"]) for r in rows])


def render_mode(out_dir: str | Path, name: str, auc: float | None = None) -> Path:
    """Loss histograms per class next to the ROC curve, for one scoring mode."""
    out_dir = Path(out_dir)
    scores = read_scores_csv(out_dir / f"scores_{name}.csv", name)
    fpr, tpr = _read_roc(out_dir / f"roc_{name}.csv")

    fig, (ax_h, ax_r) = plt.subplots(1, 2, figsize=(9, 3.6))
    bins = np.histogram_bin_edges(scores.losses, bins=30)
    for label, colour in ((Label.NORMAL, "tab:blue"), (Label.ANOMALOUS, "tab:red")):
        vals = scores.of(label)
        if vals.size:
            ax_h.hist(vals, bins=bins, histtype="step", color=colour, label=f"{label.value} (n={vals.size})")
    ax_h.set_xlabel("loss")
    ax_h.set_ylabel("samples")
    ax_h.legend(frameon=False)
    ax_h.set_title(name)

    ax_r.plot(fpr, tpr, color="black", drawstyle="default")
    ax_r.plot([0, 1], [0, 1], color="grey", linestyle=":")
    ax_r.set_xlabel("false positive rate")
    ax_r.set_ylabel("true positive rate")
    ax_r.set_xlim(0, 1)
    ax_r.set_ylim(0, 1)
    if auc is not None:
        ax_r.set_title(f"AUC = {auc:.3f}")
    fig.tight_layout()

    path = out_dir / f"report_{name}.svg"
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return path
