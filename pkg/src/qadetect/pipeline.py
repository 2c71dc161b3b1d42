"""The experiment steps behind the command line, one function per command.

Every step reads what the previous ones wrote under ``output_dir`` and is a
pure function of the config, its input files and the seeds in the config.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .ansatz import build_approx_encoder, build_encoder
from .config import ExperimentConfig, ModeSection
from .datagen import (
    EventImage,
    Label,
    generate_events,
    image_to_features,
    load_dataset,
    load_digits,
    save_dataset,
    write_synthetic_idx,
)
from .encoding import amplitude_encode_exact, encode_chains, load_encodings, save_encodings
from .errors import DataError
from .evaluation import (
    Direction,
    Sample,
    ScoringMode,
    metrics_document,
    roc_auc,
    score_dataset,
    write_histograms_csv,
    write_metrics,
    write_roc_csv,
    write_scores_csv,
)
from .noise import load_calibration
from .simulator import StateVector
from .training import TrainedModel, train_qae

log = logging.getLogger(__name__)


@dataclass
class Workspace:
    """Resolved locations for one experiment."""

    config: ExperimentConfig
    base: Path  # directory relative paths in the config are taken from

    def path(self, p: str | Path) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base / p

    @property
    def out(self) -> Path:
        return self.path(self.config.output_dir).resolve()

    @property
    def dataset_dir(self) -> Path:
        return self.out / "dataset"

    @property
    def model_path(self) -> Path:
        return self.out / "model.json"

    @property
    def encodings_path(self) -> Path:
        return self.out / "encodings.json"


# -- generate ---------------------------------------------------------------


def generate(ws: Workspace) -> dict[str, dict[str, int]]:
    """Build the train/test splits and write them; returns per-split class counts."""
    cfg = ws.config
    ds = cfg.dataset
    if ds.kind == "digits":
        splits = _digit_splits(ws)
    else:
        det, gun = cfg.detector_config(), cfg.gun_config()
        normal = generate_events(Label.NORMAL, ds.n_train + ds.n_test_normal, det, gun, cfg.seeds.data)
        anomalous = generate_events(Label.ANOMALOUS, ds.n_test_anomalous, det, gun, cfg.seeds.data)
        splits = {"train": normal[: ds.n_train], "test": normal[ds.n_train:] + anomalous}
    meta = {"kind": ds.kind, "seed": cfg.seeds.data, "image_shape": list(splits["train"][0].pixels.shape)}
    save_dataset(ws.dataset_dir, splits, meta)
    return {name: _class_counts(images) for name, images in splits.items()}


def _digit_splits(ws: Workspace) -> dict[str, list[EventImage]]:
    cfg = ws.config
    ds, dg = cfg.dataset, cfg.dataset.digits
    if dg.images is None:
        images_path, labels_path = write_synthetic_idx(ws.dataset_dir / "idx", dg.synthetic_per_class, cfg.seeds.data)
        log.warning("no digit IDX files configured; using %d rendered stand-in digits per class", dg.synthetic_per_class)
    else:
        images_path, labels_path = ws.path(dg.images), ws.path(dg.labels)
        if not images_path.exists() or not labels_path.exists():
            raise DataError(f"digit files not found: {images_path}, {labels_path}")
    images = load_digits(images_path, labels_path, dg.normal_digit, dg.anomalous_digit)
    normal = [im for im in images if im.label is Label.NORMAL]
    anomalous = [im for im in images if im.label is Label.ANOMALOUS]
    need_n = ds.n_train + ds.n_test_normal
    if len(normal) < need_n or len(anomalous) < ds.n_test_anomalous:
        raise DataError(
            f"need {need_n} normal and {ds.n_test_anomalous} anomalous digits, "
            f"found {len(normal)} and {len(anomalous)}"
        )
    return {"train": normal[: ds.n_train], "test": normal[ds.n_train:need_n] + anomalous[: ds.n_test_anomalous]}


def _class_counts(images: list[EventImage]) -> dict[str, int]:
    return {lab.value: sum(im.label is lab for im in images) for lab in Label}


def _encode_images(images: list[EventImage], n_qubits: int) -> list[tuple[EventImage, StateVector]]:
    out = []
    for im in images:
        try:
            out.append((im, amplitude_encode_exact(image_to_features(im, n_qubits))))
        except DataError as exc:
            log.warning("skipping %s: %s", im.source_id, exc)
    if not out:
        raise DataError("no usable images after normalization")
    return out


def _load_split(ws: Workspace, split: str) -> list[EventImage]:
    splits, _ = load_dataset(ws.dataset_dir)
    if split not in splits:
        raise DataError(f"dataset has no '{split}' split")
    return splits[split]


# -- train ------------------------------------------------------------------


def train(ws: Workspace) -> TrainedModel:
    cfg = ws.config
    pairs = _encode_images(_load_split(ws, "train"), cfg.ansatz.n_qubits)
    if any(im.label is not Label.NORMAL for im, _ in pairs):
        raise DataError("training split contains anomalous samples")
    model = train_qae([s for _, s in pairs], cfg.train_config())
    ws.out.mkdir(parents=True, exist_ok=True)
    model.save(ws.model_path)
    model.write_loss_history(ws.out / "loss_history.csv")
    return model


# -- encode -----------------------------------------------------------------


def encode(ws: Workspace, threads: int = 1) -> list:
    """Approximate encodings for the first n_normal / n_anomalous test samples.

    Each class forms its own warm-start chains so the parameters carried
    from one fit to the next come from a similar image.
    """
    cfg = ws.config
    ec = cfg.encoding
    pairs = _encode_images(_load_split(ws, "test"), cfg.ansatz.n_qubits)
    per_class = {
        Label.NORMAL: [p for p in pairs if p[0].label is Label.NORMAL][: ec.n_normal],
        Label.ANOMALOUS: [p for p in pairs if p[0].label is Label.ANOMALOUS][: ec.n_anomalous],
    }
    schedule = cfg.encoding_config()
    for lab, items in per_class.items():
        chains = max(1, min(ec.n_chains, len(items)))
        for c in range(chains):
            log.info("%s chain %d order: %s", lab.value, c, " ".join(im.source_id for im, _ in items[c::chains]))

    def run(items):
        return encode_chains([s for _, s in items], [im.source_id for im, _ in items], schedule, ec.n_chains)

    with ThreadPoolExecutor(max_workers=max(1, min(threads, 2))) as pool:
        results = list(pool.map(run, per_class.values()))
    encodings = results[0] + results[1]
    labels = {im.source_id: im.label for items in per_class.values() for im, _ in items}

    ws.out.mkdir(parents=True, exist_ok=True)
    meta = {"n_qubits": cfg.ansatz.n_qubits, "n_layers": ec.n_layers, "threshold": ec.threshold, "n_chains": ec.n_chains}
    save_encodings(ws.encodings_path, encodings, meta)
    with open(ws.out / "encoding_report.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source_id", "label", "residual", "accepted"])
        for e in encodings:
            w.writerow([e.source_id, labels[e.source_id].value, repr(float(e.residual)), int(e.accepted)])
    return encodings


# -- eval -------------------------------------------------------------------


def scoring_mode(ws: Workspace, m: ModeSection) -> ScoringMode:
    cfg = ws.config
    noise = None
    if m.noisy:
        required = _cnot_pairs(ws, m)
        model = load_calibration(ws.path(cfg.noise.calibration), required, cfg.seeds.eval)
        noise = model.scaled(cfg.noise.scale * m.noise_scale)
    return ScoringMode(
        name=m.name,
        kind=m.kind,
        loss=m.loss,
        input=m.input,
        n_shots=m.n_shots,
        noise=noise,
        seed=cfg.seeds.eval,
        generalized_all_ones=m.generalized_all_ones,
    )


def _cnot_pairs(ws: Workspace, m: ModeSection) -> list[tuple[int, int]]:
    cfg = ws.config
    pairs = set(build_encoder(cfg.ansatz_config()).cnot_pairs)
    if m.input == "approx":
        pairs |= set(build_approx_encoder(cfg.ansatz.n_qubits, cfg.encoding.n_layers).cnot_pairs)
    return sorted(pairs)


def _samples(ws: Workspace, need_approx: bool) -> tuple[list[Sample], list[Sample]]:
    """All exact test samples, and the subset with an accepted approximate encoding."""
    pairs = _encode_images(_load_split(ws, "test"), ws.config.ansatz.n_qubits)
    exact = [Sample(im.source_id, im.label, state) for im, state in pairs]
    if not need_approx:
        return exact, []
    if not ws.encodings_path.exists():
        raise DataError(f"{ws.encodings_path} is missing; run 'encode' first")
    encodings, _ = load_encodings(ws.encodings_path)
    by_id = {s.source_id: s for s in exact}
    approx = []
    for e in encodings:
        if not e.accepted:
            continue
        if e.source_id not in by_id:
            raise DataError(f"encoding {e.source_id} has no matching test image")
        s = by_id[e.source_id]
        approx.append(Sample(s.source_id, s.label, s.state, e))
    log.info("%d of %d approximate encodings accepted", len(approx), len(encodings))
    return exact, approx


def evaluate(ws: Workspace, threads: int = 1) -> dict:
    cfg = ws.config
    if not ws.model_path.exists():
        raise DataError(f"{ws.model_path} is missing; run 'train' first")
    model = TrainedModel.load(ws.model_path)
    modes = cfg.evaluation.modes
    exact, approx = _samples(ws, any(m.input == "approx" for m in modes))
    direction = Direction(cfg.evaluation.direction)
    metrics = {}
    for m in modes:
        mode = scoring_mode(ws, m)
        data = approx if m.input == "approx" else exact
        scores = score_dataset(model, data, mode, workers=threads)
        roc = roc_auc(scores, direction)
        write_scores_csv(ws.out / f"scores_{m.name}.csv", scores)
        write_roc_csv(ws.out / f"roc_{m.name}.csv", roc)
        if scores.histograms:
            write_histograms_csv(ws.out / f"counts_{m.name}.csv", scores.histograms)
        metrics[m.name] = metrics_document(scores, roc)
        log.info("%s: AUC %.4f", m.name, roc.auc)
    write_metrics(ws.out / "metrics.json", metrics)
    return metrics


def require_outputs(ws: Workspace, *names: str) -> None:
    missing = [n for n in names if not (ws.out / n).exists()]
    if missing:
        raise DataError(f"missing outputs in {ws.out}: {', '.join(missing)}")
