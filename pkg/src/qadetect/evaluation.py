"""Scoring datasets with a trained encoder, ROC curves and summary statistics."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .ansatz import build_approx_encoder, run_circuit
from .datagen.images import Label
from .encoding import ApproxEncoding
from .errors import UsageError
from .gradients import BasisProjector, evaluate_batch
from .noise import NoiseModel, noisy_loss_from_counts, sample_noisy
from .simulator import ShotHistogram, StateVector, init_ground
from .training import TrainedModel, qae_loss_batch


class Direction(str, Enum):
    HIGH_LOSS_IS_ANOMALOUS = "high"
    LOW_LOSS_IS_ANOMALOUS = "low"

    def flipped(self) -> "Direction":
        return Direction.LOW_LOSS_IS_ANOMALOUS if self is Direction.HIGH_LOSS_IS_ANOMALOUS else Direction.HIGH_LOSS_IS_ANOMALOUS


@dataclass
class Sample:
    """One item to score: the exact encoded state and/or its approximate encoding."""

    source_id: str
    label: Label
    state: StateVector | None = None
    encoding: ApproxEncoding | None = None


@dataclass
class ScoringMode:
    """``kind`` is ``exact`` (expectation values) or ``shots`` (sampled counts).

    ``loss`` is ``ground_sum`` (sum of P(|0>) over compressed qubits) or
    ``all_ones`` (one minus P(all compressed qubits read 1)). ``input``
    picks the exact amplitude-encoded state or the approximate-encoding
    circuit run from |0...0>.
    """

    name: str = "exact"
    kind: str = "exact"
    loss: str = "ground_sum"
    input: str = "exact"
    n_shots: int = 2048
    noise: NoiseModel | None = None
    seed: int = 0
    generalized_all_ones: bool = False

    def __post_init__(self):
        if self.kind not in ("exact", "shots"):
            raise UsageError(f"unknown scoring kind {self.kind!r}")
        if self.loss not in ("ground_sum", "all_ones"):
            raise UsageError(f"unknown loss {self.loss!r}")
        if self.input not in ("exact", "approx"):
            raise UsageError(f"unknown input {self.input!r}")
        if self.kind == "shots" and self.n_shots <= 0:
            raise UsageError("n_shots must be positive")

    def describe(self) -> str:
        if self.kind == "exact":
            return "ExactExpectation"
        return f"Shots({self.n_shots}, noise={'yes' if self.noise and not self.noise.is_zero() else 'no'})"


@dataclass
class ScoreSet:
    ids: list[str]
    labels: list[Label]
    losses: np.ndarray
    mode: str = "ExactExpectation"
    histograms: dict[str, ShotHistogram] = field(default_factory=dict)

    def __post_init__(self):
        self.labels = [Label(x) for x in self.labels]
        self.losses = np.asarray(self.losses, dtype=float)
        if not (len(self.ids) == len(self.labels) == self.losses.size):
            raise UsageError("ids, labels and losses differ in length")
        if not np.all(np.isfinite(self.losses)):
            raise UsageError("non-finite loss in score set")

    def of(self, label: Label) -> np.ndarray:
        mask = np.array([x is Label(label) for x in self.labels], dtype=bool)
        return self.losses[mask]

    @classmethod
    def from_arrays(cls, normal, anomalous, mode: str = "ExactExpectation") -> "ScoreSet":
        normal, anomalous = np.asarray(normal, float), np.asarray(anomalous, float)
        ids = [f"n{i}" for i in range(normal.size)] + [f"a{i}" for i in range(anomalous.size)]
        labels = [Label.NORMAL] * normal.size + [Label.ANOMALOUS] * anomalous.size
        return cls(ids, labels, np.concatenate([normal, anomalous]), mode)


@dataclass
class RocResult:
    """ROC points swept from the strictest threshold to the loosest.

    ``thresholds`` are in loss units; a sample is called anomalous when its
    loss is >= threshold (high direction) or <= threshold (low direction).
    """

    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float
    direction: Direction


def _sample_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _input_state(model: TrainedModel, sample: Sample, mode: ScoringMode) -> StateVector:
    if mode.input == "exact":
        if sample.state is None:
            raise UsageError(f"sample {sample.source_id} has no exact state")
        return sample.state
    if sample.encoding is None:
        raise UsageError(f"sample {sample.source_id} has no approximate encoding")
    n = model.spec.n_qubits
    prep = build_approx_encoder(n, _approx_layers(n, sample.encoding.theta.size))
    return run_circuit(prep, sample.encoding.theta, init_ground(n))


def _approx_layers(n_qubits: int, n_params: int) -> int:
    layers, rem = divmod(n_params, 3 * n_qubits)
    if rem or layers < 2:
        raise UsageError(f"{n_params} parameters do not fit an approximate encoder on {n_qubits} qubits")
    return layers - 1


def score_dataset(
    model: TrainedModel,
    dataset: Sequence[Sample],
    mode: ScoringMode | None = None,
    workers: int = 1,
) -> ScoreSet:
    """Loss per sample. Shot-based samples are independent and may run on
    ``workers`` threads; each draws from its own seed derived from the
    mode seed and its position, so the result does not depend on ``workers``."""
    mode = mode or ScoringMode()
    qubits = model.compressed_qubits
    if mode.kind == "shots" and len(qubits) != 3 and not mode.generalized_all_ones:
        raise UsageError("shot-based scoring is defined for 3 compressed qubits; set generalized_all_ones")
    ids = [s.source_id for s in dataset]
    labels = [s.label for s in dataset]
    if not dataset:
        return ScoreSet([], [], np.zeros(0), mode.describe())

    if mode.kind == "exact":
        states = np.stack([_input_state(model, s, mode).amplitudes for s in dataset])
        if mode.loss == "ground_sum":
            losses = qae_loss_batch(model, states)
        else:
            losses = 1.0 - evaluate_batch(model.spec, model.theta, states, BasisProjector("1" * len(qubits), qubits))
        return ScoreSet(ids, labels, losses, mode.describe())

    noise = mode.noise or NoiseModel.noiseless(model.spec.n_qubits)

    def one(i: int) -> tuple[float, ShotHistogram]:
        return _score_shots(model, dataset[i], mode, noise, _sample_seed(mode.seed, i))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(len(dataset))))
    else:
        results = [one(i) for i in range(len(dataset))]
    losses = np.array([r[0] for r in results])
    hists = {s.source_id: r[1] for s, r in zip(dataset, results)}
    return ScoreSet(ids, labels, losses, mode.describe(), hists)


def _score_shots(model: TrainedModel, s: Sample, mode: ScoringMode, noise: NoiseModel, seed: int) -> tuple[float, ShotHistogram]:
    n = model.spec.n_qubits
    qubits = model.compressed_qubits
    if mode.input == "approx":
        if s.encoding is None:
            raise UsageError(f"sample {s.source_id} has no approximate encoding")
        # one circuit: state preparation followed by the encoder
        prep = build_approx_encoder(n, _approx_layers(n, s.encoding.theta.size))
        spec = prep.then(model.spec)
        theta = np.concatenate([s.encoding.theta, model.theta])
        start = init_ground(n)
    else:
        spec, theta, start = model.spec, model.theta, _input_state(model, s, mode)
    hist = sample_noisy(spec, theta, start, noise, qubits, mode.n_shots, seed)
    if mode.loss == "all_ones":
        return noisy_loss_from_counts(hist), hist
    zeros = sum(c * b.count("0") for b, c in hist.counts.items())
    return zeros / hist.total_shots, hist


def roc_auc(scores: ScoreSet, direction: Direction | str = Direction.HIGH_LOSS_IS_ANOMALOUS) -> RocResult:
    direction = Direction(direction)
    normal, anomalous = scores.of(Label.NORMAL), scores.of(Label.ANOMALOUS)
    if normal.size == 0 or anomalous.size == 0:
        raise UsageError("ROC needs both normal and anomalous samples")
    sign = 1.0 if direction is Direction.HIGH_LOSS_IS_ANOMALOUS else -1.0
    s_norm, s_anom = sign * normal, sign * anomalous
    cuts = np.unique(np.concatenate([s_norm, s_anom]))[::-1]
    # predicted anomalous iff oriented score >= cut; tied samples cross together
    tp = np.searchsorted(np.sort(s_anom), cuts, side="left")
    fp = np.searchsorted(np.sort(s_norm), cuts, side="left")
    tpr = np.concatenate([[0.0], (s_anom.size - tp) / s_anom.size, [1.0]])
    fpr = np.concatenate([[0.0], (s_norm.size - fp) / s_norm.size, [1.0]])
    thresholds = np.concatenate([[np.inf * sign], sign * cuts, [-np.inf * sign]])
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2))
    return RocResult(thresholds, fpr, tpr, auc, direction)


def summarize(scores: ScoreSet) -> dict[str, dict[str, float]]:
    """Per-class mean and RMS spread (standard deviation about the class mean)."""
    out = {}
    for label in Label:
        vals = scores.of(label)
        if vals.size == 0:
            continue
        out[label.value] = {"n": int(vals.size), "mean": float(vals.mean()), "rms": float(vals.std())}
    if not out:
        raise UsageError("cannot summarize an empty score set")
    return out


def write_scores_csv(path: str | Path, scores: ScoreSet) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "label", "loss"])
        for i, lab, loss in zip(scores.ids, scores.labels, scores.losses):
            w.writerow([i, lab.value, repr(float(loss))])


def read_scores_csv(path: str | Path, mode: str = "") -> ScoreSet:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return ScoreSet([r["id"] for r in rows], [r["label"] for r in rows], [float(r["loss"]) for r in rows], mode)


def write_roc_csv(path: str | Path, roc: RocResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["threshold", "fpr", "tpr"])
        for t, f, p in zip(roc.thresholds, roc.fpr, roc.tpr):
            w.writerow([repr(float(t)), repr(float(f)), repr(float(p))])


def write_histograms_csv(path: str | Path, histograms: dict[str, ShotHistogram]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "bitstring", "count"])
        for sid, h in histograms.items():
            k = len(h.measured_qubits)
            for idx, c in enumerate(h.to_array()):
                w.writerow([sid, format(idx, f"0{k}b"), int(c)])


def metrics_document(scores: ScoreSet, roc: RocResult) -> dict:
    return {"mode": scores.mode, "direction": roc.direction.value, "auc": roc.auc, "summary": summarize(scores)}


def write_metrics(path: str | Path, metrics: dict) -> None:
    Path(path).write_text(json.dumps(metrics, indent=1, sort_keys=True) + "\n")
