"""Amplitude encoding of feature vectors, exact and circuit-approximated."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .ansatz import CircuitSpec, build_approx_encoder
from .errors import DataError, UsageError
from .gradients import StateMSE, value_and_grad_batch
from .simulator import StateVector, init_ground
from .training import AdamState, adam_step


@dataclass
class FeatureVector:
    values: np.ndarray
    source_id: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(-1)

    @property
    def n_qubits(self) -> int:
        return self.values.size.bit_length() - 1

    @classmethod
    def normalized(cls, raw, source_id: str = "", n_qubits: int | None = None) -> "FeatureVector":
        """Zero-pad ``raw`` to 2**n_qubits (default: next power of two) and L2-normalize."""
        raw = np.asarray(raw, dtype=float).reshape(-1)
        if n_qubits is None:
            n_qubits = max(1, int(np.ceil(np.log2(max(raw.size, 2)))))
        dim = 1 << n_qubits
        if raw.size > dim:
            raise UsageError(f"{raw.size} features do not fit in {n_qubits} qubits")
        peak = np.max(np.abs(raw)) if raw.size else 0.0
        if not peak > 0 or not np.isfinite(peak):
            raise DataError(f"cannot normalize feature vector {source_id!r}: zero or non-finite norm")
        # rescaling by the peak first keeps tiny entries from underflowing when squared
        scaled = raw / peak
        out = np.zeros(dim)
        out[: raw.size] = scaled / np.linalg.norm(scaled)
        return cls(out, source_id)


def amplitude_encode_exact(features: FeatureVector) -> StateVector:
    v = features.values
    if v.size < 2 or v.size & (v.size - 1):
        raise UsageError(f"feature length {v.size} is not a power of two; pad first")
    norm = np.linalg.norm(v)
    if norm == 0:
        raise DataError("zero feature vector cannot be encoded")
    if abs(norm - 1) > 1e-10:
        raise UsageError(f"feature vector is not normalized (norm {norm})")
    return StateVector(v.astype(np.complex128))


@dataclass
class EncodingTrainConfig:
    epochs: int = 15
    steps_per_epoch: int = 100
    lr: float = 0.01
    threshold: float = 0.1
    n_layers: int = 4


@dataclass
class ApproxEncoding:
    theta: np.ndarray
    residual: float
    accepted: bool
    source_id: str = ""

    def to_record(self) -> dict:
        return {
            "source_id": self.source_id,
            "theta": [float(x) for x in self.theta],
            "residual": float(self.residual),
            "accepted": bool(self.accepted),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "ApproxEncoding":
        return cls(np.asarray(rec["theta"], dtype=float), float(rec["residual"]), bool(rec["accepted"]), rec["source_id"])


def train_approx_encoding_batch(
    targets: np.ndarray,
    warm_start: np.ndarray | None,
    schedule: EncodingTrainConfig,
) -> tuple[CircuitSpec, np.ndarray, np.ndarray]:
    """Fit one state-preparation circuit per row of ``targets`` in lockstep.

    Returns the circuit, the best parameters per row and the best residual
    per row. Rows are independent: Adam is elementwise and every row has
    its own angles.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=np.complex128))
    dim = targets.shape[1]
    n = dim.bit_length() - 1
    if dim != 1 << n:
        raise UsageError("target dimension is not a power of two")
    spec = build_approx_encoder(n, schedule.n_layers)
    b = targets.shape[0]
    if warm_start is None:
        theta = np.zeros((b, spec.n_params))
    else:
        theta = np.array(np.broadcast_to(warm_start, (b, spec.n_params)), dtype=float)
    ground = np.repeat(init_ground(n).amplitudes[None, :], b, axis=0)
    obs = StateMSE(targets)
    adam = AdamState.zeros(theta.shape)
    best_theta = theta.copy()
    best = np.full(b, np.inf)
    for _ in range(schedule.epochs * schedule.steps_per_epoch):
        values, grads = value_and_grad_batch(spec, theta, ground, obs)
        improved = values < best
        best[improved] = values[improved]
        best_theta[improved] = theta[improved]
        adam, theta = adam_step(adam, theta, grads, schedule.lr)
    values, _ = value_and_grad_batch(spec, theta, ground, obs)
    improved = values < best
    best[improved] = values[improved]
    best_theta[improved] = theta[improved]
    return spec, best_theta, best


def train_approx_encoding(
    target: StateVector,
    warm_start=None,
    schedule: EncodingTrainConfig | None = None,
    source_id: str = "",
) -> ApproxEncoding:
    schedule = schedule or EncodingTrainConfig()
    _, theta, resid = train_approx_encoding_batch(target.amplitudes[None, :], warm_start, schedule)
    return ApproxEncoding(theta[0], float(resid[0]), bool(resid[0] < schedule.threshold), source_id)


def encode_chains(
    targets: Sequence[StateVector],
    source_ids: Sequence[str],
    schedule: EncodingTrainConfig,
    n_chains: int = 1,
) -> list[ApproxEncoding]:
    """Warm-started encodings in dataset order.

    Sample i is split into chain ``i % n_chains``; within a chain each fit
    starts from the previous sample's parameters. Chains advance together
    as one simulator batch.
    """
    if len(targets) != len(source_ids):
        raise UsageError("targets and source_ids differ in length")
    if not targets:
        return []
    n_chains = max(1, min(n_chains, len(targets)))
    amps = np.stack([t.amplitudes for t in targets])
    out: list[ApproxEncoding | None] = [None] * len(targets)
    warm = None
    for start in range(0, len(targets), n_chains):
        rows = list(range(start, min(start + n_chains, len(targets))))
        w = None if warm is None else warm[: len(rows)]
        _, theta, resid = train_approx_encoding_batch(amps[rows], w, schedule)
        for k, i in enumerate(rows):
            out[i] = ApproxEncoding(theta[k], float(resid[k]), bool(resid[k] < schedule.threshold), source_ids[i])
        warm = theta
    return out


def save_encodings(path: str | Path, encodings: Sequence[ApproxEncoding], meta: dict | None = None) -> None:
    doc = {"meta": meta or {}, "records": [e.to_record() for e in encodings]}
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_encodings(path: str | Path) -> tuple[list[ApproxEncoding], dict]:
    doc = json.loads(Path(path).read_text())
    return [ApproxEncoding.from_record(r) for r in doc["records"]], doc.get("meta", {})
