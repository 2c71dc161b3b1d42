"""Finite-shot execution with calibration-driven readout and CNOT errors.

Every shot is a Monte Carlo trajectory: after each CNOT on (a, b) a uniformly
random non-identity two-qubit Pauli is inserted with that pair's error
probability, an outcome is drawn from the trajectory's final state, and each
measured bit is flipped with its readout probability. Shots that drew the
same error pattern are simulated together as one state, which keeps the
sampling exact while the number of statevector runs stays small.

Calibration document (JSON or YAML)::

    date: "2022-10-19"
    qubits:
      - {qubit: 0, readout_error: 0.0059}                  # symmetric flip
      - {qubit: 1, prob_meas1_prep0: 0.01, prob_meas0_prep1: 0.03}
    cnot_errors:
      - {qubits: [0, 1], error: 0.0033}                    # unordered pair
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from .ansatz import CircuitSpec, RotationBlock, _check_theta
from .errors import ConfigurationError, FormatError, UsageError
from .simulator import (
    GateKind,
    ShotHistogram,
    StateVector,
    apply_gate_batch,
    apply_pauli_batch,
    apply_unitary_batch,
    check_qubits,
    marginal_batch,
    sample_counts,
    shot_streams,
)

PAULI_LABELS = "IXYZ"


def _pair(a: int, b: int) -> tuple[int, int]:
    return (min(a, b), max(a, b))


def _prob(x, what: str) -> float:
    try:
        x = float(x)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{what}: {x!r} is not a number") from None
    if not 0.0 <= x <= 1.0:
        raise ConfigurationError(f"{what}: probability {x} outside [0, 1]")
    return x


@dataclass
class NoiseModel:
    """``readout_flip[q] = (p(read 1 | was 0), p(read 0 | was 1))``;
    ``cnot_error`` is keyed by the sorted qubit pair."""

    readout_flip: dict[int, tuple[float, float]] = field(default_factory=dict)
    cnot_error: dict[tuple[int, int], float] = field(default_factory=dict)
    seed: int = 0
    date: str = ""

    def __post_init__(self):
        self.readout_flip = {
            int(q): (_prob(p[0], f"readout q{q}"), _prob(p[1], f"readout q{q}")) for q, p in self.readout_flip.items()
        }
        self.cnot_error = {_pair(*k): _prob(v, f"cnot {k}") for k, v in self.cnot_error.items()}

    @classmethod
    def noiseless(cls, n_qubits: int) -> "NoiseModel":
        pairs = {_pair(a, b): 0.0 for a in range(n_qubits) for b in range(a + 1, n_qubits)}
        return cls({q: (0.0, 0.0) for q in range(n_qubits)}, pairs)

    def cnot_probability(self, control: int, target: int) -> float:
        try:
            return self.cnot_error[_pair(control, target)]
        except KeyError:
            raise ConfigurationError(f"noise model has no CNOT error for pair {_pair(control, target)}") from None

    def readout(self, qubit: int) -> tuple[float, float]:
        try:
            return self.readout_flip[qubit]
        except KeyError:
            raise ConfigurationError(f"noise model has no readout error for qubit {qubit}") from None

    def scaled(self, factor: float) -> "NoiseModel":
        """All error probabilities multiplied by ``factor`` (capped at 1)."""
        return NoiseModel(
            {q: (min(1.0, a * factor), min(1.0, b * factor)) for q, (a, b) in self.readout_flip.items()},
            {k: min(1.0, v * factor) for k, v in self.cnot_error.items()},
            self.seed,
            self.date,
        )

    def is_zero(self) -> bool:
        return not any(self.cnot_error.values()) and not any(p for pair in self.readout_flip.values() for p in pair)

    def to_document(self) -> dict:
        qubits = []
        for q, (p01, p10) in sorted(self.readout_flip.items()):
            qubits.append({"qubit": q, "prob_meas1_prep0": p01, "prob_meas0_prep1": p10})
        pairs = [{"qubits": list(k), "error": v} for k, v in sorted(self.cnot_error.items())]
        return {"date": self.date, "qubits": qubits, "cnot_errors": pairs}


def load_calibration(document, required_pairs: Sequence[tuple[int, int]] = (), seed: int = 0) -> NoiseModel:
    """Build a NoiseModel from a calibration document (dict or file path)."""
    if isinstance(document, (str, Path)):
        text = Path(document).read_text()
        try:
            document = json.loads(text) if str(document).endswith(".json") else yaml.safe_load(text)
        except (json.JSONDecodeError, yaml.YAMLError) as exc:
            raise FormatError(f"cannot parse calibration {document}: {exc}") from exc
    if not isinstance(document, dict) or "qubits" not in document or "cnot_errors" not in document:
        raise FormatError("calibration document needs 'qubits' and 'cnot_errors'")
    readout = {}
    for rec in document["qubits"]:
        q = int(rec["qubit"])
        if "readout_error" in rec:
            p = _prob(rec["readout_error"], f"readout_error q{q}")
            readout[q] = (p, p)
        else:
            readout[q] = (
                _prob(rec["prob_meas1_prep0"], f"prob_meas1_prep0 q{q}"),
                _prob(rec["prob_meas0_prep1"], f"prob_meas0_prep1 q{q}"),
            )
    cnot = {}
    for rec in document["cnot_errors"]:
        a, b = rec["qubits"]
        cnot[_pair(int(a), int(b))] = _prob(rec["error"], f"cnot error {a}-{b}")
    model = NoiseModel(readout, cnot, seed, str(document.get("date", "")))
    for a, b in required_pairs:
        model.cnot_probability(a, b)
    return model


def save_calibration(path: str | Path, model: NoiseModel) -> None:
    Path(path).write_text(json.dumps(model.to_document(), indent=1) + "\n")


def _run_with_errors(spec: CircuitSpec, theta: np.ndarray, psi: np.ndarray, patterns: np.ndarray) -> None:
    """Run ``spec`` on rows of ``psi``; ``patterns[r, k]`` is the Pauli code
    (0 = none, 1..15 = 4*pa + pb) inserted after the k-th CNOT for row r."""
    n = spec.n_qubits
    k = 0
    for op in spec.ops:
        if isinstance(op, RotationBlock):
            apply_unitary_batch(psi, n, op.qubit, op.fused(theta)[0])
            continue
        apply_gate_batch(psi, n, op.kind, op.targets, op.angle)
        if op.kind is not GateKind.CNOT:
            continue
        codes = patterns[:, k]
        k += 1
        if not codes.any():
            continue
        for qubit, part in zip(op.targets, (codes // 4, codes % 4)):
            for label in (1, 2, 3):
                rows = np.flatnonzero(part == label)
                if rows.size:
                    sub = psi[rows]
                    apply_pauli_batch(sub, n, qubit, PAULI_LABELS[label])
                    psi[rows] = sub


def noisy_distribution_patterns(
    spec: CircuitSpec, theta, state: StateVector, noise: NoiseModel, n_shots: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Draw each shot's gate-error pattern; return (unique patterns, shot counts)."""
    pairs = spec.cnot_pairs
    p = np.array([noise.cnot_probability(a, b) for a, b in pairs])
    if not pairs or not p.any():
        return np.zeros((1, len(pairs)), dtype=np.int64), np.array([n_shots])
    hit = rng.random((n_shots, len(pairs))) < p
    which = rng.integers(1, 16, size=(n_shots, len(pairs)))
    codes = np.where(hit, which, 0)
    uniq, counts = np.unique(codes, axis=0, return_counts=True)
    return uniq, counts


def sample_noisy(
    spec: CircuitSpec,
    theta,
    state: StateVector,
    noise: NoiseModel,
    measured: Sequence[int],
    n_shots: int,
    seed: int,
) -> ShotHistogram:
    if n_shots <= 0:
        raise UsageError("n_shots must be positive")
    if state.n_qubits != spec.n_qubits:
        raise UsageError("state and circuit qubit counts differ")
    measured = check_qubits(measured, spec.n_qubits)
    theta = _check_theta(spec, theta)
    rng_meas, rng_gate, rng_ro = shot_streams(seed)
    patterns, shots = noisy_distribution_patterns(spec, theta, state, noise, n_shots, rng_gate)
    psi = np.repeat(state.amplitudes[None, :], patterns.shape[0], axis=0)
    _run_with_errors(spec, theta, psi, patterns)
    probs = marginal_batch(psi, spec.n_qubits, measured)
    counts = np.zeros(probs.shape[1], dtype=np.int64)
    for row, n_row in zip(probs, shots):
        counts += sample_counts(row, int(n_row), rng_meas)

    readout = np.array([noise.readout(q) for q in measured])
    if readout.any():
        k = len(measured)
        outcomes = np.repeat(np.arange(counts.size), counts)
        bits = (outcomes[:, None] >> np.arange(k - 1, -1, -1)) & 1
        p_flip = np.where(bits == 0, readout[:, 0], readout[:, 1])
        bits ^= (rng_ro.random(bits.shape) < p_flip).astype(bits.dtype)
        flipped = bits @ (1 << np.arange(k - 1, -1, -1))
        counts = np.bincount(flipped, minlength=counts.size)
    return ShotHistogram.from_array(measured, counts)


def noisy_loss_from_counts(hist: ShotHistogram) -> float:
    """One minus the observed frequency of the all-ones outcome."""
    if not hist.measured_qubits:
        raise UsageError("histogram has no measured qubits")
    return 1.0 - hist.frequency("1" * len(hist.measured_qubits))
