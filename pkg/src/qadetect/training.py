"""Adam training of the autoencoder's compression loss."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .ansatz import AnsatzConfig, CircuitSpec, Topology, build_encoder
from .errors import ConfigurationError, NumericError, UsageError
from .gradients import BasisProjector, GroundProjectorSum, evaluate_batch, value_and_grad_batch
from .simulator import StateVector

log = logging.getLogger(__name__)

LOSS_KINDS = ("ground_sum", "all_ones")


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, shape, **kw) -> "AdamState":
        return cls(np.zeros(shape), np.zeros(shape), **kw)


def adam_step(state: AdamState, theta: np.ndarray, grad: np.ndarray, lr: float) -> tuple[AdamState, np.ndarray]:
    """One bias-corrected Adam update. Works elementwise, so ``theta`` may be
    a matrix of independent parameter vectors."""
    theta = np.asarray(theta, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if theta.shape != grad.shape or state.m.shape != theta.shape:
        raise UsageError(f"shape mismatch: theta {theta.shape}, grad {grad.shape}, moments {state.m.shape}")
    t = state.t + 1
    m = state.beta1 * state.m + (1 - state.beta1) * grad
    v = state.beta2 * state.v + (1 - state.beta2) * grad**2
    m_hat = m / (1 - state.beta1**t)
    v_hat = v / (1 - state.beta2**t)
    new_theta = theta - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return replace(state, m=m, v=v, t=t), new_theta


@dataclass
class TrainConfig:
    ansatz: AnsatzConfig
    epochs: int = 20
    batch_size: int = 20
    lr_initial: float = 0.4
    lr_final: float = 0.001
    lr_shape: str = "geometric"
    seed: int = 0
    loss: str = "ground_sum"

    def __post_init__(self):
        if isinstance(self.ansatz, dict):
            self.ansatz = AnsatzConfig(**self.ansatz)
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigurationError("epochs and batch_size must be >= 1")
        if not self.lr_initial >= self.lr_final > 0:
            raise ConfigurationError("need lr_initial >= lr_final > 0")
        if self.lr_shape not in ("geometric", "linear"):
            raise ConfigurationError("lr_shape must be 'geometric' or 'linear'")
        if self.loss not in LOSS_KINDS:
            raise ConfigurationError(f"loss must be one of {LOSS_KINDS}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ansatz"]["topology"] = self.ansatz.topology.value
        return d


def lr_schedule(epoch: int, config: TrainConfig) -> float:
    if not 0 <= epoch < config.epochs:
        raise UsageError(f"epoch {epoch} outside [0, {config.epochs})")
    if config.epochs == 1:
        return config.lr_initial
    frac = epoch / (config.epochs - 1)
    if config.lr_shape == "linear":
        return config.lr_initial + (config.lr_final - config.lr_initial) * frac
    return config.lr_initial * (config.lr_final / config.lr_initial) ** frac


def training_observable(config: TrainConfig):
    qubits = config.ansatz.compressed_qubits
    if config.loss == "all_ones":
        return BasisProjector("1" * len(qubits), qubits)
    return GroundProjectorSum(qubits)


@dataclass
class TrainedModel:
    spec: CircuitSpec
    theta: np.ndarray
    config: TrainConfig
    loss_history: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        if self.theta.shape != (self.spec.n_params,):
            raise UsageError("theta length does not match the circuit")

    @property
    def compressed_qubits(self) -> tuple[int, ...]:
        return self.config.ansatz.compressed_qubits

    def save(self, path: str | Path) -> None:
        doc = {
            "circuit": self.spec.to_dict(),
            "theta": [float(x) for x in self.theta],
            "config": self.config.to_dict(),
            "loss_history": [float(x) for x in self.loss_history],
        }
        Path(path).write_text(json.dumps(doc, indent=1) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "TrainedModel":
        doc = json.loads(Path(path).read_text())
        cfg = dict(doc["config"])
        cfg["ansatz"] = AnsatzConfig(**{**cfg["ansatz"], "topology": Topology(cfg["ansatz"]["topology"])})
        return cls(CircuitSpec.from_dict(doc["circuit"]), doc["theta"], TrainConfig(**cfg), doc["loss_history"])

    def write_loss_history(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "mean_loss"])
            for e, v in enumerate(self.loss_history):
                w.writerow([e, repr(float(v))])


def _stack(dataset) -> np.ndarray:
    if isinstance(dataset, np.ndarray):
        return np.atleast_2d(dataset).astype(np.complex128)
    return np.stack([s.amplitudes if isinstance(s, StateVector) else np.asarray(s) for s in dataset]).astype(np.complex128)


def train_qae(
    dataset: Sequence[StateVector] | np.ndarray,
    config: TrainConfig,
    callback: Callable[[int, float], None] | None = None,
) -> TrainedModel:
    """Train the encoder on normal-class states.

    Each epoch shuffles the data, takes floor(N / batch_size) steps on the
    mean per-sample gradient and records the mean batch loss. If N is below
    the batch size the whole dataset forms a single batch.
    """
    states = _stack(dataset)
    if states.shape[0] == 0:
        raise UsageError("empty training dataset")
    spec = build_encoder(config.ansatz)
    if states.shape[1] != 1 << spec.n_qubits:
        raise UsageError(f"dataset states have dimension {states.shape[1]}, encoder expects {1 << spec.n_qubits}")
    obs = training_observable(config)
    sign = -1.0 if config.loss == "all_ones" else 1.0
    offset = 1.0 if config.loss == "all_ones" else 0.0

    rng = np.random.default_rng(config.seed)
    theta = rng.uniform(0.0, 2 * np.pi, spec.n_params)
    adam = AdamState.zeros(spec.n_params)
    n = states.shape[0]
    batch = min(config.batch_size, n)
    steps = n // batch
    history = []
    for epoch in range(config.epochs):
        lr = lr_schedule(epoch, config)
        order = rng.permutation(n)
        losses = []
        for s in range(steps):
            idx = order[s * batch:(s + 1) * batch]
            values, grads = value_and_grad_batch(spec, theta, states[idx], obs)
            losses.append(offset + sign * values.mean())
            adam, theta = adam_step(adam, theta, sign * grads.mean(axis=0), lr)
        epoch_loss = float(np.mean(losses))
        if not np.isfinite(epoch_loss) or not np.all(np.isfinite(theta)):
            raise NumericError(f"non-finite loss at epoch {epoch}")
        history.append(epoch_loss)
        log.info("epoch %d lr=%.4g loss=%.5f", epoch, lr, epoch_loss)
        if callback:
            callback(epoch, epoch_loss)
    return TrainedModel(spec, theta, config, history)


def qae_loss_batch(model: TrainedModel, states) -> np.ndarray:
    return evaluate_batch(model.spec, model.theta, _stack(states), GroundProjectorSum(model.compressed_qubits))


def qae_loss(model: TrainedModel, state: StateVector) -> float:
    """Sum over compressed qubits of P(qubit reads |0>); lies in [0, n_compressed]."""
    if state.n_qubits != model.spec.n_qubits:
        raise UsageError("state and model qubit counts differ")
    return float(qae_loss_batch(model, [state])[0])
