"""Quantum-autoencoder anomaly detection on a dense statevector simulator."""

from .ansatz import AnsatzConfig, CircuitSpec, Topology, build_approx_encoder, build_encoder, run_circuit
from .encoding import FeatureVector, amplitude_encode_exact, train_approx_encoding
from .errors import ConfigurationError, DataError, FormatError, NumericError, QadError, UsageError
from .evaluation import Direction, ScoreSet, ScoringMode, roc_auc, score_dataset, summarize
from .gradients import BasisProjector, GroundProjectorSum, StateMSE, evaluate, gradient_adjoint
from .simulator import Gate, GateKind, ShotHistogram, StateVector, apply_gate, init_ground, sample_shots
from .training import TrainConfig, TrainedModel, qae_loss, train_qae

__version__ = "0.1.0"

__all__ = [
    "AnsatzConfig",
    "BasisProjector",
    "CircuitSpec",
    "ConfigurationError",
    "DataError",
    "Direction",
    "FeatureVector",
    "FormatError",
    "Gate",
    "GateKind",
    "GroundProjectorSum",
    "NumericError",
    "QadError",
    "ScoreSet",
    "ScoringMode",
    "ShotHistogram",
    "StateMSE",
    "StateVector",
    "Topology",
    "TrainConfig",
    "TrainedModel",
    "UsageError",
    "amplitude_encode_exact",
    "apply_gate",
    "build_approx_encoder",
    "build_encoder",
    "evaluate",
    "gradient_adjoint",
    "init_ground",
    "qae_loss",
    "roc_auc",
    "run_circuit",
    "sample_shots",
    "score_dataset",
    "summarize",
    "train_approx_encoding",
    "train_qae",
]
