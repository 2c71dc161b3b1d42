"""Experiment configuration document (YAML or JSON), validated up front."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .ansatz import AnsatzConfig
from .datagen.detector import DetectorConfig, GunConfig
from .encoding import EncodingTrainConfig
from .errors import ConfigurationError
from .training import TrainConfig


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DigitsSection(_Strict):
    images: Optional[str] = None
    labels: Optional[str] = None
    # rendered stand-in digits per class, used when no IDX files are given
    synthetic_per_class: int = Field(1400, ge=1)
    normal_digit: int = Field(0, ge=0, le=9)
    anomalous_digit: int = Field(1, ge=0, le=9)

    @model_validator(mode="after")
    def _paths_together(self):
        if (self.images is None) != (self.labels is None):
            raise ValueError("digits.images and digits.labels must be given together")
        if self.normal_digit == self.anomalous_digit:
            raise ValueError("normal and anomalous digits must differ")
        return self


class DetectorSection(_Strict):
    n_layers: int = 20
    n_tubes: int = 333
    layer_radii: Optional[list[float]] = None
    sector_width: float = 0.39269908169872414
    smear_sigma: float = 0.5
    occupancy: float = 0.02
    bending: float = 0.15
    output_cols: int = 100


class GunSection(_Strict):
    mass_range: tuple[float, float] = (0.5, 5.0)
    momentum_range: tuple[float, float] = (10.0, 50.0)
    n_muons_range: tuple[int, int] = (2, 10)
    normal_radius_cm: tuple[float, float] = (0.0, 20.0)
    anomalous_radius_cm: tuple[float, float] = (250.0, 450.0)
    direction_spread: float = 0.5


class DatasetSection(_Strict):
    kind: Literal["digits", "detector"]
    n_train: int = Field(1000, ge=1)
    n_test_normal: int = Field(200, ge=1)
    n_test_anomalous: int = Field(200, ge=1)
    digits: DigitsSection = DigitsSection()
    detector: DetectorSection = DetectorSection()
    gun: GunSection = GunSection()


class AnsatzSection(_Strict):
    n_qubits: int
    n_layers: int
    n_compressed: int = 3
    topology: Literal["ring", "line"] = "ring"
    final_rotations_on_compressed: bool = True
    cnot_direction: Literal["up", "down"] = "up"


class TrainingSection(_Strict):
    epochs: int = Field(20, ge=1)
    batch_size: int = Field(20, ge=1)
    lr_initial: float = Field(0.4, gt=0)
    lr_final: float = Field(0.001, gt=0)
    lr_shape: Literal["geometric", "linear"] = "geometric"
    loss: Literal["ground_sum", "all_ones"] = "ground_sum"


class EncodingSection(_Strict):
    epochs: int = Field(15, ge=1)
    steps_per_epoch: int = Field(100, ge=1)
    lr: float = Field(0.01, gt=0)
    threshold: float = Field(0.1, gt=0)
    n_layers: int = Field(4, ge=1)
    n_chains: int = Field(10, ge=1)
    n_normal: int = Field(100, ge=0)
    n_anomalous: int = Field(100, ge=0)


class NoiseSection(_Strict):
    calibration: str
    scale: float = Field(1.0, ge=0)


class ModeSection(_Strict):
    name: str
    kind: Literal["exact", "shots"] = "exact"
    loss: Literal["ground_sum", "all_ones"] = "ground_sum"
    input: Literal["exact", "approx"] = "exact"
    n_shots: int = Field(2048, ge=1)
    noisy: bool = False
    # multiplies the calibration error rates for this mode only
    noise_scale: float = Field(1.0, ge=0)
    generalized_all_ones: bool = False

    @field_validator("name")
    @classmethod
    def _safe_name(cls, v: str) -> str:
        if not v.replace("_", "").replace("-", "").isalnum():
            raise ValueError("mode names may contain letters, digits, '-' and '_' only")
        return v


class EvaluationSection(_Strict):
    direction: Literal["high", "low"] = "high"
    modes: list[ModeSection] = [ModeSection(name="exact")]

    @model_validator(mode="after")
    def _unique(self):
        names = [m.name for m in self.modes]
        if len(set(names)) != len(names):
            raise ValueError("evaluation mode names must be unique")
        return self


class SeedsSection(_Strict):
    data: int = 0
    train: int = 0
    encode: int = 0
    eval: int = 0


class ExperimentConfig(_Strict):
    output_dir: str = "runs/experiment"
    seeds: SeedsSection = SeedsSection()
    dataset: DatasetSection
    ansatz: AnsatzSection
    training: TrainingSection = TrainingSection()
    encoding: EncodingSection = EncodingSection()
    noise: Optional[NoiseSection] = None
    evaluation: EvaluationSection = EvaluationSection()

    @model_validator(mode="after")
    def _consistent(self):
        need = 6 if self.dataset.kind == "digits" else _detector_qubits(self.dataset.detector)
        if self.ansatz.n_qubits != need:
            raise ValueError(f"ansatz.n_qubits is {self.ansatz.n_qubits} but {self.dataset.kind} images need {need}")
        if any(m.noisy for m in self.evaluation.modes) and self.noise is None:
            raise ValueError("a noisy evaluation mode needs a 'noise' section")
        return self

    # -- typed views -------------------------------------------------------

    def ansatz_config(self) -> AnsatzConfig:
        return AnsatzConfig(**self.ansatz.model_dump())

    def train_config(self) -> TrainConfig:
        return TrainConfig(ansatz=self.ansatz_config(), seed=self.seeds.train, **self.training.model_dump())

    def encoding_config(self) -> EncodingTrainConfig:
        e = self.encoding
        return EncodingTrainConfig(e.epochs, e.steps_per_epoch, e.lr, e.threshold, e.n_layers)

    def detector_config(self) -> DetectorConfig:
        d = self.dataset.detector.model_dump()
        if d["layer_radii"] is None:
            del d["layer_radii"]
        return DetectorConfig(**d)

    def gun_config(self) -> GunConfig:
        return GunConfig(**self.dataset.gun.model_dump())


def _detector_qubits(d: DetectorSection) -> int:
    return max(1, (d.n_layers * d.output_cols - 1).bit_length())


def load_config(path: str | Path) -> tuple[ExperimentConfig, Path]:
    """Parse and validate a config; returns it with the directory that
    relative paths inside it are resolved against."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from exc
    return parse_config(raw), path.resolve().parent


def parse_config(raw) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigurationError("config document must be a mapping")
    try:
        cfg = ExperimentConfig.model_validate(raw)
        # run the domain validators too, so bad ranges fail before any compute
        cfg.train_config()
        if cfg.dataset.kind == "detector":
            cfg.detector_config()
            cfg.gun_config()
    except ValidationError as exc:
        raise ConfigurationError(f"invalid config:\n{exc}") from None
    return cfg
