"""Layered parametrized circuits: the autoencoder encoder and the
approximate amplitude-encoding circuit."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, UsageError
from .simulator import (
    MAX_QUBITS,
    Gate,
    GateKind,
    StateVector,
    apply_gate_batch,
    apply_unitary_batch,
    rotation_matrices,
)

ROTATION_ORDER = (GateKind.RX, GateKind.RY, GateKind.RZ)


class Topology(str, Enum):
    RING = "ring"
    LINE = "line"


@dataclass(frozen=True)
class GateTemplate:
    """A gate whose angle is either read from parameter ``slot`` or fixed."""

    kind: GateKind
    targets: tuple[int, ...]
    slot: int | None = None
    angle: float | None = None


@dataclass(frozen=True)
class RotationBlock:
    """Consecutive rotations on one qubit, executed as a single 2x2 unitary."""

    qubit: int
    gates: tuple[GateTemplate, ...]

    def matrices(self, theta: np.ndarray) -> list[np.ndarray]:
        return [rotation_matrices(g.kind, gate_angle(g, theta)) for g in self.gates]

    def fused(self, theta: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        mats = self.matrices(theta)
        u = mats[0]
        for m in mats[1:]:
            u = m @ u
        return u, mats


@dataclass(frozen=True)
class CircuitSpec:
    n_qubits: int
    gates: tuple[GateTemplate, ...]
    n_params: int

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ConfigurationError(f"n_qubits must be in [1, {MAX_QUBITS}]")
        slots = []
        for g in self.gates:
            if any(not 0 <= t < self.n_qubits for t in g.targets):
                raise ConfigurationError(f"gate {g} out of range for {self.n_qubits} qubits")
            if g.slot is not None:
                if not g.kind.is_rotation:
                    raise ConfigurationError(f"{g.kind.value} cannot carry a parameter slot")
                slots.append(g.slot)
            elif g.kind.is_rotation and g.angle is None:
                raise ConfigurationError("rotation without slot needs a fixed angle")
        if sorted(slots) != list(range(self.n_params)):
            raise ConfigurationError("parameter slots must be exactly 0..n_params-1, each used once")

    @cached_property
    def ops(self) -> tuple:
        """Execution plan: RotationBlocks interleaved with non-rotation gates."""
        ops: list = []
        for g in self.gates:
            if g.kind.is_rotation:
                last = ops[-1] if ops else None
                if isinstance(last, RotationBlock) and last.qubit == g.targets[0]:
                    ops[-1] = RotationBlock(last.qubit, last.gates + (g,))
                else:
                    ops.append(RotationBlock(g.targets[0], (g,)))
            else:
                ops.append(g)
        return tuple(ops)

    @property
    def cnot_pairs(self) -> list[tuple[int, int]]:
        return [g.targets for g in self.gates if g.kind is GateKind.CNOT]

    @property
    def n_cnots(self) -> int:
        return len(self.cnot_pairs)

    def to_dict(self) -> dict:
        gates = []
        for g in self.gates:
            d = {"kind": g.kind.value, "targets": list(g.targets)}
            if g.slot is not None:
                d["slot"] = g.slot
            if g.angle is not None:
                d["angle"] = g.angle
            gates.append(d)
        return {"n_qubits": self.n_qubits, "n_params": self.n_params, "gates": gates}

    @classmethod
    def from_dict(cls, d: dict) -> "CircuitSpec":
        gates = tuple(
            GateTemplate(GateKind(g["kind"]), tuple(g["targets"]), g.get("slot"), g.get("angle"))
            for g in d["gates"]
        )
        return cls(int(d["n_qubits"]), gates, int(d["n_params"]))

    def then(self, other: "CircuitSpec") -> "CircuitSpec":
        """Concatenate circuits; ``other``'s slots are shifted after ours."""
        if other.n_qubits != self.n_qubits:
            raise UsageError("cannot concatenate circuits on different qubit counts")
        shifted = tuple(
            GateTemplate(g.kind, g.targets, None if g.slot is None else g.slot + self.n_params, g.angle)
            for g in other.gates
        )
        return CircuitSpec(self.n_qubits, self.gates + shifted, self.n_params + other.n_params)


@dataclass(frozen=True)
class AnsatzConfig:
    n_qubits: int
    n_layers: int
    n_compressed: int
    topology: Topology = Topology.RING
    final_rotations_on_compressed: bool = True
    # "up": CNOT(i -> i+1), ring closed by CNOT(n-1 -> 0); "down" mirrors both
    cnot_direction: str = "up"

    def __post_init__(self):
        object.__setattr__(self, "topology", Topology(self.topology))
        if not 2 <= self.n_qubits <= MAX_QUBITS:
            raise ConfigurationError("encoder needs 2..14 qubits")
        if self.n_layers < 1:
            raise ConfigurationError("n_layers must be >= 1")
        if not 1 <= self.n_compressed < self.n_qubits:
            raise ConfigurationError("n_compressed must satisfy 1 <= n_compressed < n_qubits")
        if self.cnot_direction not in ("up", "down"):
            raise ConfigurationError("cnot_direction must be 'up' or 'down'")

    @property
    def compressed_qubits(self) -> tuple[int, ...]:
        return tuple(range(self.n_compressed))

    @property
    def expected_n_params(self) -> int:
        extra = 3 * self.n_compressed if self.final_rotations_on_compressed else 0
        return 3 * self.n_qubits * self.n_layers + extra


def _rotation_block(qubits: Sequence[int], first_slot: int) -> list[GateTemplate]:
    out = []
    slot = first_slot
    for q in qubits:
        for kind in ROTATION_ORDER:
            out.append(GateTemplate(kind, (q,), slot))
            slot += 1
    return out


def _entangler(n: int, topology: Topology, direction: str = "up") -> list[GateTemplate]:
    pairs = [(i, i + 1) for i in range(n - 1)]
    if topology is Topology.RING:
        pairs.append((n - 1, 0))
    if direction == "down":
        pairs = [(t, c) for c, t in pairs]
    return [GateTemplate(GateKind.CNOT, p) for p in pairs]


def _layered(n: int, n_layers: int, topology: Topology, direction: str = "up") -> list[GateTemplate]:
    gates: list[GateTemplate] = []
    for layer in range(n_layers):
        gates += _rotation_block(range(n), 3 * n * layer)
        gates += _entangler(n, topology, direction)
    return gates


def build_encoder(config: AnsatzConfig) -> CircuitSpec:
    """Encoder: per layer RX,RY,RZ on each qubit then nearest-neighbour CNOTs;
    optional trailing rotations on the compressed qubits 0..n_compressed-1."""
    gates = _layered(config.n_qubits, config.n_layers, config.topology, config.cnot_direction)
    n_params = 3 * config.n_qubits * config.n_layers
    if config.final_rotations_on_compressed:
        gates += _rotation_block(config.compressed_qubits, n_params)
        n_params += 3 * config.n_compressed
    return CircuitSpec(config.n_qubits, tuple(gates), n_params)


def build_approx_encoder(n_qubits: int, n_layers: int = 4) -> CircuitSpec:
    """State-preparation circuit: ``n_layers`` rotation+line-CNOT layers and a
    closing rotation layer."""
    if n_qubits < 2:
        raise ConfigurationError("approximate encoder needs at least 2 qubits")
    gates = _layered(n_qubits, n_layers, Topology.LINE)
    n_params = 3 * n_qubits * n_layers
    gates += _rotation_block(range(n_qubits), n_params)
    return CircuitSpec(n_qubits, tuple(gates), n_params + 3 * n_qubits)


def _check_theta(spec: CircuitSpec, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1:] != (spec.n_params,) or theta.ndim > 2:
        raise UsageError(f"expected {spec.n_params} parameters, got shape {theta.shape}")
    return theta


def bind_parameters(spec: CircuitSpec, theta) -> list[Gate]:
    theta = _check_theta(spec, theta)
    if theta.ndim != 1:
        raise UsageError("bind_parameters takes a single parameter vector")
    out = []
    for g in spec.gates:
        angle = float(theta[g.slot]) if g.slot is not None else g.angle
        out.append(Gate(g.kind, g.targets, angle))
    return out


def gate_angle(g: GateTemplate, theta: np.ndarray):
    """Angle(s) for one template: scalar for 1-D theta, per-row for 2-D."""
    if g.slot is None:
        return g.angle
    return theta[..., g.slot]


def apply_circuit_batch(spec: CircuitSpec, theta, psi: np.ndarray, inverse: bool = False) -> None:
    """Run ``spec`` (or its inverse) in place on rows of ``psi``.

    ``theta`` may be one vector shared by all rows or one vector per row.
    """
    theta = _check_theta(spec, theta)
    n = spec.n_qubits
    for op in reversed(spec.ops) if inverse else spec.ops:
        if isinstance(op, RotationBlock):
            u, _ = op.fused(theta)
            if inverse:
                u = np.conj(np.swapaxes(u, -1, -2))
            apply_unitary_batch(psi, n, op.qubit, u)
        else:
            # CNOT, H and X are self-inverse
            apply_gate_batch(psi, n, op.kind, op.targets, op.angle)


def run_circuit(spec: CircuitSpec, theta, state: StateVector) -> StateVector:
    if state.n_qubits != spec.n_qubits:
        raise UsageError(f"circuit has {spec.n_qubits} qubits, state has {state.n_qubits}")
    psi = state.amplitudes.copy().reshape(1, -1)
    apply_circuit_batch(spec, np.asarray(theta, dtype=float), psi)
    return StateVector(psi[0])


def save_circuit(path: str | Path, spec: CircuitSpec, theta) -> None:
    theta = _check_theta(spec, theta)
    doc = spec.to_dict()
    doc["theta"] = [float(x) for x in theta]
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_circuit(path: str | Path) -> tuple[CircuitSpec, np.ndarray]:
    doc = json.loads(Path(path).read_text())
    spec = CircuitSpec.from_dict(doc)
    return spec, _check_theta(spec, doc["theta"])
