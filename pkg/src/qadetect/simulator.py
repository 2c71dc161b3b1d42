"""Dense statevector simulator.

Qubit 0 is the most significant bit of the basis-state index, so the
bitstring "110" on three qubits is index 6 and reads qubit 0 first.
Rotations follow R_a(theta) = exp(-i theta sigma_a / 2).

The public functions take and return :class:`StateVector` values. The
underscore-free ``*_batch`` kernels below work in place on a 2-D array of
shape ``(batch, 2**n)`` and are what the gradient and noise modules use
on their hot paths.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, UsageError

MAX_QUBITS = 14


class GateKind(str, Enum):
    RX = "RX"
    RY = "RY"
    RZ = "RZ"
    CNOT = "CNOT"
    H = "H"
    X = "X"

    @property
    def is_rotation(self) -> bool:
        return self in (GateKind.RX, GateKind.RY, GateKind.RZ)

    @property
    def arity(self) -> int:
        return 2 if self is GateKind.CNOT else 1


@dataclass(frozen=True)
class Gate:
    """A concrete gate. For CNOT, ``targets`` is ``(control, target)``."""

    kind: GateKind
    targets: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if len(self.targets) != self.kind.arity:
            raise ConfigurationError(f"{self.kind.value} takes {self.kind.arity} qubit(s), got {self.targets}")
        if min(self.targets) < 0:
            raise ConfigurationError(f"negative qubit index in {self.targets}")
        if self.kind is GateKind.CNOT and self.targets[0] == self.targets[1]:
            raise ConfigurationError("CNOT control and target must differ")
        if self.kind.is_rotation and self.angle is None:
            raise ConfigurationError(f"{self.kind.value} needs an angle")

    def matrix(self) -> np.ndarray:
        """Dense unitary on the gate's own qubits (control first for CNOT)."""
        if self.kind.is_rotation:
            return rotation_matrix(self.kind, float(self.angle))
        if self.kind is GateKind.CNOT:
            return np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
        return FIXED_MATRICES[self.kind.value].copy()


FIXED_MATRICES = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def rotation_matrix(kind: GateKind | str, angle: float) -> np.ndarray:
    kind = GateKind(kind)
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    if kind is GateKind.RX:
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind is GateKind.RY:
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind is GateKind.RZ:
        return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])
    raise ConfigurationError(f"{kind.value} is not a rotation")


def _check_n_qubits(n_qubits: int) -> None:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")


@dataclass
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        dim = amps.size
        if dim < 2 or dim & (dim - 1):
            raise UsageError(f"amplitude count must be a power of two >= 2, got {dim}")
        _check_n_qubits(dim.bit_length() - 1)
        self.amplitudes = amps

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy())

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @classmethod
    def basis(cls, bitstring: str) -> "StateVector":
        """Computational basis state, e.g. ``StateVector.basis("111000")``."""
        amps = np.zeros(1 << len(bitstring), dtype=complex)
        amps[int(bitstring, 2)] = 1.0
        return cls(amps)


@dataclass
class ShotHistogram:
    measured_qubits: tuple[int, ...]
    counts: dict[str, int]
    total_shots: int = field(default=0)

    def __post_init__(self):
        self.measured_qubits = tuple(self.measured_qubits)
        self.counts = {k: int(v) for k, v in self.counts.items() if v}
        if not self.total_shots:
            self.total_shots = sum(self.counts.values())
        if sum(self.counts.values()) != self.total_shots:
            raise UsageError("counts do not sum to total_shots")

    def frequency(self, bitstring: str) -> float:
        return self.counts.get(bitstring, 0) / self.total_shots

    def most_common(self) -> str:
        return max(sorted(self.counts), key=lambda b: self.counts[b])

    def to_array(self) -> np.ndarray:
        out = np.zeros(1 << len(self.measured_qubits), dtype=np.int64)
        for bits, c in self.counts.items():
            out[int(bits, 2)] = c
        return out

    @classmethod
    def from_array(cls, qubits: Sequence[int], counts: np.ndarray) -> "ShotHistogram":
        k = len(qubits)
        return cls(tuple(qubits), {format(i, f"0{k}b"): int(c) for i, c in enumerate(counts) if c})

    def write_csv(self, path: str | Path) -> None:
        """Write ``bitstring,count`` rows for every outcome, zeros included."""
        k = len(self.measured_qubits)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bitstring", "count"])
            for i in range(1 << k):
                b = format(i, f"0{k}b")
                w.writerow([b, self.counts.get(b, 0)])


# --------------------------------------------------------------------------
# batch kernels: psi has shape (batch, 2**n) and is modified in place
# --------------------------------------------------------------------------

def _split(psi: np.ndarray, n: int, q: int):
    v = psi.reshape(psi.shape[0], 1 << q, 2, 1 << (n - q - 1))
    return v[:, :, 0, :], v[:, :, 1, :]


def _coef(x):
    # scalar stays scalar; per-sample arrays broadcast over (batch, left, right)
    x = np.asarray(x)
    return x if x.ndim == 0 else x.reshape(-1, 1, 1)


def apply_rotation_batch(psi: np.ndarray, n: int, kind: GateKind, q: int, angle) -> None:
    """Rotate qubit ``q``. ``angle`` is a scalar or one angle per batch row."""
    x0, x1 = _split(psi, n, q)
    half = np.asarray(angle, dtype=float) / 2
    if kind is GateKind.RZ:
        ph = _coef(np.exp(-1j * half))
        x0 *= ph
        x1 *= np.conj(ph)
        return
    c, s = _coef(np.cos(half)), _coef(np.sin(half))
    if kind is GateKind.RX:
        y0 = c * x0 - 1j * s * x1
        x1 *= c
        x1 -= 1j * s * x0
    else:
        y0 = c * x0 - s * x1
        x1 *= c
        x1 += s * x0
    x0[...] = y0


def rotation_matrices(kind: GateKind, angles) -> np.ndarray:
    """Vectorised rotation matrices, shape ``angles.shape + (2, 2)``."""
    half = np.asarray(angles, dtype=float) / 2
    c, s = np.cos(half), np.sin(half)
    out = np.zeros(half.shape + (2, 2), dtype=np.complex128)
    if kind is GateKind.RX:
        out[..., 0, 0] = out[..., 1, 1] = c
        out[..., 0, 1] = out[..., 1, 0] = -1j * s
    elif kind is GateKind.RY:
        out[..., 0, 0] = out[..., 1, 1] = c
        out[..., 0, 1] = -s
        out[..., 1, 0] = s
    else:
        out[..., 0, 0] = c - 1j * s
        out[..., 1, 1] = c + 1j * s
    return out


def apply_unitary_batch(psi: np.ndarray, n: int, q: int, u: np.ndarray) -> None:
    """Apply a 2x2 matrix, shared (2, 2) or per row (batch, 2, 2), to qubit q."""
    x0, x1 = _split(psi, n, q)
    if u.ndim == 3:
        u = u[:, None, None, :, :]
    y0 = u[..., 0, 0] * x0 + u[..., 0, 1] * x1
    x1[...] = u[..., 1, 0] * x0 + u[..., 1, 1] * x1
    x0[...] = y0


def overlap_matrix_batch(lam: np.ndarray, phi: np.ndarray, n: int, q: int) -> np.ndarray:
    """M[b, a, c] = sum over other qubits of conj(lam_a) * phi_c, shape (batch, 2, 2).

    For any 2x2 operator G on qubit q, <lam|G|phi> = sum(G * M).
    """
    b = lam.shape[0]
    lv = lam.reshape(b, 1 << q, 2, 1 << (n - q - 1))
    pv = phi.reshape(b, 1 << q, 2, 1 << (n - q - 1))
    return np.einsum("blar,blcr->bac", np.conj(lv), pv)


def apply_matrix_batch(psi: np.ndarray, n: int, q: int, m: np.ndarray) -> None:
    x0, x1 = _split(psi, n, q)
    y0 = m[0, 0] * x0 + m[0, 1] * x1
    x1[...] = m[1, 0] * x0 + m[1, 1] * x1
    x0[...] = y0


def apply_pauli_batch(psi: np.ndarray, n: int, q: int, pauli: str) -> None:
    if pauli == "I":
        return
    x0, x1 = _split(psi, n, q)
    if pauli == "Z":
        x1 *= -1
        return
    tmp = x0.copy()
    x0[...] = x1
    x1[...] = tmp
    if pauli == "Y":
        x0 *= -1j
        x1 *= 1j


def apply_cnot_batch(psi: np.ndarray, n: int, control: int, target: int) -> None:
    v = psi.reshape((psi.shape[0],) + (2,) * n)
    lo = [slice(None)] * (n + 1)
    hi = [slice(None)] * (n + 1)
    lo[1 + control] = hi[1 + control] = 1
    lo[1 + target], hi[1 + target] = 0, 1
    lo, hi = tuple(lo), tuple(hi)
    tmp = v[lo].copy()
    v[lo] = v[hi]
    v[hi] = tmp


def apply_gate_batch(psi: np.ndarray, n: int, kind: GateKind, targets: tuple[int, ...], angle=None) -> None:
    if kind.is_rotation:
        apply_rotation_batch(psi, n, kind, targets[0], angle)
    elif kind is GateKind.CNOT:
        apply_cnot_batch(psi, n, targets[0], targets[1])
    else:
        apply_matrix_batch(psi, n, targets[0], FIXED_MATRICES[kind.value])


def generator_overlap_batch(lam: np.ndarray, phi: np.ndarray, n: int, q: int, kind: GateKind) -> np.ndarray:
    """Per-row <lam| sigma_kind on qubit q |phi>, without materialising sigma|phi>."""
    l0, l1 = _split(lam, n, q)
    p0, p1 = _split(phi, n, q)
    axes = (1, 2)
    if kind is GateKind.RZ:
        return np.sum(np.conj(l0) * p0, axis=axes) - np.sum(np.conj(l1) * p1, axis=axes)
    a = np.sum(np.conj(l0) * p1, axis=axes)
    b = np.sum(np.conj(l1) * p0, axis=axes)
    if kind is GateKind.RX:
        return a + b
    return -1j * a + 1j * b


def marginal_batch(psi: np.ndarray, n: int, qubits: Sequence[int]) -> np.ndarray:
    """Marginal outcome probabilities, shape (batch, 2**len(qubits))."""
    probs = (psi.real**2 + psi.imag**2).reshape((psi.shape[0],) + (2,) * n)
    keep = sorted(qubits)
    drop = tuple(1 + a for a in range(n) if a not in keep)
    m = probs.sum(axis=drop) if drop else probs
    perm = [0] + [1 + keep.index(q) for q in qubits]
    return m.transpose(perm).reshape(psi.shape[0], -1)


def check_qubits(qubits: Sequence[int], n: int) -> tuple[int, ...]:
    qubits = tuple(int(q) for q in qubits)
    if not qubits:
        raise ConfigurationError("at least one qubit must be given")
    if len(set(qubits)) != len(qubits):
        raise ConfigurationError(f"duplicate qubit indices in {qubits}")
    for q in qubits:
        if not 0 <= q < n:
            raise ConfigurationError(f"qubit {q} out of range for {n} qubits")
    return qubits


def shot_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    """Independent (measurement, gate-error, readout) generators for one seed.

    The noiseless sampler and the noisy sampler draw outcomes from the same
    measurement stream, so a zero-noise model reproduces ``sample_shots``.
    """
    children = np.random.SeedSequence(int(seed)).spawn(3)
    return tuple(np.random.default_rng(c) for c in children)


# --------------------------------------------------------------------------
# public surface
# --------------------------------------------------------------------------

def init_ground(n_qubits: int) -> StateVector:
    _check_n_qubits(n_qubits)
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(amps)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    n = state.n_qubits
    for t in gate.targets:
        if t >= n:
            raise ConfigurationError(f"qubit {t} out of range for {n} qubits")
    psi = state.amplitudes.copy().reshape(1, -1)
    apply_gate_batch(psi, n, gate.kind, gate.targets, gate.angle)
    return StateVector(psi[0])


def apply_gates(state: StateVector, gates: Sequence[Gate]) -> StateVector:
    n = state.n_qubits
    psi = state.amplitudes.copy().reshape(1, -1)
    for g in gates:
        if max(g.targets) >= n:
            raise ConfigurationError(f"gate {g} out of range for {n} qubits")
        apply_gate_batch(psi, n, g.kind, g.targets, g.angle)
    return StateVector(psi[0])


def marginal_probabilities(state: StateVector, qubits: Sequence[int]) -> np.ndarray:
    """Probability of each outcome on ``qubits``; index i is the bitstring of i, qubits[0] first."""
    qubits = check_qubits(qubits, state.n_qubits)
    return marginal_batch(state.amplitudes.reshape(1, -1), state.n_qubits, qubits)[0]


def sample_counts(probs: np.ndarray, n_shots: int, rng: np.random.Generator) -> np.ndarray:
    p = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    return rng.multinomial(n_shots, p / p.sum())


def sample_shots(state: StateVector, qubits: Sequence[int], n_shots: int, seed: int) -> ShotHistogram:
    if n_shots <= 0:
        raise UsageError("n_shots must be positive")
    qubits = check_qubits(qubits, state.n_qubits)
    rng, _, _ = shot_streams(seed)
    counts = sample_counts(marginal_probabilities(state, qubits), n_shots, rng)
    return ShotHistogram.from_array(qubits, counts)
