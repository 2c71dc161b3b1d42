"""Circuit-output functionals and their parameter gradients.

Production gradients use adjoint differentiation: one forward sweep, then a
single reverse sweep that un-applies each gate to both the state and the
back-propagated co-state. For a rotation exp(-i t sigma / 2) the derivative
of ``f = 2 Re <lam|psi>``-type functionals is ``Im <lam|sigma|phi>``, with
``phi`` the state right after the gate and ``lam`` the co-state there.
The parameter-shift rule is kept as an independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .ansatz import CircuitSpec, RotationBlock, apply_circuit_batch
from .errors import UsageError
from .simulator import (
    FIXED_MATRICES,
    StateVector,
    apply_gate_batch,
    apply_unitary_batch,
    check_qubits,
    overlap_matrix_batch,
)

_GENERATORS = {"RX": FIXED_MATRICES["X"], "RY": FIXED_MATRICES["Y"], "RZ": FIXED_MATRICES["Z"]}


@dataclass(frozen=True)
class GroundProjectorSum:
    """Sum over ``qubits`` of the probability that each one reads |0>."""

    qubits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))


@dataclass(frozen=True)
class BasisProjector:
    """Probability of reading ``bitstring`` on ``qubits`` (qubits[0] leftmost)."""

    bitstring: str
    qubits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        if len(self.bitstring) != len(self.qubits) or set(self.bitstring) - {"0", "1"}:
            raise UsageError(f"bitstring {self.bitstring!r} does not match qubits {self.qubits}")


@dataclass(frozen=True, eq=False)
class StateMSE:
    """Sum of squared amplitude residuals against ``target``.

    ``target`` is one state of shape (dim,) or one state per batch row.
    """

    target: np.ndarray

    def __post_init__(self):
        t = self.target.amplitudes if isinstance(self.target, StateVector) else self.target
        object.__setattr__(self, "target", np.asarray(t, dtype=np.complex128))


Observable = Union[GroundProjectorSum, BasisProjector, StateMSE]


def _qubit_mask(n: int, q: int, bit: int) -> np.ndarray:
    idx = np.arange(1 << n)
    return ((idx >> (n - 1 - q)) & 1) == bit


def _value_and_costate(obs: Observable, psi: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Functional value per row, plus the co-state whose overlap with d(psi)
    gives half the derivative."""
    if isinstance(obs, StateMSE):
        if obs.target.shape[-1] != psi.shape[1]:
            raise UsageError("StateMSE target dimension does not match the circuit")
        resid = psi - obs.target
        return np.sum(resid.real**2 + resid.imag**2, axis=1), resid
    if isinstance(obs, GroundProjectorSum):
        check_qubits(obs.qubits, n)
        lam = np.zeros_like(psi)
        for q in obs.qubits:
            lam += psi * _qubit_mask(n, q, 0)
    elif isinstance(obs, BasisProjector):
        check_qubits(obs.qubits, n)
        mask = np.ones(1 << n, dtype=bool)
        for q, b in zip(obs.qubits, obs.bitstring):
            mask &= _qubit_mask(n, q, int(b))
        lam = psi * mask
    else:
        raise UsageError(f"unsupported observable {obs!r}")
    value = np.sum((np.conj(psi) * lam).real, axis=1)
    return value, lam


def _as_batch(spec: CircuitSpec, inputs) -> np.ndarray:
    if isinstance(inputs, StateVector):
        psi = inputs.amplitudes.reshape(1, -1)
    else:
        psi = np.atleast_2d(np.asarray(inputs, dtype=np.complex128))
    if psi.shape[1] != 1 << spec.n_qubits:
        raise UsageError(f"input dimension {psi.shape[1]} does not match {spec.n_qubits}-qubit circuit")
    return np.array(psi, dtype=np.complex128, order="C")


def evaluate_batch(spec: CircuitSpec, theta, inputs, obs: Observable) -> np.ndarray:
    psi = _as_batch(spec, inputs)
    apply_circuit_batch(spec, theta, psi)
    return _value_and_costate(obs, psi, spec.n_qubits)[0]


def value_and_grad_batch(spec: CircuitSpec, theta, inputs, obs: Observable) -> tuple[np.ndarray, np.ndarray]:
    """Per-row functional values and gradients, shapes (B,) and (B, n_params)."""
    n = spec.n_qubits
    theta = np.asarray(theta, dtype=float)
    phi = _as_batch(spec, inputs)
    apply_circuit_batch(spec, theta, phi)
    values, lam = _value_and_costate(obs, phi, n)
    grads = np.zeros((phi.shape[0], spec.n_params))
    for op in reversed(spec.ops):
        if not isinstance(op, RotationBlock):
            apply_gate_batch(phi, n, op.kind, op.targets, op.angle)
            apply_gate_batch(lam, n, op.kind, op.targets, op.angle)
            continue
        u, mats = op.fused(theta)
        q = op.qubit
        if any(g.slot is not None for g in op.gates):
            overlap = overlap_matrix_batch(lam, phi, n, q)
            # generator of gate j seen from the block output: S sigma_j S^dag,
            # with S the product of the rotations that follow j
            s = np.eye(2, dtype=np.complex128)
            for g, m in zip(reversed(op.gates), reversed(mats)):
                if g.slot is not None:
                    gen = s @ _GENERATORS[g.kind.value] @ np.conj(np.swapaxes(s, -1, -2))
                    grads[:, g.slot] = np.sum(gen * overlap, axis=(-2, -1)).imag
                s = s @ m
        u_dag = np.conj(np.swapaxes(u, -1, -2))
        apply_unitary_batch(phi, n, q, u_dag)
        apply_unitary_batch(lam, n, q, u_dag)
    return values, grads


def evaluate(spec: CircuitSpec, theta, state: StateVector, obs: Observable) -> float:
    return float(evaluate_batch(spec, theta, state, obs)[0])


def gradient_adjoint(spec: CircuitSpec, theta, state: StateVector, obs: Observable) -> np.ndarray:
    return value_and_grad_batch(spec, theta, state, obs)[1][0]


def gradient_parameter_shift(spec: CircuitSpec, theta, state: StateVector, obs: Observable) -> np.ndarray:
    if isinstance(obs, StateMSE):
        raise UsageError("parameter-shift rule applies to projector observables only, not StateMSE")
    theta = np.asarray(theta, dtype=float)
    # all +shift and -shift circuits go through the simulator as one batch
    shifts = np.repeat(theta[None, :], 2 * spec.n_params, axis=0)
    idx = np.arange(spec.n_params)
    shifts[idx, idx] += np.pi / 2
    shifts[spec.n_params + idx, idx] -= np.pi / 2
    psi = np.repeat(_as_batch(spec, state), 2 * spec.n_params, axis=0)
    apply_circuit_batch(spec, shifts, psi)
    vals = _value_and_costate(obs, psi, spec.n_qubits)[0]
    return (vals[: spec.n_params] - vals[spec.n_params:]) / 2


def gradient_finite_difference(spec: CircuitSpec, theta, state: StateVector, obs: Observable, h: float = 1e-5) -> np.ndarray:
    """Central differences; test oracle only."""
    theta = np.asarray(theta, dtype=float)
    out = np.empty(spec.n_params)
    for j in range(spec.n_params):
        tp, tm = theta.copy(), theta.copy()
        tp[j] += h
        tm[j] -= h
        out[j] = (evaluate(spec, tp, state, obs) - evaluate(spec, tm, state, obs)) / (2 * h)
    return out


def all_ones_loss(qubits: Sequence[int]) -> BasisProjector:
    return BasisProjector("1" * len(qubits), tuple(qubits))
