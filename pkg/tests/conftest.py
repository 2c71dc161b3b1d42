"""Shared oracles and generators for the test suite.

The dense-matrix oracle here builds full 2^n x 2^n unitaries from Kronecker
products, independently of the stride kernels in the simulator.
"""

from __future__ import annotations

from functools import reduce

import numpy as np
import pytest

from qadetect.ansatz import CircuitSpec, GateTemplate
from qadetect.simulator import Gate, GateKind

I2 = np.eye(2, dtype=complex)
PAULI = {
    "I": I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
P0 = np.diag([1, 0]).astype(complex)
P1 = np.diag([0, 1]).astype(complex)


def expm_pauli(kind: str, angle: float) -> np.ndarray:
    """exp(-i angle sigma / 2) through the eigen-decomposition of sigma."""
    sigma = PAULI[kind[-1]]
    w, v = np.linalg.eigh(sigma)
    return v @ np.diag(np.exp(-0.5j * angle * w)) @ v.conj().T


def embed(n: int, ops: dict[int, np.ndarray]) -> np.ndarray:
    """Kronecker product with qubit 0 as the leftmost (most significant) factor."""
    return reduce(np.kron, [ops.get(q, I2) for q in range(n)])


def dense_gate(gate: Gate, n: int) -> np.ndarray:
    kind = gate.kind.value
    if kind == "CNOT":
        c, t = gate.targets
        return embed(n, {c: P0}) + embed(n, {c: P1, t: PAULI["X"]})
    if kind in ("RX", "RY", "RZ"):
        m = expm_pauli(kind, gate.angle)
    elif kind == "H":
        m = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    else:
        m = PAULI[kind]
    return embed(n, {gate.targets[0]: m})


def dense_circuit(gates, n: int) -> np.ndarray:
    u = np.eye(1 << n, dtype=complex)
    for g in gates:
        u = dense_gate(g, n) @ u
    return u


def random_state(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


def random_gates(rng: np.random.Generator, n: int, count: int) -> list[Gate]:
    kinds = ["RX", "RY", "RZ", "H", "X"] + (["CNOT"] * 2 if n > 1 else [])
    out = []
    for _ in range(count):
        k = kinds[rng.integers(len(kinds))]
        if k == "CNOT":
            c, t = rng.choice(n, size=2, replace=False)
            out.append(Gate(GateKind.CNOT, (int(c), int(t))))
        elif k.startswith("R"):
            out.append(Gate(GateKind(k), (int(rng.integers(n)),), float(rng.uniform(-2 * np.pi, 2 * np.pi))))
        else:
            out.append(Gate(GateKind(k), (int(rng.integers(n)),)))
    return out


def random_spec(rng: np.random.Generator, n: int, count: int) -> CircuitSpec:
    """Random parametrized circuit mixing slotted rotations, fixed gates and CNOTs."""
    gates, slot = [], 0
    for g in random_gates(rng, n, count):
        if g.kind.is_rotation and rng.random() < 0.85:
            gates.append(GateTemplate(g.kind, g.targets, slot=slot))
            slot += 1
        else:
            gates.append(GateTemplate(g.kind, g.targets, angle=g.angle))
    if slot == 0:
        gates.append(GateTemplate(GateKind.RY, (0,), slot=0))
        slot = 1
    return CircuitSpec(n, tuple(gates), slot)


# -- acceptance reporting --------------------------------------------------

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def acceptance():
    """Record one criterion outcome; the terminal summary prints every line."""

    def record(criterion: str, passed: bool, detail: str) -> bool:
        _ACCEPTANCE.append((criterion, bool(passed), detail))
        print(f"{'PASS' if passed else 'FAIL'} {criterion}: {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} {criterion}: {detail}")
