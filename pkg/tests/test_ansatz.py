import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dense_circuit, random_state
from qadetect.ansatz import (
    AnsatzConfig,
    CircuitSpec,
    GateTemplate,
    Topology,
    apply_circuit_batch,
    bind_parameters,
    build_approx_encoder,
    build_encoder,
    load_circuit,
    run_circuit,
    save_circuit,
)
from qadetect.errors import ConfigurationError, UsageError
from qadetect.simulator import Gate, GateKind, StateVector, apply_gate, init_ground


@pytest.mark.parametrize(
    "n, layers, comp, topo, params, cnots",
    [
        (6, 6, 3, "ring", 117, 36),
        (6, 4, 3, "line", 81, 20),
        (11, 8, 3, "ring", 273, 88),
    ],
)
def test_encoder_counts(n, layers, comp, topo, params, cnots):
    spec = build_encoder(AnsatzConfig(n, layers, comp, Topology(topo)))
    assert spec.n_params == params
    assert spec.n_cnots == cnots


@settings(max_examples=50, deadline=None)
@given(
    n=st.integers(2, 8),
    layers=st.integers(1, 5),
    data=st.data(),
    topo=st.sampled_from(list(Topology)),
    final=st.booleans(),
)
def test_encoder_structure(n, layers, data, topo, final):
    comp = data.draw(st.integers(1, n - 1))
    cfg = AnsatzConfig(n, layers, comp, topo, final)
    spec = build_encoder(cfg)
    assert spec.n_params == 3 * n * layers + (3 * comp if final else 0) == cfg.expected_n_params
    closing = sum(1 for p in spec.cnot_pairs if p == (n - 1, 0))
    if topo is Topology.LINE:
        assert closing == 0
    else:
        assert closing == layers
    # every qubit is rotated in every layer, in RX, RY, RZ order
    per_layer = 3 * n + (n if topo is Topology.RING else n - 1)
    for layer in range(layers):
        chunk = spec.gates[layer * per_layer:(layer + 1) * per_layer]
        rots = [g for g in chunk if g.kind.is_rotation]
        assert {g.targets[0] for g in rots} == set(range(n))
        assert [g.kind.value for g in rots[:3]] == ["RX", "RY", "RZ"]


def test_down_direction_mirrors_cnots():
    up = build_encoder(AnsatzConfig(4, 1, 2, Topology.RING, cnot_direction="up")).cnot_pairs
    down = build_encoder(AnsatzConfig(4, 1, 2, Topology.RING, cnot_direction="down")).cnot_pairs
    assert up == [(0, 1), (1, 2), (2, 3), (3, 0)]
    assert sorted(down) == sorted((t, c) for c, t in up)


@pytest.mark.parametrize("bad", [dict(n_compressed=0), dict(n_compressed=4), dict(n_layers=0)])
def test_config_validation(bad):
    args = dict(n_qubits=4, n_layers=2, n_compressed=2) | bad
    with pytest.raises(ConfigurationError):
        AnsatzConfig(**args)


@pytest.mark.parametrize("n, params, cnots", [(6, 90, 20), (2, 30, 4)])
def test_approx_encoder_counts(n, params, cnots):
    spec = build_approx_encoder(n)
    assert (spec.n_params, spec.n_cnots) == (params, cnots)


def test_approx_encoder_rejects_one_qubit():
    with pytest.raises(ConfigurationError):
        build_approx_encoder(1)


def test_zero_parameters_fix_ground_state():
    for spec in (build_approx_encoder(6), build_encoder(AnsatzConfig(6, 6, 3))):
        out = run_circuit(spec, np.zeros(spec.n_params), init_ground(6))
        np.testing.assert_allclose(out.amplitudes, init_ground(6).amplitudes, atol=1e-15)


def test_single_slot_matches_direct_gate():
    spec = CircuitSpec(1, (GateTemplate(GateKind.RY, (0,), slot=0),), 1)
    np.testing.assert_allclose(
        run_circuit(spec, [np.pi], init_ground(1)).amplitudes,
        apply_gate(init_ground(1), Gate(GateKind.RY, (0,), np.pi)).amplitudes,
    )


def test_bind_parameters_and_dense_oracle():
    rng = np.random.default_rng(0)
    spec = build_encoder(AnsatzConfig(4, 2, 2, Topology.LINE))
    theta = rng.uniform(0, 2 * np.pi, spec.n_params)
    gates = bind_parameters(spec, theta)
    assert [g.angle for g in gates if g.kind.is_rotation] == [theta[g.slot] for g in spec.gates if g.slot is not None]
    psi = random_state(rng, 4)
    out = run_circuit(spec, theta, StateVector(psi))
    np.testing.assert_allclose(out.amplitudes, dense_circuit(gates, 4) @ psi, atol=1e-12)
    assert out.norm() == pytest.approx(1.0, abs=1e-12)


def test_bind_parameters_length_mismatch():
    spec = build_approx_encoder(2)
    with pytest.raises(UsageError):
        bind_parameters(spec, np.zeros(3))


def test_inverse_circuit_undoes_forward():
    rng = np.random.default_rng(4)
    spec = build_encoder(AnsatzConfig(5, 3, 2))
    theta = rng.uniform(0, 2 * np.pi, spec.n_params)
    psi = np.stack([random_state(rng, 5) for _ in range(3)])
    work = psi.copy()
    apply_circuit_batch(spec, theta, work)
    apply_circuit_batch(spec, theta, work, inverse=True)
    np.testing.assert_allclose(work, psi, atol=1e-12)


def test_batch_with_per_row_parameters():
    rng = np.random.default_rng(6)
    spec = build_approx_encoder(3, 2)
    thetas = rng.uniform(0, 2 * np.pi, (4, spec.n_params))
    psi = np.repeat(init_ground(3).amplitudes[None], 4, axis=0)
    apply_circuit_batch(spec, thetas, psi)
    for row, th in zip(psi, thetas):
        np.testing.assert_allclose(row, run_circuit(spec, th, init_ground(3)).amplitudes, atol=1e-13)


def test_spec_validation():
    with pytest.raises(ConfigurationError):
        CircuitSpec(2, (GateTemplate(GateKind.RX, (0,), slot=1),), 1)
    with pytest.raises(ConfigurationError):
        CircuitSpec(2, (GateTemplate(GateKind.CNOT, (0, 2)),), 0)


def test_then_concatenates_and_shifts_slots():
    a, b = build_approx_encoder(3, 1), build_encoder(AnsatzConfig(3, 1, 1))
    both = a.then(b)
    assert both.n_params == a.n_params + b.n_params
    rng = np.random.default_rng(1)
    ta, tb = rng.normal(size=a.n_params), rng.normal(size=b.n_params)
    direct = run_circuit(b, tb, run_circuit(a, ta, init_ground(3)))
    np.testing.assert_allclose(run_circuit(both, np.concatenate([ta, tb]), init_ground(3)).amplitudes, direct.amplitudes)


def test_serialization_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(2)
    spec = build_encoder(AnsatzConfig(6, 2, 3))
    theta = rng.uniform(0, 2 * np.pi, spec.n_params)
    save_circuit(tmp_path / "c.json", spec, theta)
    spec2, theta2 = load_circuit(tmp_path / "c.json")
    assert spec2 == spec
    assert np.array_equal(theta2, theta)
