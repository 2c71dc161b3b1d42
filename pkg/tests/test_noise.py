import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import PAULI, dense_gate, embed, random_state
from qadetect.ansatz import AnsatzConfig, CircuitSpec, GateTemplate, Topology, build_encoder, run_circuit
from qadetect.errors import ConfigurationError, FormatError
from qadetect.noise import (
    NoiseModel,
    load_calibration,
    noisy_loss_from_counts,
    sample_noisy,
    save_calibration,
)
from qadetect.simulator import Gate, GateKind, ShotHistogram, StateVector, marginal_probabilities, sample_shots

CNOT01 = CircuitSpec(2, (GateTemplate(GateKind.CNOT, (0, 1)),), 0)


def _doc(readout, cnots, date="2022-10-19"):
    return {
        "date": date,
        "qubits": [{"qubit": q, "readout_error": p} for q, p in enumerate(readout)],
        "cnot_errors": [{"qubits": list(k), "error": v} for k, v in cnots.items()],
    }


def test_zero_calibration_is_noiseless():
    model = load_calibration(_doc([0, 0], {(0, 1): 0.0}))
    assert model.is_zero()


def test_readout_values_stored_verbatim():
    model = load_calibration(_doc([5.9e-3, 9.8e-2], {(1, 0): 3.3e-3}))
    assert model.readout(0) == (5.9e-3, 5.9e-3)
    assert model.readout(1) == (9.8e-2, 9.8e-2)
    assert model.cnot_probability(0, 1) == model.cnot_probability(1, 0) == 3.3e-3
    assert model.date == "2022-10-19"


def test_asymmetric_readout_fields():
    doc = {"qubits": [{"qubit": 0, "prob_meas1_prep0": 0.01, "prob_meas0_prep1": 0.03}], "cnot_errors": []}
    assert load_calibration(doc).readout(0) == (0.01, 0.03)


@pytest.mark.parametrize("bad", [1.3, -0.1, float("nan")])
def test_out_of_range_probability(bad):
    with pytest.raises(ConfigurationError):
        load_calibration(_doc([bad], {}))


def test_missing_pair_is_a_configuration_error():
    with pytest.raises(ConfigurationError):
        load_calibration(_doc([0, 0, 0], {(0, 1): 0.01}), required_pairs=[(1, 2)])
    model = load_calibration(_doc([0, 0, 0], {(0, 1): 0.01}))
    spec = CircuitSpec(3, (GateTemplate(GateKind.CNOT, (2, 1)),), 0)
    with pytest.raises(ConfigurationError):
        sample_noisy(spec, [], StateVector.basis("000"), model, [0], 10, 0)


def test_malformed_document():
    with pytest.raises(FormatError):
        load_calibration({"qubits": []})


def test_calibration_file_round_trip(tmp_path):
    model = load_calibration(_doc([0.01, 0.02], {(0, 1): 0.05}))
    save_calibration(tmp_path / "cal.json", model)
    back = load_calibration(tmp_path / "cal.json")
    assert back.readout_flip == model.readout_flip and back.cnot_error == model.cnot_error
    (tmp_path / "cal.yaml").write_text("qubits:\n  - {qubit: 0, readout_error: 0.5}\ncnot_errors: []\n")
    assert load_calibration(tmp_path / "cal.yaml").readout(0) == (0.5, 0.5)


def test_zero_noise_reproduces_noiseless_sampler_exactly():
    rng = np.random.default_rng(0)
    spec = build_encoder(AnsatzConfig(4, 2, 2, Topology.LINE))
    theta = rng.uniform(0, 2 * np.pi, spec.n_params)
    psi = StateVector(random_state(rng, 4))
    for seed in range(5):
        noisy = sample_noisy(spec, theta, psi, NoiseModel.noiseless(4), [0, 1], 3000, seed)
        clean = sample_shots(run_circuit(spec, theta, psi), [0, 1], 3000, seed)
        assert noisy.counts == clean.counts


def test_full_readout_flip_inverts_everything():
    spec = CircuitSpec(3, tuple(GateTemplate(GateKind.X, (q,)) for q in range(3)), 0)
    model = NoiseModel({q: (1.0, 1.0) for q in range(3)}, {})
    h = sample_noisy(spec, [], StateVector.basis("000"), model, [0, 1, 2], 2048, 1)
    assert h.counts == {"000": 2048}


def _depolarized_cnot_probs(p: float, start: str) -> np.ndarray:
    """Closed form for CNOT then a two-qubit depolarizing channel, as a density matrix."""
    psi = StateVector.basis(start).amplitudes
    u = dense_gate(Gate(GateKind.CNOT, (0, 1)), 2)
    rho = u @ np.outer(psi, psi.conj()) @ u.conj().T
    out = (1 - p) * rho
    for a in "IXYZ":
        for b in "IXYZ":
            if a + b == "II":
                continue
            pp = embed(2, {0: PAULI[a], 1: PAULI[b]})
            out += p / 15 * pp @ rho @ pp.conj().T
    return np.real(np.diag(out))


@pytest.mark.parametrize("p", [0.05, 0.3, 1.0])
def test_single_cnot_matches_density_matrix(p):
    shots = 10**6
    model = NoiseModel({0: (0, 0), 1: (0, 0)}, {(0, 1): p})
    h = sample_noisy(CNOT01, [], StateVector.basis("10"), model, [0, 1], shots, seed=7)
    expect = _depolarized_cnot_probs(p, "10")
    sigma = np.sqrt(shots * expect * (1 - expect))
    assert np.all(np.abs(h.to_array() - shots * expect) <= 3 * sigma + 1e-9)


def _tv(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * np.abs(a / a.sum() - b / b.sum()).sum()


def test_total_variation_grows_with_noise():
    rng = np.random.default_rng(3)
    spec = build_encoder(AnsatzConfig(4, 2, 2, Topology.LINE))
    theta = rng.uniform(0, 2 * np.pi, spec.n_params)
    psi = StateVector(random_state(rng, 4))
    exact = marginal_probabilities(run_circuit(spec, theta, psi), [0, 1, 2, 3])
    base = NoiseModel({q: (0.02, 0.03) for q in range(4)}, {(0, 1): 0.02, (1, 2): 0.04, (2, 3): 0.03})
    mean_tv = []
    for scale in (0.0, 0.5, 1.0, 2.0, 4.0):
        tvs = [
            _tv(sample_noisy(spec, theta, psi, base.scaled(scale), [0, 1, 2, 3], 10**5, s).to_array(), exact)
            for s in range(4)
        ]
        mean_tv.append(np.mean(tvs))
    # sampling noise of the TV estimate at 1e5 shots is well below 0.005
    assert all(b > a - 0.005 for a, b in zip(mean_tv, mean_tv[1:]))
    assert mean_tv[-1] > mean_tv[0] + 0.05


@pytest.mark.parametrize(
    "counts, loss",
    [({"111": 2048}, 0.0), ({format(i, "03b"): 256 for i in range(8)}, 0.875), ({"111": 1024, "000": 1024}, 0.5)],
)
def test_loss_from_counts(counts, loss):
    assert noisy_loss_from_counts(ShotHistogram((0, 1, 2), counts)) == pytest.approx(loss)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(3, 6))
def test_all_ones_loss_against_ground_sum(seed, n):
    psi = StateVector(random_state(np.random.default_rng(seed), n))
    p = marginal_probabilities(psi, [0, 1, 2])
    all_ones_loss = 1 - p[7]
    ground_sum = sum(marginal_probabilities(psi, [q])[0] for q in range(3))
    # union bound: "not all ones" means at least one qubit reads 0
    assert all_ones_loss <= ground_sum + 1e-12
    # on a generic random state the two losses differ
    assert abs(all_ones_loss - ground_sum) > 1e-9


def test_sampling_is_seeded():
    model = NoiseModel({0: (0.1, 0.2), 1: (0.05, 0.0)}, {(0, 1): 0.3})
    a = sample_noisy(CNOT01, [], StateVector.basis("10"), model, [0, 1], 5000, 11)
    b = sample_noisy(CNOT01, [], StateVector.basis("10"), model, [0, 1], 5000, 11)
    assert a.counts == b.counts
