"""Coherent and dephasing-iteration circuit builders."""

import math

import numpy as np
import pytest

from excitonsim import circuits, model, qcore
from excitonsim.model import SystemHamiltonian
from excitonsim.noise import FluctuatorConfig, FluctuatorTrajectory, expand_interval_signs, generate_interval_signs
from excitonsim.reference import exact_trajectory_series

K = 2.0 * math.pi * 2.99792458e-5

NEAR = SystemHamiltonian.near_resonant()
NON = SystemHamiltonian.non_resonant()


def populations(circuit, num_qubits=2):
    init = qcore.StateVector.basis_state(num_qubits, 1 << (num_qubits - 1))
    state = qcore.run_circuit(circuit, init)
    return qcore.site_probabilities(state, range(num_qubits - 1))


def run_iterations(h, dt, signs_per_step, strengths):
    """Populations after sequentially applying one circuit per step."""
    init = qcore.StateVector.basis_state(2, 2)
    state = init
    for signs in signs_per_step:
        state = qcore.run_circuit(circuits.build_iteration_circuit(h, dt, signs, strengths), state)
    return qcore.site_probabilities(state, [0])


def test_zero_time_circuit_is_identity_on_populations():
    probs = populations(circuits.build_coherent_circuit(NEAR, 0.0))
    assert np.allclose(probs, [1.0, 0.0], atol=1e-15)


def test_coherent_gate_count_is_six():
    counts = circuits.gate_count(circuits.build_coherent_circuit(NEAR, 10.0))
    assert counts == {
        "PauliX": 2,
        "RotY": 2,
        "RotZ": 0,
        "ControlledRotZ": 2,
        "ControlledNot": 0,
        "DenseUnitary": 0,
    }
    assert sum(counts.values()) == 6


def test_full_revival_at_period():
    period = model.beating_period(NEAR)
    probs = populations(circuits.build_coherent_circuit(NEAR, period))
    assert abs(probs[0] - 1.0) < 1e-6


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        circuits.build_coherent_circuit(NEAR, -1.0)


@pytest.mark.parametrize("h", [NEAR, NON], ids=["near", "non"])
def test_circuit_matches_analytic_oracle_on_grid(h):
    worst = 0.0
    for t in np.linspace(0.0, 300.0, 60):
        probs = populations(circuits.build_coherent_circuit(h, t))
        p0, p1 = model.analytic_populations(h, t)
        worst = max(worst, abs(probs[0] - p0), abs(probs[1] - p1))
    assert worst < 1e-9


def test_angle_linearity_of_composition():
    t1, t2 = 37.0, 88.5
    init = qcore.StateVector.basis_state(2, 2)
    state = qcore.run_circuit(circuits.build_coherent_circuit(NEAR, t1), init)
    state = qcore.run_circuit(circuits.build_coherent_circuit(NEAR, t2), state)
    composed = qcore.site_probabilities(state, [0])
    direct = populations(circuits.build_coherent_circuit(NEAR, t1 + t2))
    assert np.abs(composed - direct).max() < 1e-12


def test_noise_free_iteration_equals_coherent_step():
    it = circuits.build_iteration_circuit(NEAR, 2.0, [0.5, -0.5], 0.0)
    assert np.abs(populations(it) - populations(circuits.build_coherent_circuit(NEAR, 2.0))).max() < 1e-12


def test_noise_free_iterations_compose_exactly():
    n_steps = 40
    probs = run_iterations(NEAR, 2.0, [[0.5, 0.5]] * n_steps, 0.0)
    p0, p1 = model.analytic_populations(NEAR, n_steps * 2.0)
    assert abs(probs[0] - p0) < 1e-9
    assert abs(probs[1] - p1) < 1e-9


def test_single_iteration_close_to_exact_split_hamiltonian():
    dt, g = 2.0, 300.0
    signs = np.array([0.5, -0.5])
    probs = run_iterations(NEAR, dt, [signs], g)
    total = NEAR.matrix() + np.diag(g * signs)
    w, v = np.linalg.eigh(total)
    psi = ((v * np.exp(-1j * w * K * dt)) @ v.conj().T)[:, 0]
    assert np.abs(probs - np.abs(psi) ** 2).max() < 1e-3


def _fixed_trajectory(
    h, g, seed, total_fs=200.0, gamma_thz=125.0
):
    cfg = FluctuatorConfig.uniform(g, h.n_sites, gamma_thz)
    n_intervals = math.ceil(total_fs / cfg.waiting_time_fs)
    return cfg, generate_interval_signs(cfg, n_intervals, seed)


def _max_error_vs_exact(h, cfg, interval_signs, dt, total_fs):
    a = cfg.switch_interval_steps(dt)
    n_steps = int(round(total_fs / dt))
    signs = expand_interval_signs(interval_signs, a, n_steps)
    traj = FluctuatorTrajectory(signs, a, cfg.strengths_cm1)
    exact = exact_trajectory_series(h, traj, dt, n_steps)

    init = qcore.StateVector.basis_state(2, 2)
    state = init
    worst = 0.0
    compare_stride = int(round(2.0 / dt))
    for i in range(n_steps):
        circuit = circuits.build_iteration_circuit(h, dt, signs[:, :, i], cfg.strengths_cm1)
        state = qcore.run_circuit(circuit, state)
        if (i + 1) % compare_stride == 0:
            probs = qcore.site_probabilities(state, [0])
            worst = max(worst, np.abs(probs - exact[i + 1]).max())
    return worst


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_first_order_trotter_convergence(seed):
    cfg, interval_signs = _fixed_trajectory(NEAR, 300.0, np.random.SeedSequence([17, seed]))
    err_coarse = _max_error_vs_exact(NEAR, cfg, interval_signs, 2.0, 200.0)
    err_fine = _max_error_vs_exact(NEAR, cfg, interval_signs, 1.0, 200.0)
    assert 1.7 <= err_coarse / err_fine <= 2.3


def test_iteration_gate_tally_matches_resource_report():
    it = circuits.build_iteration_circuit(NEAR, 2.0, [0.5, 0.5], 300.0)
    counts = circuits.gate_count(it)
    assert counts["PauliX"] == 4
    assert counts["ControlledRotZ"] == 4
    assert counts["RotY"] == 2
    report = model.estimate_resources(2, 1, 2.0, 2.0)
    for kind, value in report.per_iteration.items():
        assert counts[kind] == value

    h4 = SystemHamiltonian(np.full(4, 12500.0), np.full((4, 4), 30.0) - np.diag(np.full(4, 30.0)))
    it4 = circuits.build_iteration_circuit(h4, 2.0, [0.5, -0.5, 0.5, -0.5], 300.0)
    report4 = model.estimate_resources(4, 1, 2.0, 2.0)
    counts4 = circuits.gate_count(it4)
    for kind, value in report4.per_iteration.items():
        assert counts4[kind] == value


def test_gate_count_empty_and_doubling():
    empty = qcore.QuantumCircuit(2, ())
    assert set(circuits.gate_count(empty).values()) == {0}
    one = circuits.build_iteration_circuit(NEAR, 2.0, [0.5, 0.5], 100.0)
    two = qcore.QuantumCircuit(2, one.gates + one.gates)
    single, double = circuits.gate_count(one), circuits.gate_count(two)
    assert all(double[kind] == 2 * single[kind] for kind in single)


def test_iteration_rejects_bad_signs():
    with pytest.raises(ValueError):
        circuits.build_iteration_circuit(NEAR, 2.0, [0.4, -0.5], 100.0)
    with pytest.raises(ValueError):
        circuits.build_iteration_circuit(NEAR, 0.0, [0.5, -0.5], 100.0)


def test_multi_fluctuator_signs_accepted():
    it = circuits.build_iteration_circuit(NEAR, 2.0, [[0.5, -0.5], [0.5, 0.5]], 100.0)
    counts = circuits.gate_count(it)
    assert counts["ControlledRotZ"] == 2 + 4  # two energies, two sites x two fluctuators


def test_circuit_records_dump():
    records = circuits.circuit_records(circuits.build_coherent_circuit(NEAR, 10.0))
    assert [r["kind"] for r in records] == [
        "RotY",
        "PauliX",
        "ControlledRotZ",
        "PauliX",
        "ControlledRotZ",
        "RotY",
    ]
    crz = records[2]
    assert crz["qubits"] == [0, 1]
    assert crz["angle"] == pytest.approx(-math.sqrt(73504.0) * K * 10.0)
    assert records[0]["angle"] == pytest.approx(-records[-1]["angle"])
    import json

    json.dumps(records)  # must be serializable
