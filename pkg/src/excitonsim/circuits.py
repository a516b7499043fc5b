"""Builders for the coherent evolution circuit and the dephasing iteration.

Both circuits act on log2(N) system qubits (low indices) plus one ancilla
(highest index) that stays in |1> throughout; diagonal evolution is imprinted
as controlled-RotZ phase kickback onto that ancilla, with X gates selecting
the basis state each rotation applies to. Phase angles use energies offset
by their mean, which changes nothing observable but keeps angles small.
"""

from __future__ import annotations

import numpy as np

from excitonsim.model import UNITS, SystemHamiltonian, UnitsContext, eigendecompose, mixing_angle
from excitonsim.qcore import Gate, GateKind, QuantumCircuit

SIGN_VALUES = (0.5, -0.5)


def _selective_phase_gates(values_cm1, scale, system_qubits, ancilla):
    """Phase e^{-i v * scale} on each system basis state m, via select + CRotZ.

    X gates flip the zero bits of m so the all-ones control pattern matches
    exactly that basis state, then flip them back.
    """
    gates = []
    for m, value in enumerate(values_cm1):
        zero_bits = [q for k, q in enumerate(system_qubits) if not (m >> k) & 1]
        for q in zero_bits:
            gates.append(Gate.x(q))
        gates.append(Gate.crz(-2.0 * float(value) * scale, tuple(system_qubits), ancilla))
        for q in zero_bits:
            gates.append(Gate.x(q))
    return gates


def _coherent_gates(h: SystemHamiltonian, t_fs: float, units: UnitsContext):
    decomp = eigendecompose(h)
    energies = decomp.energies_cm1 - decomp.energies_cm1.mean()
    n_sys = h.n_system_qubits
    system = tuple(range(n_sys))
    ancilla = n_sys
    scale = units.phase_per_cm1_fs * t_fs
    gates = []
    if h.n_sites == 2:
        theta = mixing_angle(h)
        gates.append(Gate.ry(theta, 0))
        gates.extend(_selective_phase_gates(energies, scale, system, ancilla))
        gates.append(Gate.ry(-theta, 0))
    else:
        t = decomp.transform
        gates.append(Gate.dense(t, system))
        gates.extend(_selective_phase_gates(energies, scale, system, ancilla))
        gates.append(Gate.dense(t.T, system))
    return gates


def build_coherent_circuit(
    h: SystemHamiltonian, t_fs: float, units: UnitsContext = UNITS
) -> QuantumCircuit:
    """Evolution circuit for time t_fs; run on |0..0>_sys (x) |1>_anc."""
    if t_fs < 0:
        raise ValueError("t_fs must be non-negative")
    return QuantumCircuit(h.n_system_qubits + 1, _coherent_gates(h, t_fs, units))


def build_iteration_circuit(
    h: SystemHamiltonian,
    dt_fs: float,
    signs,
    strengths_cm1,
    units: UnitsContext = UNITS,
) -> QuantumCircuit:
    """One Trotter step: coherent evolution over dt, then fluctuator phases.

    ``signs`` holds the fluctuator values xi in {+1/2, -1/2}, shaped
    (n_sites,) or (n_sites, fluctuators_per_site); ``strengths_cm1`` is the
    per-site coupling g (scalar broadcasts). Site m picks up the phase
    e^{-i xi g k dt} for each of its fluctuators.
    """
    if dt_fs <= 0:
        raise ValueError("dt_fs must be positive")
    xi = np.atleast_1d(np.asarray(signs, dtype=np.float64))
    if xi.ndim == 1:
        xi = xi[:, None]
    if xi.shape[0] != h.n_sites or xi.ndim != 2:
        raise ValueError(f"need one sign row per site, got shape {xi.shape}")
    if not np.isin(xi, SIGN_VALUES).all():
        raise ValueError("fluctuator signs must be +1/2 or -1/2")
    g = np.broadcast_to(np.asarray(strengths_cm1, dtype=np.float64), (h.n_sites,))
    if (g < 0).any():
        raise ValueError("fluctuation strengths must be non-negative")

    gates = _coherent_gates(h, dt_fs, units)
    n_sys = h.n_system_qubits
    system = tuple(range(n_sys))
    ancilla = n_sys
    scale = units.phase_per_cm1_fs * dt_fs
    for m in range(h.n_sites):
        zero_bits = [q for k, q in enumerate(system) if not (m >> k) & 1]
        for q in zero_bits:
            gates.append(Gate.x(q))
        for f in range(xi.shape[1]):
            gates.append(Gate.crz(-2.0 * xi[m, f] * g[m] * scale, system, ancilla))
        for q in zero_bits:
            gates.append(Gate.x(q))
    return QuantumCircuit(n_sys + 1, gates)


def gate_count(circuit: QuantumCircuit) -> dict[str, int]:
    """Exact tally by gate kind; every kind is present, zero counts included."""
    counts = {kind.value: 0 for kind in GateKind}
    for gate in circuit.gates:
        counts[gate.kind.value] += 1
    return counts


def circuit_records(circuit: QuantumCircuit) -> list[dict]:
    """JSON-ready dump; qubits lists controls first, then targets."""
    records = []
    for gate in circuit.gates:
        rec = {
            "kind": gate.kind.value,
            "qubits": list(gate.controls) + list(gate.targets),
            "angle": gate.angle,
        }
        if gate.matrix is not None:
            rec["matrix"] = [[[z.real, z.imag] for z in row] for row in gate.matrix]
        records.append(rec)
    return records
