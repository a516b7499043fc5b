"""Statevector simulation for small qubit registers.

Dense complex128 column vectors; basis index carries qubit 0 as the least
significant bit, so ``|q1 q0>`` has index ``(q1 << 1) | q0``. Everything is
value-semantic: gates and circuits are immutable after construction and
application functions return fresh states, which makes the whole module
re-entrant and safe to drive from concurrent trajectory workers.

Rotation conventions (fixed; all circuit builders rely on them):

    RotY(theta) = [[cos(theta/2), -sin(theta/2)],
                   [sin(theta/2),  cos(theta/2)]]
    RotZ(phi)   = diag(exp(-i phi/2), exp(+i phi/2))

ControlledRotZ applies RotZ to its target on the subspace where every
control qubit is 1 (so with the target held at |1>, the controlled branch
picks up exp(+i phi/2)).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from excitonsim._kernels import apply_ops as _apply_ops
from excitonsim._kernels import site_probs as _site_probs
from excitonsim.errors import NumericalValidationError

NORM_TOL = 1e-9
GATE_NORM_TOL = 1e-12
UNITARY_TOL = 1e-10

# packed op codes shared with the kernels
_OP_FLIP = 0
_OP_ROTY = 1
_OP_PHASE = 2


class GateKind(enum.Enum):
    PAULI_X = "PauliX"
    ROT_Y = "RotY"
    ROT_Z = "RotZ"
    CONTROLLED_ROT_Z = "ControlledRotZ"
    CONTROLLED_NOT = "ControlledNot"
    DENSE_UNITARY = "DenseUnitary"


_ANGLED = {GateKind.ROT_Y, GateKind.ROT_Z, GateKind.CONTROLLED_ROT_Z}


@dataclass(frozen=True, eq=False)
class Gate:
    """One circuit element; use the classmethod constructors."""

    kind: GateKind
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    angle: float | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self):
        touched = self.targets + self.controls
        if len(set(touched)) != len(touched):
            raise ValueError(f"control and target indices must be disjoint: {touched}")
        if any(q < 0 for q in touched):
            raise ValueError(f"negative qubit index in {touched}")
        if self.kind in _ANGLED:
            if self.angle is None or not np.isfinite(self.angle):
                raise ValueError(f"{self.kind.value} requires a finite angle")
        if self.kind is GateKind.DENSE_UNITARY:
            dim = 1 << len(self.targets)
            m = self.matrix
            if m is None or m.shape != (dim, dim):
                raise ValueError("DenseUnitary matrix shape must match its targets")
            if not np.isfinite(m).all():
                raise ValueError("DenseUnitary matrix has non-finite entries")
            if not np.abs(m.conj().T @ m - np.eye(dim)).max() <= UNITARY_TOL:
                raise ValueError("DenseUnitary matrix is not unitary")

    @classmethod
    def x(cls, qubit: int) -> "Gate":
        return cls(GateKind.PAULI_X, (qubit,))

    @classmethod
    def ry(cls, theta: float, qubit: int) -> "Gate":
        return cls(GateKind.ROT_Y, (qubit,), angle=float(theta))

    @classmethod
    def rz(cls, phi: float, qubit: int) -> "Gate":
        return cls(GateKind.ROT_Z, (qubit,), angle=float(phi))

    @classmethod
    def crz(cls, phi: float, controls, target: int) -> "Gate":
        if isinstance(controls, int):
            controls = (controls,)
        return cls(GateKind.CONTROLLED_ROT_Z, (target,), tuple(controls), float(phi))

    @classmethod
    def cnot(cls, control: int, target: int) -> "Gate":
        return cls(GateKind.CONTROLLED_NOT, (target,), (control,))

    @classmethod
    def dense(cls, matrix: np.ndarray, targets) -> "Gate":
        m = np.array(matrix, dtype=np.complex128)
        m.setflags(write=False)
        return cls(GateKind.DENSE_UNITARY, tuple(targets), matrix=m)


@dataclass(eq=False)
class QuantumCircuit:
    """Ordered gate sequence; treat as immutable once built."""

    num_qubits: int
    gates: tuple[Gate, ...]
    _packed: list | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("need at least one qubit")
        self.gates = tuple(self.gates)
        for gate in self.gates:
            _check_indices(gate, self.num_qubits)

    def packed(self) -> list:
        """Kernel-ready segments, computed once and cached."""
        if self._packed is None:
            self._packed = _pack(self.gates)
        return self._packed


def _check_indices(gate: Gate, num_qubits: int) -> None:
    for q in gate.targets + gate.controls:
        if q >= num_qubits:
            raise ValueError(f"qubit {q} out of range for {num_qubits}-qubit register")


def _control_mask(gate: Gate) -> int:
    mask = 0
    for q in gate.controls:
        mask |= 1 << q
    return mask


def _pack(gates) -> list:
    """Group consecutive kernel-supported gates into packed array segments.

    DenseUnitary gates break the stream; they are applied through numpy.
    """
    segments: list = []
    kinds: list[int] = []
    targets: list[int] = []
    cmasks: list[int] = []
    angles: list[float] = []

    def flush():
        if kinds:
            segments.append(
                (
                    "ops",
                    np.array(kinds, dtype=np.int32),
                    np.array(targets, dtype=np.int32),
                    np.array(cmasks, dtype=np.int64),
                    np.array(angles, dtype=np.float64),
                )
            )
            kinds.clear()
            targets.clear()
            cmasks.clear()
            angles.clear()

    for gate in gates:
        if gate.kind is GateKind.DENSE_UNITARY:
            flush()
            segments.append(("dense", gate.matrix, gate.targets))
            continue
        if gate.kind in (GateKind.PAULI_X, GateKind.CONTROLLED_NOT):
            op = _OP_FLIP
        elif gate.kind is GateKind.ROT_Y:
            op = _OP_ROTY
        else:
            op = _OP_PHASE
        kinds.append(op)
        targets.append(gate.targets[0])
        cmasks.append(_control_mask(gate))
        angles.append(0.0 if gate.angle is None else gate.angle)
    flush()
    return segments


def _apply_dense(amps: np.ndarray, matrix: np.ndarray, targets: tuple[int, ...]) -> np.ndarray:
    """Apply a 2^k x 2^k unitary to the subspace spanned by ``targets``.

    targets[0] is the least significant bit of the gate's own index space.
    """
    k = len(targets)
    dim = amps.size
    idx = np.arange(dim)
    sub = np.zeros(dim, dtype=np.int64)
    for pos, q in enumerate(targets):
        sub |= ((idx >> q) & 1) << pos
    tmask = 0
    for q in targets:
        tmask |= 1 << q
    rest = idx & ~tmask
    order = np.lexsort((sub, rest))
    gathered = amps[order].reshape(-1, 1 << k)
    mixed = gathered @ matrix.T
    out = np.empty_like(amps)
    out[order] = mixed.reshape(-1)
    return out


def _execute_packed(amps: np.ndarray, num_qubits: int, segments: list) -> np.ndarray:
    """Run packed segments on ``amps`` in place; returns the (possibly new) buffer."""
    for seg in segments:
        if seg[0] == "ops":
            _apply_ops(amps, num_qubits, seg[1], seg[2], seg[3], seg[4])
        else:
            amps = _apply_dense(amps, seg[1], seg[2])
    return amps


@dataclass(eq=False)
class StateVector:
    """Normalized amplitude vector over 2^num_qubits basis states."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (1 << self.num_qubits,):
            raise ValueError(
                f"expected {1 << self.num_qubits} amplitudes, got shape {amps.shape}"
            )
        if not np.isfinite(amps.view(np.float64)).all():
            raise NumericalValidationError("non-finite amplitude")
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise NumericalValidationError(f"state norm^2 drifted to {norm2!r}")
        self.amplitudes = amps

    @classmethod
    def zero_state(cls, num_qubits: int) -> "StateVector":
        return cls.basis_state(num_qubits, 0)

    @classmethod
    def basis_state(cls, num_qubits: int, index: int) -> "StateVector":
        amps = np.zeros(1 << num_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(num_qubits, amps)

    def probability(self, index: int) -> float:
        return float(abs(self.amplitudes[index]) ** 2)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Return gate * state; the input state is untouched."""
    _check_indices(gate, state.num_qubits)
    amps = state.amplitudes.copy()
    amps = _execute_packed(amps, state.num_qubits, _pack((gate,)))
    norm2 = float(np.vdot(amps, amps).real)
    if not abs(norm2 - 1.0) <= GATE_NORM_TOL:
        raise NumericalValidationError(f"gate application drifted norm^2 to {norm2!r}")
    out = StateVector.__new__(StateVector)
    out.num_qubits = state.num_qubits
    out.amplitudes = amps
    return out


def run_circuit(circuit: QuantumCircuit, initial: StateVector) -> StateVector:
    """Apply all gates in order. Deterministic; validates the final norm."""
    if circuit.num_qubits != initial.num_qubits:
        raise ValueError("circuit and state sizes differ")
    amps = initial.amplitudes.copy()
    amps = _execute_packed(amps, circuit.num_qubits, circuit.packed())
    return StateVector(circuit.num_qubits, amps)


def site_probabilities(state: StateVector, system_qubits) -> np.ndarray:
    """Marginal probabilities over ``system_qubits`` (everything else summed out).

    The returned index m reads system_qubits[0] as its least significant bit.
    """
    qs = tuple(system_qubits)
    if not qs:
        raise ValueError("system_qubits must not be empty")
    if len(set(qs)) != len(qs):
        raise ValueError("duplicate qubit in system_qubits")
    for q in qs:
        if not 0 <= q < state.num_qubits:
            raise ValueError(f"qubit {q} out of range")
    amps = state.amplitudes
    if qs == tuple(range(len(qs))):
        out = np.empty(1 << len(qs), dtype=np.float64)
        _site_probs(amps, state.num_qubits, len(qs), out)
        return out
    p = amps.real**2 + amps.imag**2
    idx = np.arange(amps.size)
    m = np.zeros(amps.size, dtype=np.int64)
    for pos, q in enumerate(qs):
        m |= ((idx >> q) & 1) << pos
    return np.bincount(m, weights=p, minlength=1 << len(qs))


def sample_shots(probabilities, shots: int, rng_seed) -> np.ndarray:
    """Multinomial counts over outcomes; pure function of (p, shots, seed)."""
    p = np.asarray(probabilities, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("probabilities must be a non-empty 1-d array")
    if (p < 0).any():
        raise ValueError("negative probability")
    total = p.sum()
    if abs(total - 1.0) > NORM_TOL:
        raise ValueError(f"probabilities sum to {total!r}, not 1")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(rng_seed)
    return rng.multinomial(shots, p / total)
