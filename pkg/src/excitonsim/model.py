"""Exciton-chain Hamiltonians, units, eigendecomposition, closed-form dynamics.

Energies live in cm^-1 and times in fs throughout the package; the single
bridge between them is PHASE_PER_CM1_FS = 2*pi*c, the accumulated phase in
rad per fs per cm^-1. Populations of a two-site chain prepared with the
excitation on site 0 follow

    P1(t) = (4 J^2 / Omega^2) * sin^2(Omega~ t / 2),   Omega = sqrt(w^2 + 4 J^2)

with w = eps1 - eps0 and Omega~ = Omega * PHASE_PER_CM1_FS; this is the
independent reference the circuit path is checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT_CM_PER_FS = 2.99792458e-5
PHASE_PER_CM1_FS = 2.0 * math.pi * SPEED_OF_LIGHT_CM_PER_FS


@dataclass(frozen=True)
class UnitsContext:
    """Unit bridge: phase accumulated per cm^-1 of energy per fs of time."""

    phase_per_cm1_fs: float = PHASE_PER_CM1_FS


UNITS = UnitsContext()


def _as_readonly(a, dtype=np.float64):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SystemHamiltonian:
    """N-site exciton Hamiltonian in the site basis (cm^-1).

    site_energies_cm1: first-excited-state energy per molecule.
    couplings_cm1: symmetric electronic couplings, zero diagonal.
    N must be a power of two so sites map onto qubit basis states.
    """

    site_energies_cm1: np.ndarray
    couplings_cm1: np.ndarray

    def __post_init__(self):
        eps = _as_readonly(self.site_energies_cm1)
        j = _as_readonly(self.couplings_cm1)
        n = eps.size
        if eps.ndim != 1 or n < 2:
            raise ValueError("need a 1-d array of at least two site energies")
        if n & (n - 1):
            raise ValueError(f"n_sites must be a power of two, got {n}")
        if j.shape != (n, n):
            raise ValueError("couplings must be an n_sites x n_sites matrix")
        if not (np.isfinite(eps).all() and np.isfinite(j).all()):
            raise ValueError("non-finite Hamiltonian entry")
        if np.abs(j - j.T).max() > 1e-9:
            raise ValueError("couplings must be symmetric")
        if np.abs(np.diag(j)).max() > 0:
            raise ValueError("couplings must have a zero diagonal")
        object.__setattr__(self, "site_energies_cm1", eps)
        object.__setattr__(self, "couplings_cm1", j)

    @property
    def n_sites(self) -> int:
        return self.site_energies_cm1.size

    @property
    def n_system_qubits(self) -> int:
        return self.n_sites.bit_length() - 1

    def matrix(self) -> np.ndarray:
        return np.diag(self.site_energies_cm1) + self.couplings_cm1

    @classmethod
    def two_site(cls, eps0: float, eps1: float, coupling: float) -> "SystemHamiltonian":
        return cls([eps0, eps1], [[0.0, coupling], [coupling, 0.0]])

    @classmethod
    def near_resonant(cls) -> "SystemHamiltonian":
        return cls.two_site(13000.0, 12900.0, 126.0)

    @classmethod
    def non_resonant(cls) -> "SystemHamiltonian":
        return cls.two_site(12900.0, 12300.0, 132.0)


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """Energies sorted descending; transform rows are the matching eigenvectors.

    Satisfies transform.T @ diag(energies) @ transform == H.
    """

    energies_cm1: np.ndarray
    transform: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "energies_cm1", _as_readonly(self.energies_cm1))
        object.__setattr__(self, "transform", _as_readonly(self.transform))


def _jacobi_eigh(a: np.ndarray, sweeps: int = 50, tol: float = 1e-14):
    """Cyclic Jacobi diagonalization of a small real symmetric matrix.

    Returns (eigenvalues, V) with columns of V the eigenvectors, unsorted.
    """
    a = a.astype(np.float64).copy()
    n = a.shape[0]
    v = np.eye(n)
    scale = max(np.abs(a).max(), 1.0)
    for _ in range(sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off = max(off, abs(a[p, q]))
                if abs(a[p, q]) <= tol * scale:
                    continue
                # rotation angle zeroing a[p, q]
                theta = 0.5 * math.atan2(2.0 * a[p, q], a[p, p] - a[q, q])
                c, s = math.cos(theta), math.sin(theta)
                rp, rq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * rp + s * rq
                a[:, q] = -s * rp + c * rq
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp + s * rq
                a[q, :] = -s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp + s * vq
                v[:, q] = -s * vp + c * vq
        if off <= tol * scale:
            break
    return np.diag(a).copy(), v


def eigendecompose(h: SystemHamiltonian) -> EigenDecomposition:
    """Diagonalize; closed form for two sites, Jacobi iteration otherwise."""
    if h.n_sites == 2:
        eps0, eps1 = h.site_energies_cm1
        j = h.couplings_cm1[0, 1]
        omega = math.hypot(eps0 - eps1, 2.0 * j)
        mean = 0.5 * (eps0 + eps1)
        energies = np.array([mean + 0.5 * omega, mean - 0.5 * omega])
        alpha = math.atan2(2.0 * j, eps0 - eps1)
        c, s = math.cos(0.5 * alpha), math.sin(0.5 * alpha)
        transform = np.array([[c, s], [-s, c]])
        return EigenDecomposition(energies, transform)
    w, v = _jacobi_eigh(h.matrix())
    order = np.argsort(w)[::-1]
    return EigenDecomposition(w[order], v[:, order].T)


def mixing_angle(h: SystemHamiltonian) -> float:
    """Basis-rotation angle for the two-site circuit, atan2(2J, eps0 - eps1).

    RotY(theta) with this angle carries the site basis into the phase-gate
    basis of the evolution circuits; populations produced that way match
    analytic_populations exactly.
    """
    if h.n_sites != 2:
        raise ValueError("mixing_angle is defined for two-site chains")
    eps0, eps1 = h.site_energies_cm1
    return math.atan2(2.0 * h.couplings_cm1[0, 1], eps0 - eps1)


def analytic_populations(h: SystemHamiltonian, t_fs, units: UnitsContext = UNITS):
    """Closed-form (P0, P1) for a two-site chain prepared in site 0.

    Accepts scalar or array times; depends only on eps0 - eps1 and J, so it
    is invariant under a constant energy shift.
    """
    if h.n_sites != 2:
        raise ValueError("analytic_populations is defined for two-site chains")
    eps0, eps1 = h.site_energies_cm1
    j = h.couplings_cm1[0, 1]
    omega = math.hypot(eps0 - eps1, 2.0 * j)
    t = np.asarray(t_fs, dtype=np.float64)
    if omega == 0.0:
        p1 = np.zeros_like(t)
    else:
        amp = 4.0 * j * j / (omega * omega)
        p1 = amp * np.sin(0.5 * omega * units.phase_per_cm1_fs * t) ** 2
    return 1.0 - p1, p1


def beating_period(h: SystemHamiltonian, units: UnitsContext = UNITS) -> float:
    """Period 2*pi / (Omega * phase_per_cm1_fs) of the population beating."""
    if h.n_sites != 2:
        raise ValueError("beating_period is defined for two-site chains")
    eps0, eps1 = h.site_energies_cm1
    omega = math.hypot(eps0 - eps1, 2.0 * h.couplings_cm1[0, 1])
    if omega == 0.0:
        raise ValueError("degenerate uncoupled system has no beating period")
    return 2.0 * math.pi / (omega * units.phase_per_cm1_fs)


@dataclass(frozen=True)
class ResourceReport:
    """Qubit/gate/iteration accounting for a simulation configuration."""

    n_sites: int
    fluctuators_per_site: int
    t_fs: float
    dt_fs: float
    iterations: int
    qubits: int
    register_qubits: int
    per_iteration: dict
    total: dict
    asymptotic: dict

    def to_dict(self) -> dict:
        return {
            "n_sites": self.n_sites,
            "fluctuators_per_site": self.fluctuators_per_site,
            "t_fs": self.t_fs,
            "dt_fs": self.dt_fs,
            "iterations": self.iterations,
            "qubits": self.qubits,
            "register_qubits": self.register_qubits,
            "per_iteration": dict(self.per_iteration),
            "total": dict(self.total),
            "asymptotic": dict(self.asymptotic),
        }


def estimate_resources(
    n_sites: int, fluctuators_per_site: int = 1, t_fs: float = 0.0, dt_fs: float = 1.0
) -> ResourceReport:
    """Qubit count, iteration count and per-iteration gate tallies.

    The qubit figure follows the 2*log2(N) accounting of the underlying
    algorithm; register_qubits is what this package's simulator actually
    allocates (log2(N) system qubits plus one reused ancilla).
    """
    if n_sites < 2 or n_sites & (n_sites - 1):
        raise ValueError(f"n_sites must be a power of two >= 2, got {n_sites}")
    if fluctuators_per_site < 1:
        raise ValueError("fluctuators_per_site must be >= 1")
    if dt_fs <= 0:
        raise ValueError("dt_fs must be positive")
    if t_fs < 0:
        raise ValueError("t_fs must be non-negative")
    iterations = int(round(t_fs / dt_fs))
    if abs(iterations * dt_fs - t_fs) > 1e-9 * max(t_fs, dt_fs):
        raise ValueError(f"t_fs={t_fs} is not a multiple of dt_fs={dt_fs}")
    q = n_sites.bit_length() - 1
    f = fluctuators_per_site
    # X gates select each basis state before/after its controlled rotation:
    # summed over all N states of q bits, half the bits are zero.
    per_iteration = {
        "PauliX": 2 * n_sites * q,
        "ControlledRotZ": n_sites * (1 + f),
        "RotY": 2 if n_sites == 2 else 0,
        "RotZ": 0,
        "ControlledNot": 0,
        "DenseUnitary": 0 if n_sites == 2 else 2,
    }
    total = {kind: count * iterations for kind, count in per_iteration.items()}
    asymptotic = {
        "qubits = 2 log2 N": 2 * q,
        "coherent gates = O(N^2 log2^2 N)": n_sites**2 * q**2,
        "gates per run = O((t/dt) N (log2 N + F))": iterations * n_sites * (q + f),
    }
    return ResourceReport(
        n_sites=n_sites,
        fluctuators_per_site=f,
        t_fs=float(t_fs),
        dt_fs=float(dt_fs),
        iterations=iterations,
        qubits=2 * q,
        register_qubits=q + 1,
        per_iteration=per_iteration,
        total=total,
        asymptotic=asymptotic,
    )
