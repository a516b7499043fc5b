"""Classical reference solutions used to validate the circuit pipeline.

Three independent routes:

* exact_trajectory_propagate: for a fixed telegraph-noise trajectory the
  total Hamiltonian is constant within each waiting interval, so the exact
  propagator is a product of dense matrix exponentials (no Trotter error).
* lindblad_integrate: pure-dephasing master equation with one projector
  jump operator per site and a single rate gamma_deph, integrated by
  classical fixed-step RK4 on the vectorized generator.
* fit_dephasing_rate: least-squares match of the Lindblad populations to an
  ensemble time series, golden-section search over log(gamma_deph).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from excitonsim.errors import NumericalValidationError
from excitonsim.model import UNITS, SystemHamiltonian, UnitsContext, beating_period
from excitonsim.noise import FluctuatorTrajectory

THZ_TO_INV_FS = 1e-3

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-9
POSITIVITY_TOL = -1e-8


@dataclass(eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, (tolerantly) positive matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.matrix, dtype=np.complex128)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("density matrix must be square")
        if not np.isfinite(rho).all():
            raise NumericalValidationError("density matrix has non-finite entries")
        if not np.abs(rho - rho.conj().T).max() <= HERMITICITY_TOL:
            raise NumericalValidationError("density matrix is not Hermitian")
        if not abs(np.trace(rho).real - 1.0) <= TRACE_TOL:
            raise NumericalValidationError(f"trace drifted to {np.trace(rho)!r}")
        if not np.linalg.eigvalsh(rho).min() >= POSITIVITY_TOL:
            raise NumericalValidationError("density matrix lost positivity")
        self.matrix = rho

    @classmethod
    def site_excitation(cls, n_sites: int, site: int = 0) -> "DensityMatrix":
        rho = np.zeros((n_sites, n_sites), dtype=np.complex128)
        rho[site, site] = 1.0
        return cls(rho)

    @property
    def populations(self) -> np.ndarray:
        return np.diag(self.matrix).real.copy()


@dataclass(frozen=True, eq=False)
class LindbladModel:
    """Site-projector dephasing model: jump operators |m><m|, rate in THz."""

    h: SystemHamiltonian
    gamma_deph_thz: float

    def __post_init__(self):
        if self.gamma_deph_thz < 0:
            raise ValueError("gamma_deph_thz must be non-negative")

    def jump_operators(self) -> list[np.ndarray]:
        n = self.h.n_sites
        ops = []
        for m in range(n):
            l = np.zeros((n, n), dtype=np.complex128)
            l[m, m] = 1.0
            ops.append(l)
        return ops

    def liouvillian(self, units: UnitsContext = UNITS) -> np.ndarray:
        """Generator acting on row-major vec(rho), in 1/fs."""
        n = self.h.n_sites
        eye = np.eye(n)
        h_rad = self.h.matrix() * units.phase_per_cm1_fs
        gen = -1j * (np.kron(h_rad, eye) - np.kron(eye, h_rad.T))
        rate = self.gamma_deph_thz * THZ_TO_INV_FS
        for l in self.jump_operators():
            ldl = l.conj().T @ l
            gen += rate * (
                np.kron(l, l.conj())
                - 0.5 * np.kron(ldl, eye)
                - 0.5 * np.kron(eye, ldl.T)
            )
        return gen


def _rk4_span(gen: np.ndarray, v: np.ndarray, span_fs: float, max_step_fs: float) -> np.ndarray:
    n_sub = max(1, math.ceil(span_fs / max_step_fs - 1e-12))
    step = span_fs / n_sub
    for _ in range(n_sub):
        k1 = gen @ v
        k2 = gen @ (v + 0.5 * step * k1)
        k3 = gen @ (v + 0.5 * step * k2)
        k4 = gen @ (v + step * k3)
        v = v + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return v


def _integrate_populations(
    model: LindbladModel,
    rho0: np.ndarray,
    t_grid_fs: np.ndarray,
    max_step_fs: float,
    units: UnitsContext,
):
    """Shared stepping core; returns vec(rho) at every grid point."""
    t = np.asarray(t_grid_fs, dtype=np.float64)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("time grid must be a non-empty 1-d array")
    if (np.diff(t) <= 0).any() or t[0] < 0:
        raise ValueError("time grid must be strictly increasing and non-negative")
    if max_step_fs <= 0:
        raise ValueError("max_step_fs must be positive")
    gen = model.liouvillian(units)
    v = rho0.reshape(-1).astype(np.complex128)
    out = np.empty((t.size, v.size), dtype=np.complex128)
    prev = 0.0
    for i, ti in enumerate(t):
        if ti > prev:
            v = _rk4_span(gen, v, ti - prev, max_step_fs)
            prev = ti
        out[i] = v
    n = model.h.n_sites
    drift = np.abs(out.reshape(t.size, n, n).trace(axis1=1, axis2=2) - 1.0).max()
    if not drift <= 1e-6:
        raise NumericalValidationError(
            f"integration step too large: trace drifted by {drift:.3e}"
        )
    return out


def lindblad_integrate(
    model: LindbladModel,
    rho0: DensityMatrix,
    t_grid_fs,
    max_step_fs: float = 0.5,
    units: UnitsContext = UNITS,
) -> list[DensityMatrix]:
    """Density matrices on the grid; every output is invariant-checked."""
    t = np.asarray(t_grid_fs, dtype=np.float64)
    vecs = _integrate_populations(model, rho0.matrix, t, max_step_fs, units)
    n = model.h.n_sites
    return [DensityMatrix(vec.reshape(n, n)) for vec in vecs]


def lindblad_populations(
    model: LindbladModel,
    t_grid_fs,
    max_step_fs: float = 0.5,
    units: UnitsContext = UNITS,
) -> np.ndarray:
    """Site populations from |0><0|, shape (n_points, n_sites). Fast path
    for the fit loop: same integrator, invariants checked only at the end."""
    n = model.h.n_sites
    rho0 = DensityMatrix.site_excitation(n).matrix
    vecs = _integrate_populations(model, rho0, np.asarray(t_grid_fs, float), max_step_fs, units)
    DensityMatrix(vecs[-1].reshape(n, n))
    pops = vecs.reshape(-1, n, n).diagonal(axis1=1, axis2=2).real
    return pops


def exact_trajectory_series(
    h: SystemHamiltonian,
    trajectory: FluctuatorTrajectory,
    dt_fs: float,
    n_steps: int | None = None,
    units: UnitsContext = UNITS,
) -> np.ndarray:
    """Piecewise-exact populations on the iteration grid, (n_steps+1, n_sites).

    Within each step the full Hamiltonian (chain + fluctuator shifts) is
    constant, so each step is a dense eigh-based matrix exponential; the only
    approximation anywhere is measurement statistics, which this bypasses.
    """
    if n_steps is None:
        n_steps = trajectory.n_steps
    if n_steps > trajectory.n_steps:
        raise ValueError(
            f"trajectory covers {trajectory.n_steps} steps, requested {n_steps}"
        )
    shifts = trajectory.site_shifts_cm1()
    h_site = h.matrix()
    k = units.phase_per_cm1_fs
    psi = np.zeros(h.n_sites, dtype=np.complex128)
    psi[0] = 1.0
    out = np.empty((n_steps + 1, h.n_sites), dtype=np.float64)
    out[0] = np.abs(psi) ** 2
    cache: dict = {}
    for i in range(n_steps):
        key = shifts[:, i].tobytes()
        u = cache.get(key)
        if u is None:
            total = h_site + np.diag(shifts[:, i])
            w, vecs = np.linalg.eigh(total)
            u = (vecs * np.exp(-1j * w * k * dt_fs)) @ vecs.conj().T
            cache[key] = u
        psi = u @ psi
        out[i + 1] = np.abs(psi) ** 2
    return out


def exact_trajectory_propagate(
    h: SystemHamiltonian,
    trajectory: FluctuatorTrajectory,
    dt_fs: float,
    t_fs: float,
    units: UnitsContext = UNITS,
) -> np.ndarray:
    """Populations at time t_fs (a point on the iteration grid)."""
    steps = int(round(t_fs / dt_fs))
    if abs(steps * dt_fs - t_fs) > 1e-9 * max(t_fs, dt_fs):
        raise ValueError(f"t_fs={t_fs} is not on the dt={dt_fs} grid")
    return exact_trajectory_series(h, trajectory, dt_fs, steps, units)[-1]


@dataclass(frozen=True)
class FitResult:
    gamma_deph_thz: float
    residual_rms: float
    n_evaluations: int


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def fit_dephasing_rate(
    t_fs,
    populations,
    h: SystemHamiltonian,
    bracket_thz: tuple[float, float] = (0.1, 500.0),
    log_tol: float = 1e-3,
    max_step_fs: float = 0.5,
) -> FitResult:
    """Dephasing rate whose Lindblad populations best match the series.

    Scans a log-spaced grid over ``bracket_thz`` to bracket the minimum of
    the summed squared deviation, then refines by golden-section search in
    log space. A minimum pushed against the upper bracket edge is an error;
    the lower edge is a legitimate answer for effectively coherent series.
    """
    t = np.asarray(t_fs, dtype=np.float64)
    p = np.asarray(populations, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] != t.size or p.shape[1] != h.n_sites:
        raise ValueError("populations must have shape (len(t_fs), n_sites)")
    if not (np.isfinite(t).all() and np.isfinite(p).all()):
        raise ValueError("non-finite values in the ensemble series")
    if t[-1] - t[0] < 2.0 * beating_period(h):
        raise ValueError("series must cover at least two beating periods")

    evaluations = 0

    def objective(log_gamma: float) -> float:
        nonlocal evaluations
        evaluations += 1
        model = LindbladModel(h, math.exp(log_gamma))
        pops = lindblad_populations(model, t, max_step_fs)
        return float(((pops - p) ** 2).sum())

    lo, hi = (math.log(g) for g in bracket_thz)
    grid = np.linspace(lo, hi, 17)
    values = [objective(x) for x in grid]
    best = int(np.argmin(values))
    if best == len(grid) - 1:
        raise ValueError(
            "failed to bracket a minimum: best dephasing rate at the upper bound"
        )
    a = grid[max(best - 1, 0)]
    b = grid[best + 1]

    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = objective(c), objective(d)
    while b - a > log_tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = objective(d)
    log_best = c if fc < fd else d
    sse = min(fc, fd)
    rms = math.sqrt(sse / p.size)
    return FitResult(math.exp(log_best), rms, evaluations)
