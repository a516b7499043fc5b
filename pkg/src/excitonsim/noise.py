"""Bi-stable fluctuator trajectories and the stochastic ensemble simulation.

Each site couples to F independent telegraph fluctuators. A fluctuator holds
a value xi in {+1/2, -1/2}; at iteration 0 and at every switch interval
a = waiting_time / dt it is re-drawn by a fair coin (so it may repeat, and
constant-energy stretches have geometrically distributed length). The site
energy shift is g * sum of its fluctuators' values.

Seeding: run r derives its streams from SeedSequence([master_seed, r]), so
results are bit-identical however runs are scheduled across workers.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from excitonsim.circuits import build_iteration_circuit
from excitonsim.errors import ConfigError, NumericalValidationError
from excitonsim.model import SystemHamiltonian
from excitonsim.qcore import _execute_packed
from excitonsim._kernels import site_probs as _site_probs

_DIVISIBILITY_RTOL = 1e-9


def _exact_steps(span: float, step: float, what: str) -> int:
    n = int(round(span / step))
    if n < 0 or abs(n * step - span) > _DIVISIBILITY_RTOL * max(abs(span), step):
        raise ConfigError(f"{what}: {span} is not an integer multiple of {step}")
    return n


@dataclass(frozen=True, eq=False)
class FluctuatorConfig:
    """Telegraph-noise parameters: per-site strength g (cm^-1), switch rate
    gamma (THz), fluctuators per site."""

    strengths_cm1: np.ndarray
    switching_rate_thz: float
    fluctuators_per_site: int = 1

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.strengths_cm1, dtype=np.float64))
        if g.ndim != 1 or g.size < 1 or (g < 0).any() or not np.isfinite(g).all():
            raise ConfigError("strengths_cm1 must be non-negative and finite")
        if not self.switching_rate_thz > 0:
            raise ConfigError("switching_rate_thz must be positive")
        if self.fluctuators_per_site < 1:
            raise ConfigError("fluctuators_per_site must be >= 1")
        g.setflags(write=False)
        object.__setattr__(self, "strengths_cm1", g)

    @classmethod
    def uniform(cls, strength_cm1, n_sites, switching_rate_thz, fluctuators_per_site=1):
        return cls(
            np.full(n_sites, float(strength_cm1)),
            switching_rate_thz,
            fluctuators_per_site,
        )

    @property
    def n_sites(self) -> int:
        return self.strengths_cm1.size

    @property
    def waiting_time_fs(self) -> float:
        return 1e3 / self.switching_rate_thz

    def switch_interval_steps(self, dt_fs: float) -> int:
        """Iterations per fluctuator interval; the waiting time must divide dt."""
        if dt_fs <= 0:
            raise ConfigError("dt_fs must be positive")
        steps = _exact_steps(self.waiting_time_fs, dt_fs, "fluctuator waiting time")
        if steps < 1:
            raise ConfigError(
                f"waiting time {self.waiting_time_fs} fs is shorter than dt {dt_fs} fs"
            )
        return steps


@dataclass(frozen=True, eq=False)
class FluctuatorTrajectory:
    """Realized signs, shape (n_sites, fluctuators_per_site, n_steps)."""

    signs: np.ndarray
    switch_interval_steps: int
    strengths_cm1: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "signs", np.asarray(self.signs, dtype=np.float64))
        object.__setattr__(
            self, "strengths_cm1", np.asarray(self.strengths_cm1, dtype=np.float64)
        )

    @property
    def n_sites(self) -> int:
        return self.signs.shape[0]

    @property
    def n_steps(self) -> int:
        return self.signs.shape[2]

    def site_shifts_cm1(self) -> np.ndarray:
        """Per-site energy shift time series, shape (n_sites, n_steps)."""
        return self.strengths_cm1[:, None] * self.signs.sum(axis=1)


def generate_interval_signs(config: FluctuatorConfig, n_intervals: int, seed) -> np.ndarray:
    """Fair-coin draws of +-1/2 per (site, fluctuator, interval)."""
    rng = np.random.default_rng(seed)
    draws = rng.integers(
        0, 2, size=(config.n_sites, config.fluctuators_per_site, n_intervals)
    )
    return draws.astype(np.float64) - 0.5


def expand_interval_signs(interval_signs: np.ndarray, interval_steps: int, n_steps: int) -> np.ndarray:
    """Repeat each interval's sign for its constituent iterations."""
    expanded = np.repeat(interval_signs, interval_steps, axis=2)
    if expanded.shape[2] < n_steps:
        raise ValueError("interval signs cover fewer iterations than requested")
    return expanded[:, :, :n_steps]


def generate_trajectory(
    config: FluctuatorConfig, n_iterations: int, dt_fs: float, seed
) -> FluctuatorTrajectory:
    """Draw a trajectory of n_iterations steps; deterministic in the seed."""
    if n_iterations < 0:
        raise ValueError("n_iterations must be non-negative")
    a = config.switch_interval_steps(dt_fs)
    n_intervals = -(-n_iterations // a) if n_iterations else 0
    interval_signs = generate_interval_signs(config, max(n_intervals, 1), seed)
    signs = expand_interval_signs(interval_signs, a, max(n_iterations, 1))[:, :, :n_iterations]
    return FluctuatorTrajectory(signs, a, config.strengths_cm1)


@dataclass(frozen=True, eq=False)
class EnsembleConfig:
    """Monte Carlo controls: runs, shots per time point, step, horizon, seed."""

    runs: int
    shots: int
    dt_fs: float
    t_max_fs: float
    master_seed: int

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.shots < 1:
            raise ConfigError("shots must be >= 1")
        if self.dt_fs <= 0:
            raise ConfigError("dt_fs must be positive")
        if self.t_max_fs < 0:
            raise ConfigError("t_max_fs must be non-negative")
        if self.master_seed < 0:
            raise ConfigError("master_seed must be non-negative")
        self.n_steps  # validates divisibility

    @property
    def n_steps(self) -> int:
        return _exact_steps(self.t_max_fs, self.dt_fs, "t_max_fs")

    def time_grid_fs(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt_fs


@dataclass(eq=False)
class EnsembleResult:
    """Across-run mean of shot frequencies with standard errors."""

    t_fs: np.ndarray
    p_mean: np.ndarray
    p_stderr: np.ndarray
    runs: int
    shots: int
    master_seed: int


def _run_frequencies(
    h: SystemHamiltonian,
    noise_cfg: FluctuatorConfig,
    ens: EnsembleConfig,
    run_index: int,
) -> np.ndarray:
    """Shot frequencies for one run, shape (n_steps + 1, n_sites)."""
    if noise_cfg.n_sites != h.n_sites:
        raise ConfigError("fluctuator configuration does not match the chain size")
    n_steps = ens.n_steps
    ss = np.random.SeedSequence([ens.master_seed, run_index])
    traj_ss, shot_ss = ss.spawn(2)
    trajectory = generate_trajectory(noise_cfg, n_steps, ens.dt_fs, traj_ss)
    rng = np.random.default_rng(shot_ss)

    n_sys = h.n_system_qubits
    num_qubits = n_sys + 1
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[1 << n_sys] = 1.0  # |0..0>_sys (x) |1>_anc
    probs = np.empty(h.n_sites, dtype=np.float64)
    freq = np.empty((n_steps + 1, h.n_sites), dtype=np.float64)

    packed_cache: dict = {}
    signs = trajectory.signs

    def record(i: int) -> None:
        _site_probs(amps, num_qubits, n_sys, probs)
        p = np.clip(probs, 0.0, None)
        counts = rng.multinomial(ens.shots, p / p.sum())
        freq[i] = counts / ens.shots

    record(0)
    for i in range(n_steps):
        key = signs[:, :, i].tobytes()
        segments = packed_cache.get(key)
        if segments is None:
            circuit = build_iteration_circuit(
                h, ens.dt_fs, signs[:, :, i], noise_cfg.strengths_cm1
            )
            segments = circuit.packed()
            packed_cache[key] = segments
        amps = _execute_packed(amps, num_qubits, segments)
        record(i + 1)

    norm2 = float(np.vdot(amps, amps).real)
    if abs(norm2 - 1.0) > 1e-9:
        raise NumericalValidationError(f"run {run_index}: norm^2 drifted to {norm2!r}")
    return freq


def run_ensemble(
    h: SystemHamiltonian,
    noise_cfg: FluctuatorConfig,
    ens: EnsembleConfig,
    workers: int = 1,
) -> EnsembleResult:
    """Average shot frequencies over ens.runs independent trajectories.

    Per-run seeds are bound to the run index, and runs are reduced in index
    order, so the result does not depend on ``workers``.
    """
    indices = range(ens.runs)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            freqs = list(
                pool.map(
                    _run_frequencies,
                    [h] * ens.runs,
                    [noise_cfg] * ens.runs,
                    [ens] * ens.runs,
                    indices,
                    chunksize=max(1, ens.runs // (4 * workers)),
                )
            )
    else:
        freqs = [_run_frequencies(h, noise_cfg, ens, r) for r in indices]
    stacked = np.stack(freqs)
    p_mean = stacked.mean(axis=0)
    if ens.runs > 1:
        p_stderr = stacked.std(axis=0, ddof=1) / np.sqrt(ens.runs)
    else:
        p_stderr = np.zeros_like(p_mean)
    return EnsembleResult(
        t_fs=ens.time_grid_fs(),
        p_mean=p_mean,
        p_stderr=p_stderr,
        runs=ens.runs,
        shots=ens.shots,
        master_seed=ens.master_seed,
    )
