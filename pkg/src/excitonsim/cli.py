"""Configuration-driven experiment runner.

Subcommands: ``coherent`` (isolated-chain beating), ``dephasing``
(telegraph-noise ensemble plus Lindblad fit), ``resources`` (qubit/gate
report), ``fit`` (refit a previously emitted ensemble CSV).

Configs are JSON (TOML accepted on Python 3.11+) with sections
[hamiltonian], [noise], [ensemble], [output]. Every emitted file embeds the
fully resolved physics configuration, so re-running a command with the same
config reproduces the numeric columns byte for byte; ``--seed`` overrides
the configured master seed. Exit codes: 0 ok, 2 bad configuration, 3
numerical validation failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from excitonsim import circuits, model, noise, qcore, reference
from excitonsim.errors import ConfigError, NumericalValidationError

ENV_OUTPUT_DIR = "EXCITONSIM_OUTPUT_DIR"

PRESETS = {
    "near_resonant": model.SystemHamiltonian.near_resonant,
    "non_resonant": model.SystemHamiltonian.non_resonant,
}


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def load_config(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    text = p.read_text()
    if p.suffix == ".toml":
        try:
            import tomllib
        except ImportError as exc:
            raise ConfigError("TOML configs need Python >= 3.11; use JSON") from exc
        try:
            return tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"malformed TOML config: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON config: {exc}") from exc


def resolve_hamiltonian(section: dict) -> model.SystemHamiltonian:
    if not isinstance(section, dict):
        raise ConfigError("missing [hamiltonian] section")
    preset = section.get("preset")
    matrix = section.get("matrix")
    if (preset is None) == (matrix is None):
        raise ConfigError("hamiltonian needs exactly one of 'preset' or 'matrix'")
    if preset is not None:
        try:
            return PRESETS[preset]()
        except KeyError:
            raise ConfigError(
                f"unknown preset {preset!r}; choose from {sorted(PRESETS)}"
            ) from None
    m = np.asarray(matrix, dtype=np.float64)
    if m.shape != (2, 2):
        raise ConfigError("custom hamiltonian matrix must be 2x2 (cm^-1)")
    try:
        return model.SystemHamiltonian.two_site(m[0, 0], m[1, 1], m[0, 1])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _hamiltonian_echo(h: model.SystemHamiltonian) -> dict:
    return {"matrix": h.matrix().tolist()}


def _section(cfg: dict, name: str) -> dict:
    sec = cfg.get(name)
    if not isinstance(sec, dict):
        raise ConfigError(f"missing [{name}] section")
    return sec


def _get(section: dict, key: str, kind, default=None, where: str = ""):
    if key not in section:
        if default is not None:
            return default
        raise ConfigError(f"missing '{key}' in [{where}]")
    try:
        return kind(section[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad '{key}' in [{where}]: {exc}") from exc


def _output_path(cfg: dict, args, default_name: str) -> Path:
    out = cfg.get("output", {}) if isinstance(cfg.get("output", {}), dict) else {}
    directory = (
        args.output_dir
        or out.get("directory")
        or os.environ.get(ENV_OUTPUT_DIR)
        or "."
    )
    base = out.get("basename", default_name)
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    return path / base


def write_csv(path: Path, columns: list[str], rows, config_echo: dict) -> None:
    lines = ["# config = " + json.dumps(config_echo, sort_keys=True)]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n", newline="\n")


def read_csv(path: str):
    """Read back an emitted CSV: (embedded config or None, columns, data)."""
    config = None
    columns = None
    data: list[list[float]] = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            _, _, payload = line.partition("=")
            if config is None and payload.strip():
                config = json.loads(payload)
            continue
        if columns is None:
            columns = line.split(",")
            continue
        if line:
            data.append([float(x) for x in line.split(",")])
    if columns is None:
        raise ConfigError(f"no header row in {path}")
    return config, columns, np.asarray(data, dtype=np.float64)


def _shot_seed(master_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1)[0])


def cmd_coherent(args) -> int:
    cfg = load_config(args.config)
    h = resolve_hamiltonian(_section(cfg, "hamiltonian"))
    ens = _section(cfg, "ensemble")
    t_max = _get(ens, "t_max_fs", float, where="ensemble")
    step = _get(ens, "step_fs", float, where="ensemble")
    shots = _get(ens, "shots", int, default=0, where="ensemble")
    seed = args.seed if args.seed is not None else _get(ens, "master_seed", int, default=0, where="ensemble")
    if step <= 0 or t_max < 0:
        raise ConfigError("need step_fs > 0 and t_max_fs >= 0")
    if shots < 0:
        raise ConfigError("shots must be >= 0")
    n = int(round(t_max / step)) if t_max else 0
    t_grid = np.arange(n + 1) * step

    p0_a, p1_a = model.analytic_populations(h, t_grid)
    anc = h.n_system_qubits
    initial = qcore.StateVector.basis_state(anc + 1, 1 << anc)
    rows = []
    for i, t in enumerate(t_grid):
        state = qcore.run_circuit(circuits.build_coherent_circuit(h, t), initial)
        pc = qcore.site_probabilities(state, range(h.n_system_qubits))
        row = [t, p0_a[i], p1_a[i], pc[0], pc[1]]
        if shots > 0:
            counts = qcore.sample_shots(pc, shots, _shot_seed(seed, i))
            row += [counts[0] / shots, counts[1] / shots]
        rows.append(row)

    columns = ["t_fs", "p0_analytic", "p1_analytic", "p0_circuit", "p1_circuit"]
    if shots > 0:
        columns += ["p0_sampled", "p1_sampled"]
    echo = {
        "hamiltonian": _hamiltonian_echo(h),
        "ensemble": {"t_max_fs": t_max, "step_fs": step, "shots": shots, "master_seed": seed},
    }
    path = _output_path(cfg, args, "coherent.csv")
    write_csv(path, columns, rows, echo)
    print(path)
    return 0


def _resolve_noise(cfg_noise: dict, h: model.SystemHamiltonian) -> noise.FluctuatorConfig:
    strength = cfg_noise.get("strength_cm1")
    if strength is None:
        raise ConfigError("missing 'strength_cm1' in [noise]")
    gamma = _get(cfg_noise, "switching_rate_thz", float, where="noise")
    f = _get(cfg_noise, "fluctuators_per_site", int, default=1, where="noise")
    strengths = np.broadcast_to(np.asarray(strength, dtype=np.float64), (h.n_sites,))
    return noise.FluctuatorConfig(strengths.copy(), gamma, f)


def cmd_dephasing(args) -> int:
    cfg = load_config(args.config)
    h = resolve_hamiltonian(_section(cfg, "hamiltonian"))
    noise_cfg = _resolve_noise(_section(cfg, "noise"), h)
    ens_sec = _section(cfg, "ensemble")
    seed = args.seed if args.seed is not None else _get(ens_sec, "master_seed", int, default=0, where="ensemble")
    ens = noise.EnsembleConfig(
        runs=_get(ens_sec, "runs", int, where="ensemble"),
        shots=_get(ens_sec, "shots", int, where="ensemble"),
        dt_fs=_get(ens_sec, "dt_fs", float, where="ensemble"),
        t_max_fs=_get(ens_sec, "t_max_fs", float, where="ensemble"),
        master_seed=seed,
    )
    # surface the waiting-time/step mismatch before doing any work
    try:
        noise_cfg.switch_interval_steps(ens.dt_fs)
    except ConfigError:
        waiting = noise_cfg.waiting_time_fs
        suggestion = waiting / max(1, round(waiting / ens.dt_fs))
        raise ConfigError(
            f"dt_fs={ens.dt_fs} does not divide the fluctuator waiting time "
            f"{waiting} fs; nearest valid dt_fs is {suggestion}"
        ) from None

    result = noise.run_ensemble(h, noise_cfg, ens, workers=args.workers)
    fit = reference.fit_dephasing_rate(result.t_fs, result.p_mean, h)
    series = reference.lindblad_integrate(
        reference.LindbladModel(h, fit.gamma_deph_thz),
        reference.DensityMatrix.site_excitation(h.n_sites),
        result.t_fs,
    )
    lind = np.stack([rho.populations for rho in series])

    echo = {
        "hamiltonian": _hamiltonian_echo(h),
        "noise": {
            "strength_cm1": noise_cfg.strengths_cm1.tolist(),
            "switching_rate_thz": noise_cfg.switching_rate_thz,
            "fluctuators_per_site": noise_cfg.fluctuators_per_site,
        },
        "ensemble": {
            "runs": ens.runs,
            "shots": ens.shots,
            "dt_fs": ens.dt_fs,
            "t_max_fs": ens.t_max_fs,
            "master_seed": ens.master_seed,
        },
    }
    rows = [
        [
            result.t_fs[i],
            result.p_mean[i, 0],
            result.p_mean[i, 1],
            result.p_stderr[i, 0],
            result.p_stderr[i, 1],
            lind[i, 0],
            lind[i, 1],
        ]
        for i in range(result.t_fs.size)
    ]
    columns = [
        "t_fs",
        "p0_mean",
        "p1_mean",
        "p0_stderr",
        "p1_stderr",
        "p0_lindblad_fit",
        "p1_lindblad_fit",
    ]
    path = _output_path(cfg, args, "dephasing.csv")
    write_csv(path, columns, rows, echo)
    sidecar = path.with_suffix(".fit.json")
    sidecar.write_text(
        json.dumps(
            {
                "gamma_deph_thz": fit.gamma_deph_thz,
                "residual_rms": fit.residual_rms,
                "n_evaluations": fit.n_evaluations,
                "config": echo,
            },
            sort_keys=True,
            indent=2,
        )
        + "\n",
        newline="\n",
    )
    print(path)
    print(sidecar)
    return 0


def cmd_resources(args) -> int:
    try:
        report = model.estimate_resources(
            args.n_sites, args.fluctuators, args.t_fs, args.dt_fs
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    payload = report.to_dict()
    if args.gamma_thz is not None:
        waiting = 1e3 / args.gamma_thz
        steps = round(waiting / args.dt_fs)
        if steps < 1 or abs(steps * args.dt_fs - waiting) > 1e-9 * waiting:
            suggestion = waiting / max(1, steps)
            raise ConfigError(
                f"dt_fs={args.dt_fs} does not divide the fluctuator waiting time "
                f"{waiting} fs; nearest valid dt_fs is {suggestion}"
            )
        payload["switch_interval_steps"] = int(steps)
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", newline="\n")
    print(text)
    return 0


def cmd_fit(args) -> int:
    config, columns, data = read_csv(args.csv)
    needed = ("t_fs", "p0_mean", "p1_mean")
    if any(c not in columns for c in needed):
        raise ConfigError(f"{args.csv} lacks the ensemble columns {needed}")
    if args.preset:
        h = PRESETS[args.preset]()
    elif config and "hamiltonian" in config:
        h = resolve_hamiltonian(config["hamiltonian"])
    else:
        raise ConfigError("no embedded hamiltonian; pass --preset")
    t = data[:, columns.index("t_fs")]
    pops = data[:, [columns.index("p0_mean"), columns.index("p1_mean")]]
    try:
        fit = reference.fit_dephasing_rate(t, pops, h)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    text = json.dumps(
        {"gamma_deph_thz": fit.gamma_deph_thz, "residual_rms": fit.residual_rms},
        indent=2,
        sort_keys=True,
    )
    if args.out:
        Path(args.out).write_text(text + "\n", newline="\n")
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="excitonsim",
        description="Exciton-transfer circuit simulations with telegraph-noise dephasing",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="JSON (or TOML) config file")
        p.add_argument("--seed", type=int, default=None, help="override the config master seed")
        p.add_argument("--output-dir", default=None, help="output directory (else config, else $" + ENV_OUTPUT_DIR + ")")

    p = sub.add_parser("coherent", help="isolated-chain evolution CSV")
    add_common(p)
    p.set_defaults(func=cmd_coherent)

    p = sub.add_parser("dephasing", help="telegraph-noise ensemble CSV + Lindblad fit")
    add_common(p)
    p.add_argument("--workers", type=int, default=1, help="parallel trajectory workers")
    p.set_defaults(func=cmd_dephasing)

    p = sub.add_parser("resources", help="qubit/gate resource report (JSON)")
    p.add_argument("--n-sites", type=int, required=True)
    p.add_argument("--fluctuators", type=int, default=1)
    p.add_argument("--t-fs", type=float, default=0.0)
    p.add_argument("--dt-fs", type=float, default=2.0)
    p.add_argument("--gamma-thz", type=float, default=None, help="validate dt against this switching rate")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_resources)

    p = sub.add_parser("fit", help="refit the dephasing rate of an emitted ensemble CSV")
    p.add_argument("csv")
    p.add_argument("--preset", choices=sorted(PRESETS), default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalValidationError as exc:
        print(f"numerical validation failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
