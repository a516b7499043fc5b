"""Shared fixtures: the full-scale dephasing experiments used by acceptance."""

import json
from pathlib import Path

import pytest

from excitonsim import cli

FULL_SCALE = {"runs": 250, "shots": 5000, "dt_fs": 2.0, "t_max_fs": 600.0}
MASTER_SEED = 20260810
STRENGTHS_CM1 = (100.0, 300.0, 700.0, 1000.0)


def dephasing_config_payload(strength_cm1: float, out_dir: Path, **ensemble_overrides) -> dict:
    ensemble = dict(FULL_SCALE, master_seed=MASTER_SEED)
    ensemble.update(ensemble_overrides)
    return {
        "hamiltonian": {"preset": "near_resonant"},
        "noise": {"strength_cm1": strength_cm1, "switching_rate_thz": 125.0},
        "ensemble": ensemble,
        "output": {"directory": str(out_dir), "basename": f"dephasing_g{int(strength_cm1)}.csv"},
    }


def run_dephasing(config_payload: dict, config_path: Path, workers: int = 1) -> dict:
    config_path.write_text(json.dumps(config_payload))
    code = cli.main(["dephasing", "--config", str(config_path), "--workers", str(workers)])
    assert code == 0, f"dephasing command failed with exit code {code}"
    out_dir = Path(config_payload["output"]["directory"])
    csv_path = out_dir / config_payload["output"]["basename"]
    _, columns, data = cli.read_csv(csv_path)
    sidecar = json.loads(csv_path.with_suffix(".fit.json").read_text())
    return {"csv_path": csv_path, "columns": columns, "data": data, "fit": sidecar}


@pytest.fixture(scope="session")
def dephasing_experiments(tmp_path_factory):
    """Full-scale near-resonant ensembles for every fluctuation strength."""
    root = tmp_path_factory.mktemp("acceptance_dephasing")
    results = {}
    for g in STRENGTHS_CM1:
        payload = dephasing_config_payload(g, root)
        results[g] = run_dephasing(payload, root / f"config_g{int(g)}.json")
    return results
