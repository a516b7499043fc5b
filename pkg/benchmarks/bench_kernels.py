"""Compare the compiled gate kernel against the numpy fallback.

The workload mirrors the package's hot loop: many short circuits on a tiny
register (the Monte Carlo dephasing ensemble), plus one larger register to
show where vectorized numpy catches up.

Run:  python3 benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import math
import time

import numpy as np

from excitonsim._kernels import _numpy_kernel

try:
    from excitonsim._kernels import _gatekernel
except ImportError:
    _gatekernel = None

from excitonsim.circuits import build_iteration_circuit
from excitonsim.model import SystemHamiltonian


def packed_iteration_ops():
    h = SystemHamiltonian.near_resonant()
    circuit = build_iteration_circuit(h, 2.0, [0.5, -0.5], 300.0)
    ((_, kinds, targets, cmasks, angles),) = circuit.packed()
    return kinds, targets, cmasks, angles


def random_ops(num_qubits, n_ops, seed=0):
    rng = np.random.default_rng(seed)
    kinds = rng.integers(0, 3, n_ops).astype(np.int32)
    targets = rng.integers(0, num_qubits, n_ops).astype(np.int32)
    cmasks = np.zeros(n_ops, dtype=np.int64)
    for i in range(n_ops):
        if rng.random() < 0.5:
            other = int(rng.integers(0, num_qubits - 1))
            cmasks[i] = 1 << (other if other < targets[i] else other + 1)
    angles = rng.uniform(-math.pi, math.pi, n_ops)
    return kinds, targets, cmasks, angles


def time_backend(impl, num_qubits, ops, iterations):
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[(1 << num_qubits) - 1] = 1.0
    start = time.perf_counter()
    for _ in range(iterations):
        impl.apply_ops(amps, num_qubits, *ops)
    elapsed = time.perf_counter() - start
    assert abs(np.vdot(amps, amps).real - 1.0) < 1e-6
    return elapsed


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    cases = [
        ("2-qubit dephasing iteration (10 gates)", 2, packed_iteration_ops(), 100_000),
        ("10-qubit random circuit (60 gates)", 10, random_ops(10, 60), 2_000),
    ]
    backends = [("numpy", _numpy_kernel)]
    if _gatekernel is not None:
        backends.append(("cython", _gatekernel))
    else:
        print("compiled kernel not built; run `python3 setup.py build_ext --inplace`")

    for label, num_qubits, ops, iterations in cases:
        print(f"\n{label}, {iterations} circuit applications:")
        timings = {}
        for name, impl in backends:
            best = min(time_backend(impl, num_qubits, ops, iterations) for _ in range(args.repeats))
            timings[name] = best
            per_circuit = best / iterations * 1e6
            print(f"  {name:>6}: {best:8.3f} s total, {per_circuit:8.2f} us/circuit")
        if len(timings) == 2:
            print(f"  speedup: {timings['numpy'] / timings['cython']:.1f}x")


if __name__ == "__main__":
    main()
