"""Pure-numpy statevector kernels, semantically identical to _gatekernel.

Used when the compiled extension is unavailable (or forced via the
EXCITONSIM_PURE_PYTHON environment variable). Same in-place contract and
op codes as the Cython version.
"""

import numpy as np


def apply_ops(amps, num_qubits, kinds, targets, cmasks, angles):
    """Apply a packed gate stream to ``amps`` in place."""
    dim = amps.shape[0]
    idx = np.arange(dim, dtype=np.int64)
    for k in range(kinds.shape[0]):
        kind = int(kinds[k])
        tbit = np.int64(1) << np.int64(targets[k])
        cmask = np.int64(cmasks[k])
        controlled = (idx & cmask) == cmask
        if kind == 2:
            half = 0.5 * float(angles[k])
            on = controlled & ((idx & tbit) != 0)
            off = controlled & ((idx & tbit) == 0)
            amps[on] *= complex(np.cos(half), np.sin(half))
            amps[off] *= complex(np.cos(half), -np.sin(half))
            continue
        i0 = idx[controlled & ((idx & tbit) == 0)]
        i1 = i0 | tbit
        if kind == 0:
            a0 = amps[i0].copy()
            amps[i0] = amps[i1]
            amps[i1] = a0
        else:
            half = 0.5 * float(angles[k])
            c, s = np.cos(half), np.sin(half)
            a0 = amps[i0].copy()
            a1 = amps[i1].copy()
            amps[i0] = c * a0 - s * a1
            amps[i1] = s * a0 + c * a1


def site_probs(amps, num_qubits, n_system_qubits, out):
    """Marginal probabilities of the low ``n_system_qubits`` qubits."""
    p = amps.real ** 2 + amps.imag ** 2
    out[:] = p.reshape(-1, 1 << n_system_qubits).sum(axis=0)
