# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled statevector kernels.

Operates in place on a contiguous complex128 amplitude vector whose basis
index carries qubit 0 as the least significant bit. Gate streams arrive
packed as parallel arrays (see excitonsim.qcore for the packing):

    op code 0 -- bit flip on the target (X / CNOT via control mask)
    op code 1 -- real y-rotation [[c, -s], [s, c]] on the target
    op code 2 -- diagonal phase diag(e^{-i a/2}, e^{+i a/2}) on the target

A gate acts only on indices whose bits cover ``cmask``.
"""

from libc.math cimport cos, sin


def apply_ops(double complex[::1] amps, int num_qubits,
              int[::1] kinds, int[::1] targets,
              long long[::1] cmasks, double[::1] angles):
    """Apply a packed gate stream to ``amps`` in place."""
    cdef Py_ssize_t dim = 1 << num_qubits
    cdef Py_ssize_t n_ops = kinds.shape[0]
    cdef Py_ssize_t k, i, j
    cdef long long tbit, cmask
    cdef int kind
    cdef double c, s, half
    cdef double complex a0, a1, ph0, ph1

    for k in range(n_ops):
        kind = kinds[k]
        tbit = 1LL << targets[k]
        cmask = cmasks[k]
        if kind == 0:
            for i in range(dim):
                if (i & tbit) == 0 and (i & cmask) == cmask:
                    j = i | tbit
                    a0 = amps[i]
                    amps[i] = amps[j]
                    amps[j] = a0
        elif kind == 1:
            half = 0.5 * angles[k]
            c = cos(half)
            s = sin(half)
            for i in range(dim):
                if (i & tbit) == 0 and (i & cmask) == cmask:
                    j = i | tbit
                    a0 = amps[i]
                    a1 = amps[j]
                    amps[i] = c * a0 - s * a1
                    amps[j] = s * a0 + c * a1
        else:
            half = 0.5 * angles[k]
            ph0 = cos(half) - 1j * sin(half)
            ph1 = cos(half) + 1j * sin(half)
            for i in range(dim):
                if (i & cmask) == cmask:
                    if i & tbit:
                        amps[i] = amps[i] * ph1
                    else:
                        amps[i] = amps[i] * ph0


def site_probs(double complex[::1] amps, int num_qubits,
               int n_system_qubits, double[::1] out):
    """Marginal probabilities of the low ``n_system_qubits`` qubits."""
    cdef Py_ssize_t dim = 1 << num_qubits
    cdef Py_ssize_t smask = (1 << n_system_qubits) - 1
    cdef Py_ssize_t i
    cdef double complex a
    for i in range(smask + 1):
        out[i] = 0.0
    for i in range(dim):
        a = amps[i]
        out[i & smask] += a.real * a.real + a.imag * a.imag
