"""Hot statevector kernels with a compiled fast path.

``BACKEND`` names the implementation in use: "cython" when the extension
built from _gatekernel.pyx imports cleanly, "numpy" otherwise. Set
EXCITONSIM_PURE_PYTHON=1 to force the fallback (used by the benchmark and
the cross-implementation tests).
"""

import os

if os.environ.get("EXCITONSIM_PURE_PYTHON"):
    from excitonsim._kernels import _numpy_kernel as _impl

    BACKEND = "numpy"
else:
    try:
        from excitonsim._kernels import _gatekernel as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from excitonsim._kernels import _numpy_kernel as _impl

        BACKEND = "numpy"

apply_ops = _impl.apply_ops
site_probs = _impl.site_probs

__all__ = ["apply_ops", "site_probs", "BACKEND"]
