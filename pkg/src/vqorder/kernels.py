"""Kernel backend selection.

Prefers the compiled extension (``vqorder._core``); falls back to the numpy
implementation when the extension is unavailable or when the environment
variable ``VQORDER_PURE_PYTHON`` is set to a nonempty value. Both backends
expose the same four functions with identical semantics; ``BACKEND`` names
the one in use ("compiled" or "numpy").
"""

import os

from vqorder import _kernels_numpy

if os.environ.get("VQORDER_PURE_PYTHON"):
    _impl = _kernels_numpy
else:
    try:
        from vqorder import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_numpy

BACKEND: str = _impl.BACKEND

rotate_pauli = _impl.rotate_pauli
bracket_pauli = _impl.bracket_pauli
acc_pauli = _impl.acc_pauli
apply_cz = _impl.apply_cz
