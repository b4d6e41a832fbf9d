"""vqorder: variational quantum circuits that learn long-range order
in one-dimensional spin chains at high energy density.

Exact statevector simulation (N <= 14 for dense spectral work), symmetry-
constrained brickwork circuits, adjoint-differentiated training against a
susceptibility or string-order objective with energy pinning, and the full
post-training diagnostic set (spectral support, measurement robustness,
collective-spin Fisher information, eigenphase degeneracies, level-spacing
statistics, Clifford-angle histograms).
"""

from vqorder.kernels import BACKEND as kernel_backend

__version__ = "0.1.0"

__all__ = ["kernel_backend", "__version__"]
