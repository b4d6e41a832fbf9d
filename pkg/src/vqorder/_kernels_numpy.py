"""Pure numpy statevector kernels, the fallback backend.

Mirrors the semantics of the compiled extension (see ``_core.pyx``): a Pauli
string encoded as (x_mask, y_mask, z_mask) acts on a basis index b as

    P |b> = phase(b) |b ^ (x_mask | y_mask)>,
    phase(b) = i**popcount(y_mask) * (-1)**popcount(b & (y_mask | z_mask)).
"""

from functools import lru_cache
from math import cos, sin

import numpy as np

BACKEND = "numpy"

_I_POW = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)


@lru_cache(maxsize=8)
def _indices(dim: int) -> np.ndarray:
    return np.arange(dim, dtype=np.uint64)


def _sign(idx: np.ndarray, mask: int) -> np.ndarray:
    """(-1)**popcount(idx & mask) as a float array."""
    par = np.bitwise_count(idx & np.uint64(mask)).astype(np.int64) & 1
    return 1.0 - 2.0 * par


def rotate_pauli(psi: np.ndarray, x_mask: int, y_mask: int, z_mask: int,
                 angle: float) -> None:
    """In place: psi <- cos(angle/2) psi - i sin(angle/2) P psi."""
    dim = psi.shape[0]
    flip = x_mask | y_mask
    yz = y_mask | z_mask
    c = cos(0.5 * angle)
    mis = -1.0j * sin(0.5 * angle)
    base = _I_POW[int(y_mask).bit_count() & 3]

    if flip == 0:
        idx = _indices(dim)
        psi *= c + mis * _sign(idx, yz)
        return

    pivot = flip & -flip
    low = np.uint64(pivot - 1)
    i = _indices(dim >> 1)
    j = ((i & ~low) << np.uint64(1)) | (i & low)
    k = j ^ np.uint64(flip)
    phi_j = base * _sign(j, yz)
    a = psi[j]
    b = psi[k]
    psi[j] = c * a + mis * np.conj(phi_j) * b
    psi[k] = c * b + mis * phi_j * a


def bracket_pauli(bra: np.ndarray, ket: np.ndarray, x_mask: int, y_mask: int,
                  z_mask: int) -> complex:
    """Return <bra| P |ket> for the encoded Pauli string (coefficient 1)."""
    dim = bra.shape[0]
    flip = x_mask | y_mask
    yz = y_mask | z_mask
    base = _I_POW[int(y_mask).bit_count() & 3]
    idx = _indices(dim)
    k = idx ^ np.uint64(flip)
    return complex(np.vdot(bra, (base * _sign(k, yz)) * ket[k]))


def acc_pauli(out: np.ndarray, psi: np.ndarray, coeff: complex, x_mask: int,
              y_mask: int, z_mask: int) -> None:
    """In place: out += coeff * P psi."""
    dim = psi.shape[0]
    flip = x_mask | y_mask
    yz = y_mask | z_mask
    base = coeff * _I_POW[int(y_mask).bit_count() & 3]
    idx = _indices(dim)
    k = idx ^ np.uint64(flip)
    out += (base * _sign(k, yz)) * psi[k]


def apply_cz(psi: np.ndarray, pair_mask: int) -> None:
    """In place: negate amplitudes whose index has every bit of pair_mask set."""
    idx = _indices(psi.shape[0])
    m = np.uint64(pair_mask)
    psi[(idx & m) == m] *= -1.0
