# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled statevector kernels.

A Pauli string is encoded as three site bitmasks (x_mask, y_mask, z_mask).
On a basis index b it acts as

    P |b> = phase(b) |b ^ (x_mask | y_mask)>,
    phase(b) = i**popcount(y_mask) * (-1)**popcount(b & (y_mask | z_mask)).

All loops are serial on purpose: results must be bit-identical across runs,
and at the sizes this package targets the kernels are memory bound.
"""

from libc.math cimport cos, sin

ctypedef unsigned long long u64

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


BACKEND = "compiled"


cdef inline double complex _i_pow(int k) nogil:
    # i**k for k in 0..3
    if k == 0:
        return 1.0
    elif k == 1:
        return 1.0j
    elif k == 2:
        return -1.0
    return -1.0j


def rotate_pauli(double complex[::1] psi, u64 x_mask, u64 y_mask,
                 u64 z_mask, double angle):
    """In place: psi <- cos(angle/2) psi - i sin(angle/2) P psi."""
    cdef u64 dim = <u64>psi.shape[0]
    cdef u64 flip = x_mask | y_mask
    cdef u64 yz = y_mask | z_mask
    cdef double c = cos(0.5 * angle)
    cdef double complex mis = -1.0j * sin(0.5 * angle)
    cdef double complex base = _i_pow(__builtin_popcountll(y_mask) & 3)
    cdef double complex phi_j, a, b
    cdef u64 i, j, k, half, low, pivot
    cdef int sgn

    if flip == 0:
        # diagonal string: psi[j] *= c - i s * (+-1)
        for j in range(dim):
            if __builtin_popcountll(j & yz) & 1:
                psi[j] = psi[j] * (c - mis)
            else:
                psi[j] = psi[j] * (c + mis)
        return

    pivot = flip & (~flip + 1)  # lowest set bit of flip
    low = pivot - 1
    half = dim >> 1
    for i in range(half):
        j = ((i & ~low) << 1) | (i & low)
        k = j ^ flip
        sgn = 1 - 2 * (__builtin_popcountll(j & yz) & 1)
        phi_j = base * sgn
        # phase(k) = 1/phase(j) = conj(phase(j)) for unit-modulus phases
        a = psi[j]
        b = psi[k]
        psi[j] = c * a + mis * phi_j.conjugate() * b
        psi[k] = c * b + mis * phi_j * a


def bracket_pauli(double complex[::1] bra, double complex[::1] ket,
                  u64 x_mask, u64 y_mask, u64 z_mask):
    """Return <bra| P |ket> for the encoded Pauli string (coefficient 1)."""
    cdef u64 dim = <u64>bra.shape[0]
    cdef u64 flip = x_mask | y_mask
    cdef u64 yz = y_mask | z_mask
    cdef double complex base = _i_pow(__builtin_popcountll(y_mask) & 3)
    cdef double complex acc = 0.0
    cdef u64 j, k
    cdef int sgn

    for j in range(dim):
        k = j ^ flip
        sgn = 1 - 2 * (__builtin_popcountll(k & yz) & 1)
        acc = acc + bra[j].conjugate() * (base * sgn) * ket[k]
    return acc


def acc_pauli(double complex[::1] out, double complex[::1] psi,
              double complex coeff, u64 x_mask, u64 y_mask, u64 z_mask):
    """In place: out += coeff * P psi."""
    cdef u64 dim = <u64>psi.shape[0]
    cdef u64 flip = x_mask | y_mask
    cdef u64 yz = y_mask | z_mask
    cdef double complex base = coeff * _i_pow(__builtin_popcountll(y_mask) & 3)
    cdef u64 j, k
    cdef int sgn

    for j in range(dim):
        k = j ^ flip
        sgn = 1 - 2 * (__builtin_popcountll(k & yz) & 1)
        out[j] = out[j] + (base * sgn) * psi[k]


def apply_cz(double complex[::1] psi, u64 pair_mask):
    """In place: negate amplitudes whose index has every bit of pair_mask set."""
    cdef u64 dim = <u64>psi.shape[0]
    cdef u64 j
    for j in range(dim):
        if (j & pair_mask) == pair_mask:
            psi[j] = -psi[j]
