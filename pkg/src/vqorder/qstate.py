"""Exact statevector substrate: states, Pauli strings, gates, reductions.

Qubit ordering convention (global for the whole package): basis index b
encodes qubit i in bit i of b, so qubit 0 is the least significant bit.
Every module builds on this; it is documented only here.

Gate application mutates amplitude arrays in place (and returns the state
for chaining). Higher-level circuit application copies first; see ansatz.
Practical ceiling is about 28 qubits (2**28 complex amplitudes = 4 GiB);
dense diagnostics cap out far earlier (see models and diagnostics).
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from vqorder import kernels
from vqorder.errors import MatrixError, OperatorError, SizeError

MAX_QUBITS = 28

_PAULI_OPS = ("X", "Y", "Z")


@dataclass(frozen=True)
class PauliString:
    """Sparse Pauli operator: a site -> {X, Y, Z} map and a scalar coefficient.

    Hermitian iff the coefficient is real. Site validity against a system
    size is checked where the operator is applied.
    """

    terms: Mapping[int, str]
    coefficient: complex = 1.0

    def __post_init__(self):
        for site, op in self.terms.items():
            if op not in _PAULI_OPS:
                raise OperatorError(f"unknown Pauli op {op!r} at site {site}")
            if site < 0:
                raise OperatorError(f"negative site index {site}")

    @classmethod
    def from_label(cls, label: str, sites: Iterable[int],
                   coefficient: complex = 1.0) -> "PauliString":
        """Build from a letter string and matching site tuple, e.g. ("ZXZ", (3,4,5))."""
        sites = tuple(sites)
        if len(label) != len(sites):
            raise OperatorError(f"label {label!r} does not match sites {sites}")
        if len(set(sites)) != len(sites):
            raise OperatorError(f"duplicate sites in {sites}")
        return cls(dict(zip(sites, label)), coefficient)

    @property
    def is_hermitian(self) -> bool:
        return complex(self.coefficient).imag == 0.0

    def masks(self) -> tuple[int, int, int]:
        """(x_mask, y_mask, z_mask) site bitmasks for the kernel encoding."""
        x = y = z = 0
        for site, op in self.terms.items():
            bit = 1 << site
            if op == "X":
                x |= bit
            elif op == "Y":
                y |= bit
            else:
                z |= bit
        return x, y, z

    def max_site(self) -> int:
        return max(self.terms) if self.terms else -1

    def label_and_sites(self) -> tuple[str, tuple[int, ...]]:
        """Canonical (letters, sites) pair with sites ascending."""
        sites = tuple(sorted(self.terms))
        return "".join(self.terms[s] for s in sites), sites


@dataclass
class StateVector:
    """2**n_qubits complex amplitudes over n_qubits qubits (little-endian)."""

    amps: np.ndarray
    n_qubits: int

    def __post_init__(self):
        self.amps = np.ascontiguousarray(self.amps, dtype=np.complex128)
        if self.amps.shape != (1 << self.n_qubits,):
            raise SizeError(
                f"amplitude array of length {self.amps.shape} does not match "
                f"n_qubits={self.n_qubits}")

    def copy(self) -> "StateVector":
        return StateVector(self.amps.copy(), self.n_qubits)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))


@dataclass
class DensityMatrix:
    """Dense dim x dim density operator (Hermitian, trace 1, PSD)."""

    entries: np.ndarray
    dim: int = field(default=0)

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=np.complex128)
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise MatrixError(f"density matrix must be square, got {self.entries.shape}")
        self.dim = self.entries.shape[0]


def zero_state(n_qubits: int) -> StateVector:
    """|0...0> on n_qubits qubits."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise SizeError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(amps, n_qubits)


def _check_sites(p: PauliString, n_qubits: int) -> None:
    if p.max_site() >= n_qubits:
        raise OperatorError(
            f"Pauli string touches site {p.max_site()} on a {n_qubits}-qubit state")


def apply_pauli_rotation(state: StateVector, p: PauliString,
                         angle: float) -> StateVector:
    """In place: state <- exp(-i angle/2 P) state for Pauli string P.

    Requires coefficient exactly 1 so the rotation is exp(-i angle/2 P)
    with P a bare Pauli string.
    """
    if complex(p.coefficient) != 1.0:
        raise OperatorError(
            f"rotation generator must have coefficient 1, got {p.coefficient}")
    _check_sites(p, state.n_qubits)
    x, y, z = p.masks()
    kernels.rotate_pauli(state.amps, x, y, z, float(angle))
    return state


def apply_controlled_z(state: StateVector, site_a: int, site_b: int) -> StateVector:
    """In place CZ between two distinct sites."""
    n = state.n_qubits
    if site_a == site_b:
        raise OperatorError("controlled-Z needs two distinct sites")
    if not (0 <= site_a < n and 0 <= site_b < n):
        raise OperatorError(f"sites ({site_a}, {site_b}) out of range for n={n}")
    kernels.apply_cz(state.amps, (1 << site_a) | (1 << site_b))
    return state


def pauli_expectation(state: StateVector, p: PauliString) -> float:
    """<psi| P |psi> for Hermitian P."""
    if not p.is_hermitian:
        raise OperatorError("expectation requires a Hermitian Pauli string")
    _check_sites(p, state.n_qubits)
    x, y, z = p.masks()
    val = kernels.bracket_pauli(state.amps, state.amps, x, y, z)
    return float(complex(p.coefficient).real * val.real)


def pauli_matrix_element(bra: StateVector, p: PauliString,
                         ket: StateVector) -> complex:
    """<bra| P |ket> including the coefficient (needed by the adjoint sweep)."""
    if bra.n_qubits != ket.n_qubits:
        raise SizeError("bra/ket size mismatch")
    _check_sites(p, ket.n_qubits)
    x, y, z = p.masks()
    return complex(p.coefficient) * complex(
        kernels.bracket_pauli(bra.amps, ket.amps, x, y, z))


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>."""
    if a.n_qubits != b.n_qubits:
        raise SizeError(f"size mismatch: {a.n_qubits} vs {b.n_qubits} qubits")
    return complex(np.vdot(a.amps, b.amps))


def reduced_density_matrix(state: StateVector,
                           subsystem: Iterable[int]) -> DensityMatrix:
    """Partial trace over the complement of ``subsystem``.

    Row/column index of the result encodes the kept sites in ascending site
    order, little-endian (kept site with rank t occupies bit t).
    """
    n = state.n_qubits
    keep = sorted(set(subsystem))
    if not keep:
        raise ValueError("subsystem must be nonempty")
    if len(keep) >= n:
        raise ValueError("subsystem must be a proper subset of the chain")
    if keep[0] < 0 or keep[-1] >= n:
        raise ValueError(f"subsystem sites {keep} out of range for n={n}")

    comp = [s for s in range(n) if s not in set(keep)]
    # axis (n-1-s) of the reshaped tensor corresponds to site s
    perm = [n - 1 - s for s in reversed(keep)] + [n - 1 - s for s in reversed(comp)]
    k = len(keep)
    m = state.amps.reshape((2,) * n).transpose(perm).reshape(1 << k, 1 << (n - k))
    return DensityMatrix(m @ m.conj().T)


def entanglement_entropy(rho: DensityMatrix) -> float:
    """Von Neumann entropy -Tr[rho ln rho] (natural log).

    Eigenvalues below 1e-14 are treated as exact zeros (0 ln 0 := 0).
    """
    m = rho.entries
    if np.max(np.abs(m - m.conj().T)) > 1e-10:
        raise MatrixError("density matrix is not Hermitian within 1e-10")
    evals = np.linalg.eigvalsh(m)
    evals = evals[evals >= 1e-14]
    return float(-np.sum(evals * np.log(evals)))


@lru_cache(maxsize=8)
def collective_z_weights(n_qubits: int) -> np.ndarray:
    """Diagonal of S = sum_i Z_i in the computational basis: N - 2 popcount(b)."""
    idx = np.arange(1 << n_qubits, dtype=np.uint64)
    return (n_qubits - 2.0 * np.bitwise_count(idx).astype(np.float64))
