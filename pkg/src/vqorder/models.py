"""Reference Hamiltonians, matrix-free application, and dense diagonalization.

Two models:

* ``ising_annni``: nearest-neighbor ZZ (weight -1), next-nearest ZZ
  (weight -1/2), transverse field -h X on every site. Nonintegrable
  Ising chain whose ground state breaks the global spin-flip symmetry.
* ``cluster_ising``: -ZXZ on every bulk triple, -gamma XX on every bond,
  -(gamma/2) X on every site, open boundary. Interpolates from the pure
  cluster model at gamma = 0.

Both are traceless sums of Pauli strings with real coefficients and commute
with their protecting symmetry (global parity, or the two sublattice
parities).
"""

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.linalg

from vqorder import kernels
from vqorder.errors import CapacityError, SizeError
from vqorder.qstate import PauliString, StateVector

ED_MAX_QUBITS = 14  # dense 2^N x 2^N diagonalization ceiling (~2 GiB at N=14)


@dataclass(frozen=True)
class HamiltonianSpec:
    """Weighted Pauli-string sum plus the metadata needed to rebuild it."""

    n_qubits: int
    terms: tuple[tuple[PauliString, float], ...]
    label: str
    parameters: Mapping[str, object] = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Human-readable key-value form for run manifests."""
        return {"label": self.label, "n_qubits": self.n_qubits,
                **{k: v for k, v in sorted(self.parameters.items())}}


@dataclass(frozen=True)
class EigenSystem:
    """Full spectrum: ascending energies and orthonormal eigenvector columns."""

    energies: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.energies.shape[0]

    @property
    def spectral_width(self) -> float:
        return float(self.energies[-1] - self.energies[0])


def build_ising_annni(n_qubits: int, h: float = 1.0,
                      boundary: str = "open") -> HamiltonianSpec:
    """H = -sum_i (Z_i Z_{i+1} + 1/2 Z_i Z_{i+2}) - h sum_i X_i."""
    if n_qubits < 3:
        raise SizeError(f"ising_annni needs n_qubits >= 3, got {n_qubits}")
    if boundary not in ("open", "periodic"):
        raise ValueError(f"boundary must be open or periodic, got {boundary!r}")
    n = n_qubits
    terms: list[tuple[PauliString, float]] = []
    n_bonds = n if boundary == "periodic" else n - 1
    for i in range(n_bonds):
        terms.append((PauliString.from_label("ZZ", (i, (i + 1) % n)), -1.0))
    n_nnn = n if boundary == "periodic" else n - 2
    for i in range(n_nnn):
        terms.append((PauliString.from_label("ZZ", (i, (i + 2) % n)), -0.5))
    for i in range(n):
        terms.append((PauliString.from_label("X", (i,)), -float(h)))
    return HamiltonianSpec(n, tuple(terms), "ising_annni",
                           {"h": float(h), "boundary": boundary})


def build_cluster_ising(n_qubits: int, gamma: float = 0.5) -> HamiltonianSpec:
    """H = -sum ZXZ - gamma sum XX - (gamma/2) sum X, open boundary."""
    if n_qubits < 3:
        raise SizeError(f"cluster_ising needs n_qubits >= 3, got {n_qubits}")
    n = n_qubits
    g = float(gamma)
    terms: list[tuple[PauliString, float]] = []
    for i in range(n - 2):
        terms.append((PauliString.from_label("ZXZ", (i, i + 1, i + 2)), -1.0))
    for i in range(n - 1):
        terms.append((PauliString.from_label("XX", (i, i + 1)), -g))
    for i in range(n):
        terms.append((PauliString.from_label("X", (i,)), -g / 2.0))
    return HamiltonianSpec(n, tuple(terms), "cluster_ising",
                           {"gamma": g, "boundary": "open"})


def build_model(label: str, n_qubits: int, **params) -> HamiltonianSpec:
    """Dispatch on the model label (manifest loading path)."""
    if label == "ising_annni":
        return build_ising_annni(n_qubits, **params)
    if label == "cluster_ising":
        params.pop("boundary", None)  # cluster model is open by construction
        return build_cluster_ising(n_qubits, **params)
    raise ValueError(f"unknown model label {label!r}")


def apply_hamiltonian(h: HamiltonianSpec, state: StateVector) -> StateVector:
    """Matrix-free H|psi> (result is not normalized)."""
    if h.n_qubits != state.n_qubits:
        raise SizeError(
            f"Hamiltonian on {h.n_qubits} qubits applied to {state.n_qubits}-qubit state")
    out = np.zeros_like(state.amps)
    for p, w in h.terms:
        x, y, z = p.masks()
        kernels.acc_pauli(out, state.amps, w * complex(p.coefficient), x, y, z)
    return StateVector(out, state.n_qubits)


def energy_moments(state: StateVector, h: HamiltonianSpec) -> tuple[float, float]:
    """(<H>, <H^2>) from a single matrix-free application.

    <H^2> = ||H psi||^2, exact for Hermitian H.
    """
    hpsi = apply_hamiltonian(h, state)
    mean = float(np.vdot(state.amps, hpsi.amps).real)
    second = float(np.vdot(hpsi.amps, hpsi.amps).real)
    return mean, second


def _is_real_in_z_basis(h: HamiltonianSpec) -> bool:
    # A Pauli string has real matrix elements iff it carries an even number of Y's.
    return all(sum(1 for op in p.terms.values() if op == "Y") % 2 == 0
               and complex(p.coefficient).imag == 0.0
               for p, _ in h.terms)


def dense_matrix(h: HamiltonianSpec) -> np.ndarray:
    """Assemble the dense 2^N x 2^N matrix (real float64 when possible)."""
    n = h.n_qubits
    if n > ED_MAX_QUBITS:
        raise CapacityError(
            f"dense assembly capped at {ED_MAX_QUBITS} qubits, got {n}")
    dim = 1 << n
    real = _is_real_in_z_basis(h)
    mat = np.zeros((dim, dim), dtype=np.float64 if real else np.complex128)
    idx = np.arange(dim, dtype=np.uint64)
    for p, w in h.terms:
        x, y, z = p.masks()
        flip = np.uint64(x | y)
        yz = np.uint64(y | z)
        n_y = int(y).bit_count()
        sign = 1.0 - 2.0 * (np.bitwise_count(idx & yz).astype(np.int64) & 1)
        vals = (w * complex(p.coefficient) * (1j ** n_y)) * sign
        rows = idx ^ flip
        mat[rows, idx] += vals.real if real else vals
    return mat


def exact_diagonalize(h: HamiltonianSpec) -> EigenSystem:
    """Full dense spectrum, ascending, with orthonormal eigenvector columns."""
    if h.n_qubits > ED_MAX_QUBITS:
        raise CapacityError(
            f"exact diagonalization capped at {ED_MAX_QUBITS} qubits, "
            f"got {h.n_qubits}")
    mat = dense_matrix(h)
    energies, vecs = scipy.linalg.eigh(mat, overwrite_a=True)
    return EigenSystem(energies, vecs)
