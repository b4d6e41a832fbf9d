"""Symmetry-constrained brickwork circuits and benchmark states.

Two circuit families:

* ``z2_brickwork``: depth-d brickwork of two-qubit Pauli rotations on
  nearest-neighbor bonds (even bonds then odd bonds per layer), generators
  drawn from the five two-letter strings that commute with the global
  flip operator prod_i X_i.
* ``spt_layer``: a single layer of three-qubit ZXZ rotations followed by
  XX rotations on even then odd bonds; every generator commutes with both
  sublattice flip operators prod_{even} X and prod_{odd} X.

Circuit construction is pure metadata (GateSlot lists); application walks
the slots with the in-place rotation kernel on a fresh copy of the input.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from vqorder import kernels
from vqorder.errors import CapacityError, OperatorError, SizeError
from vqorder.qstate import (
    MAX_QUBITS,
    PauliString,
    StateVector,
    apply_controlled_z,
    zero_state,
)

Z2_GENERATORS = ("XX", "YY", "YZ", "ZY", "ZZ")
UNITARY_MAX_QUBITS = 12


@dataclass(frozen=True)
class ParamVector:
    """Finite real rotation angles, one per gate slot."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.values, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError(f"parameters must be a flat array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("parameters must be finite")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class GateSlot:
    """One parameterized rotation: generator string, sites, parameter index."""

    generator: PauliString
    sites: tuple[int, ...]
    param_index: int


@dataclass(frozen=True)
class CircuitSpec:
    """Ordered gate slots plus the recipe needed to rebuild them."""

    n_qubits: int
    depth: int
    slots: tuple[GateSlot, ...]
    symmetry: str  # "z2" or "z2xz2"
    n_params: int
    kind: str
    generator_assignment: object = "cycle"

    def __post_init__(self):
        used = sorted(s.param_index for s in self.slots)
        if used != list(range(self.n_params)):
            raise ValueError("param indices must cover 0..n_params-1 exactly once")
        for sym in symmetry_operators(self.symmetry, self.n_qubits):
            sym_mask = sym.masks()[0]
            for slot in self.slots:
                x, y, z = slot.generator.masks()
                if int((y | z) & sym_mask).bit_count() % 2:
                    label = slot.generator.label_and_sites()
                    raise OperatorError(
                        f"generator {label} anticommutes with a protected symmetry")

    def to_dict(self) -> dict:
        assignment = self.generator_assignment
        if isinstance(assignment, tuple):
            assignment = list(assignment)
        return {"kind": self.kind, "n_qubits": self.n_qubits, "depth": self.depth,
                "generator_assignment": assignment}


def symmetry_operators(symmetry: str, n_qubits: int) -> tuple[PauliString, ...]:
    """The protected flip operators: global for z2, sublattice pair for z2xz2."""
    if symmetry == "z2":
        return (PauliString({i: "X" for i in range(n_qubits)}),)
    if symmetry == "z2xz2":
        return (PauliString({i: "X" for i in range(0, n_qubits, 2)}),
                PauliString({i: "X" for i in range(1, n_qubits, 2)}))
    raise ValueError(f"unknown symmetry {symmetry!r}")


def _bond_order(n_qubits: int) -> list[tuple[int, int]]:
    even = [(i, i + 1) for i in range(0, n_qubits - 1, 2)]
    odd = [(i, i + 1) for i in range(1, n_qubits - 1, 2)]
    return even + odd


def build_z2_brickwork(n_qubits: int, depth: int,
                       generator_assignment="cycle") -> CircuitSpec:
    """Brickwork of two-qubit rotations commuting with the global flip.

    ``generator_assignment`` is "cycle" (one generator per gate, indexed by
    (layer, bond) so every bond sees all five generators as layers stack),
    "composite" (all five rotations on every brick), or an explicit sequence
    of labels, one per gate.
    """
    if n_qubits < 2:
        raise SizeError(f"brickwork needs n_qubits >= 2, got {n_qubits}")
    if depth < 1:
        raise SizeError(f"depth must be >= 1, got {depth}")
    bonds = _bond_order(n_qubits)
    n_gates = len(bonds) * depth

    if isinstance(generator_assignment, str):
        if generator_assignment == "cycle":
            # Shift the cycle by one per layer. A flat gate-counter cycle
            # degenerates whenever a layer holds a multiple of five bonds:
            # each bond would then repeat one fixed generator forever.
            labels = [Z2_GENERATORS[(layer + rank) % 5]
                      for layer in range(depth)
                      for rank in range(len(bonds))]
        elif generator_assignment == "composite":
            labels = None
        else:
            raise ValueError(
                f"generator_assignment must be cycle, composite, or a label "
                f"sequence, got {generator_assignment!r}")
    else:
        labels = [str(lab) for lab in generator_assignment]
        if len(labels) != n_gates:
            raise ValueError(
                f"need {n_gates} generator labels, got {len(labels)}")
        for lab in labels:
            if lab not in Z2_GENERATORS:
                raise ValueError(f"label {lab!r} not in {Z2_GENERATORS}")
        generator_assignment = tuple(labels)

    slots = []
    k = 0
    for _ in range(depth):
        for bond in bonds:
            if labels is None:
                for lab in Z2_GENERATORS:
                    slots.append(GateSlot(PauliString.from_label(lab, bond), bond, k))
                    k += 1
            else:
                slots.append(
                    GateSlot(PauliString.from_label(labels[k], bond), bond, k))
                k += 1
    return CircuitSpec(n_qubits, depth, tuple(slots), "z2", k,
                       "z2_brickwork", generator_assignment)


def build_spt_layer(n_qubits: int) -> CircuitSpec:
    """Single layer: all ZXZ triples ascending, then XX on even and odd bonds."""
    if n_qubits < 4:
        raise SizeError(f"spt layer needs n_qubits >= 4, got {n_qubits}")
    slots = []
    k = 0
    for i in range(n_qubits - 2):
        sites = (i, i + 1, i + 2)
        slots.append(GateSlot(PauliString.from_label("ZXZ", sites), sites, k))
        k += 1
    for bond in _bond_order(n_qubits):
        slots.append(GateSlot(PauliString.from_label("XX", bond), bond, k))
        k += 1
    return CircuitSpec(n_qubits, 1, tuple(slots), "z2xz2", k, "spt_layer", "fixed")


def build_circuit(recipe: dict) -> CircuitSpec:
    """Rebuild a circuit from its to_dict recipe (manifest loading path)."""
    kind = recipe["kind"]
    if kind == "z2_brickwork":
        return build_z2_brickwork(recipe["n_qubits"], recipe["depth"],
                                  recipe.get("generator_assignment", "cycle"))
    if kind == "spt_layer":
        return build_spt_layer(recipe["n_qubits"])
    raise ValueError(f"unknown circuit kind {kind!r}")


def product_state_from_angles(angles: Sequence[float]) -> StateVector:
    """Product state with qubit i in cos(a_i/2)|0> + sin(a_i/2)|1>."""
    angles = np.asarray(angles, dtype=np.float64)
    n = angles.shape[0]
    if not 1 <= n <= MAX_QUBITS:
        raise SizeError(f"need 1..{MAX_QUBITS} angles, got {n}")
    # each kron prepends the next site as a more significant bit, so qubit 0
    # stays on the least significant bit
    amps = np.array([1.0 + 0j])
    for a in angles:
        amps = np.kron(np.array([np.cos(a / 2), np.sin(a / 2)],
                                dtype=np.complex128), amps)
    return StateVector(amps, n)


def random_product_state(n_qubits: int, rng_seed) -> StateVector:
    """Product state with polar angles drawn uniformly from (0, pi)."""
    rng = np.random.default_rng(rng_seed)
    return product_state_from_angles(rng.uniform(0.0, np.pi, n_qubits))


def plus_state(n_qubits: int) -> StateVector:
    """|+>^N, the uniform superposition."""
    return product_state_from_angles(np.full(n_qubits, np.pi / 2))


def cluster_state(n_qubits: int) -> StateVector:
    """|+>^N entangled by CZ on every nearest-neighbor bond (open chain)."""
    if n_qubits < 3:
        raise SizeError(f"cluster state needs n_qubits >= 3, got {n_qubits}")
    psi = plus_state(n_qubits)
    for i in range(n_qubits - 1):
        apply_controlled_z(psi, i, i + 1)
    return psi


def ghz_state(n_qubits: int) -> StateVector:
    """(|0...0> + |1...1>)/sqrt(2)."""
    if n_qubits < 2:
        raise SizeError(f"GHZ needs n_qubits >= 2, got {n_qubits}")
    psi = zero_state(n_qubits)
    psi.amps[0] = psi.amps[-1] = 1.0 / np.sqrt(2.0)
    return psi


def apply_circuit(circuit: CircuitSpec, params: ParamVector,
                  state: StateVector) -> StateVector:
    """Fresh state with every slot rotation applied in order."""
    if len(params) != circuit.n_params:
        raise ValueError(
            f"circuit has {circuit.n_params} parameters, got {len(params)}")
    if state.n_qubits != circuit.n_qubits:
        raise SizeError(
            f"circuit on {circuit.n_qubits} qubits applied to "
            f"{state.n_qubits}-qubit state")
    out = state.copy()
    values = params.values
    for slot in circuit.slots:
        x, y, z = slot.generator.masks()
        kernels.rotate_pauli(out.amps, x, y, z, values[slot.param_index])
    return out


def circuit_unitary(circuit: CircuitSpec, params: ParamVector) -> np.ndarray:
    """Dense matrix whose columns are the circuit applied to basis states."""
    n = circuit.n_qubits
    if n > UNITARY_MAX_QUBITS:
        raise CapacityError(
            f"dense unitary capped at {UNITARY_MAX_QUBITS} qubits, got {n}")
    if len(params) != circuit.n_params:
        raise ValueError(
            f"circuit has {circuit.n_params} parameters, got {len(params)}")
    dim = 1 << n
    mats = [slot.generator.masks() for slot in circuit.slots]
    values = params.values
    # Fortran layout makes each column contiguous for the in-place kernel.
    unitary = np.asfortranarray(np.eye(dim, dtype=np.complex128))
    for col in range(dim):
        column = unitary[:, col]
        for (x, y, z), slot in zip(mats, circuit.slots):
            kernels.rotate_pauli(column, x, y, z, values[slot.param_index])
    return unitary
