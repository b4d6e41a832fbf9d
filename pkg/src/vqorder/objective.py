"""Order parameters, the composite loss, and exact adjoint gradients.

The loss couples three expectation functionals of the circuit output:

    L(theta) = -order + sigma * (<H> - E)^2 + beta * (<H^2> - <H>^2)

where ``order`` is either the collective-Z susceptibility or a nonlocal
string expectation. Gradients are computed by a reverse sweep: one forward
pass, one co-state construction, then one backward walk that un-applies
each rotation from both vectors while reading off Im<lambda|P_k|psi>.
Total cost is a small constant times the forward pass, independent of the
parameter count.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from vqorder import kernels
from vqorder.ansatz import CircuitSpec, ParamVector, apply_circuit
from vqorder.errors import SizeError
from vqorder.models import HamiltonianSpec, apply_hamiltonian
from vqorder.qstate import (
    PauliString,
    StateVector,
    collective_z_weights,
    pauli_expectation,
)


class ChiSusceptibility:
    """chi = N^-2 <(sum_i Z_i)^2>, the collective-Z long-range-order signal.

    Diagonal in the computational basis, so both the value and the operator
    application are single weighted passes.
    """

    label = "chi"

    def value(self, state: StateVector) -> float:
        w = collective_z_weights(state.n_qubits)
        prob = np.abs(state.amps) ** 2
        return float(np.dot(w * w, prob)) / state.n_qubits**2

    def apply(self, state: StateVector) -> StateVector:
        w = collective_z_weights(state.n_qubits)
        scaled = (w * w / state.n_qubits**2) * state.amps
        return StateVector(scaled, state.n_qubits)

    def to_dict(self) -> dict:
        return {"kind": "chi"}

    def __eq__(self, other) -> bool:
        return isinstance(other, ChiSusceptibility)

    def __hash__(self) -> int:
        return hash(type(self))


class StringOrder:
    """Expectation of the nonlocal string Z Y X...X Y Z between two sites."""

    label = "string"

    def __init__(self, i: int, j: int):
        if i < 0 or j < i + 3:
            raise ValueError(
                f"string endpoints need 0 <= i and i+3 <= j, got ({i}, {j})")
        self.i = int(i)
        self.j = int(j)

    def operator(self, n_qubits: int) -> PauliString:
        if self.j > n_qubits - 1:
            raise ValueError(
                f"string endpoint {self.j} out of range for n={n_qubits}")
        terms = {self.i: "Z", self.i + 1: "Y", self.j - 1: "Y", self.j: "Z"}
        for k in range(self.i + 2, self.j - 1):
            terms[k] = "X"
        return PauliString(terms)

    def value(self, state: StateVector) -> float:
        return pauli_expectation(state, self.operator(state.n_qubits))

    def apply(self, state: StateVector) -> StateVector:
        out = np.zeros_like(state.amps)
        x, y, z = self.operator(state.n_qubits).masks()
        kernels.acc_pauli(out, state.amps, 1.0 + 0j, x, y, z)
        return StateVector(out, state.n_qubits)

    def to_dict(self) -> dict:
        return {"kind": "string", "i": self.i, "j": self.j}

    def __eq__(self, other):
        return isinstance(other, StringOrder) and (self.i, self.j) == (
            other.i, other.j)


def observable_from_dict(doc: dict):
    kind = doc.get("kind")
    if kind == "chi":
        return ChiSusceptibility()
    if kind == "string":
        return StringOrder(doc["i"], doc["j"])
    raise ValueError(f"unknown order observable kind {kind!r}")


def default_string_endpoints(n_qubits: int) -> tuple[int, int]:
    """Quarter-chain endpoints, the bulk placement used throughout."""
    return n_qubits // 4, (3 * n_qubits) // 4


def susceptibility(state: StateVector) -> float:
    return ChiSusceptibility().value(state)


def string_order(state: StateVector, i: int, j: int) -> float:
    return StringOrder(i, j).value(state)


@dataclass(frozen=True)
class LossConfig:
    """Loss shape: target energy, the two penalty weights, the order signal."""

    target_energy: float = 0.0
    sigma: float = 0.5
    beta: float = 0.25
    order_observable: object = field(default_factory=ChiSusceptibility)

    def __post_init__(self):
        if self.sigma < 0 or self.beta < 0:
            raise ValueError(
                f"penalty weights must be nonnegative, got sigma={self.sigma}, "
                f"beta={self.beta}")

    def to_dict(self) -> dict:
        return {"target_energy": self.target_energy, "sigma": self.sigma,
                "beta": self.beta,
                "order_observable": self.order_observable.to_dict()}


def loss_config_from_dict(doc: dict) -> LossConfig:
    return LossConfig(doc["target_energy"], doc["sigma"], doc["beta"],
                      observable_from_dict(doc["order_observable"]))


class LossBreakdown(NamedTuple):
    """Scalar loss together with the three traced expectation values."""

    loss: float
    order: float
    energy_mean: float
    energy_variance: float


def evaluate_state(state: StateVector, h: HamiltonianSpec,
                   cfg: LossConfig) -> LossBreakdown:
    """Loss pieces of an already-evolved state (one H application)."""
    order = cfg.order_observable.value(state)
    hpsi = apply_hamiltonian(h, state)
    mean = float(np.vdot(state.amps, hpsi.amps).real)
    second = float(np.vdot(hpsi.amps, hpsi.amps).real)
    variance = second - mean * mean
    total = (-order + cfg.sigma * (mean - cfg.target_energy) ** 2
             + cfg.beta * variance)
    return LossBreakdown(total, order, mean, variance)


def loss(params: ParamVector, circuit: CircuitSpec, init_state: StateVector,
         h: HamiltonianSpec, cfg: LossConfig) -> float:
    return evaluate_state(apply_circuit(circuit, params, init_state), h, cfg).loss


def forward_backward(params: ParamVector, circuit: CircuitSpec,
                     init_state: StateVector, h: HamiltonianSpec,
                     cfg: LossConfig, trace_operators: tuple = ()
                     ) -> tuple[LossBreakdown, np.ndarray, tuple[float, ...]]:
    """One forward pass, one reverse sweep; optionally traces extra operators.

    The co-state packs every expectation functional's weight:
    lambda = -A|psi> + [2 sigma (<H>-E) - 2 beta <H>] H|psi> + beta H^2|psi>,
    after which grad_k = Im <lambda_k|P_k|psi_k> with both vectors rolled
    back through the inverse rotations. ``trace_operators`` are Hermitian
    Pauli strings evaluated on the evolved state (the training loop uses
    this for symmetry bookkeeping without a second forward pass).
    """
    if init_state.n_qubits != circuit.n_qubits:
        raise SizeError(
            f"circuit on {circuit.n_qubits} qubits, state on "
            f"{init_state.n_qubits}")
    psi = apply_circuit(circuit, params, init_state)
    traced = tuple(pauli_expectation(psi, op) for op in trace_operators)

    order = cfg.order_observable.value(psi)
    hpsi = apply_hamiltonian(h, psi)
    mean = float(np.vdot(psi.amps, hpsi.amps).real)
    second = float(np.vdot(hpsi.amps, hpsi.amps).real)
    variance = second - mean * mean
    total = (-order + cfg.sigma * (mean - cfg.target_energy) ** 2
             + cfg.beta * variance)
    breakdown = LossBreakdown(total, order, mean, variance)

    lam = -cfg.order_observable.apply(psi).amps
    lam += (2.0 * cfg.sigma * (mean - cfg.target_energy)
            - 2.0 * cfg.beta * mean) * hpsi.amps
    if cfg.beta != 0.0:
        lam += cfg.beta * apply_hamiltonian(h, hpsi).amps

    grad = np.zeros(circuit.n_params)
    values = params.values
    for slot in reversed(circuit.slots):
        x, y, z = slot.generator.masks()
        grad[slot.param_index] += complex(
            kernels.bracket_pauli(lam, psi.amps, x, y, z)).imag
        angle = -values[slot.param_index]
        kernels.rotate_pauli(psi.amps, x, y, z, angle)
        kernels.rotate_pauli(lam, x, y, z, angle)
    return breakdown, grad, traced


def loss_and_gradient(params: ParamVector, circuit: CircuitSpec,
                      init_state: StateVector, h: HamiltonianSpec,
                      cfg: LossConfig) -> tuple[LossBreakdown, np.ndarray]:
    breakdown, grad, _ = forward_backward(params, circuit, init_state, h, cfg)
    return breakdown, grad


def loss_gradient(params: ParamVector, circuit: CircuitSpec,
                  init_state: StateVector, h: HamiltonianSpec,
                  cfg: LossConfig) -> np.ndarray:
    return loss_and_gradient(params, circuit, init_state, h, cfg)[1]
