"""Gradient-descent training loop with multi-restart ensembles.

One train() call owns one parameter vector: initialize near the identity,
iterate adaptive-moment (or plain) gradient descent on the composite loss,
and record every traced observable at every iteration. Restarts are
independent runs whose seeds derive from a base seed by simple offsets;
the ensemble summary averages traces across restarts after padding each
converged run with its final value.

Seed discipline: restart k uses seed base_seed + k; within a run, the
initial product state draws from SeedSequence(seed, spawn_key=(0,)) and
the parameter initialization from SeedSequence(seed, spawn_key=(1,)).
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from vqorder.ansatz import (
    CircuitSpec,
    ParamVector,
    apply_circuit,
    build_circuit,
    cluster_state,
    ghz_state,
    random_product_state,
    symmetry_operators,
)
from vqorder.errors import NumericError
from vqorder.models import HamiltonianSpec, build_model
from vqorder.objective import LossConfig, forward_backward, loss_config_from_dict
from vqorder.qstate import StateVector, zero_state

PARITY_KEYS = {"z2": ("global_x",), "z2xz2": ("even_x", "odd_x")}


@dataclass(frozen=True)
class OptimizerConfig:
    """Update rule, step size, budget, and stopping tolerance."""

    method: str = "adam"
    learning_rate: float = 0.01
    max_iters: int = 2000
    convergence_tol: float = 1e-7
    convergence_window: int = 50
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    init_scale: float = 0.1

    def __post_init__(self):
        if self.method not in ("adam", "plain_gd"):
            raise ValueError(f"method must be adam or plain_gd, got {self.method!r}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.max_iters < 0:
            raise ValueError(f"max_iters must be >= 0, got {self.max_iters}")
        if self.convergence_tol < 0 or self.convergence_window < 1:
            raise ValueError("bad convergence settings")

    def to_dict(self) -> dict:
        return {"method": self.method, "learning_rate": self.learning_rate,
                "max_iters": self.max_iters,
                "convergence_tol": self.convergence_tol,
                "convergence_window": self.convergence_window,
                "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps,
                "init_scale": self.init_scale}


def optimizer_config_from_dict(doc: dict) -> OptimizerConfig:
    return OptimizerConfig(**doc)


@dataclass
class TrainingRecord:
    """Full trace of one run: one row per recorded evaluation.

    Row 0 is the evaluation at the freshly initialized parameters, so a
    zero-iteration budget still yields one row. wall_time is measured but
    never persisted (outputs must not depend on the clock).
    """

    seed: int
    loss_trace: np.ndarray
    order_trace: np.ndarray
    energy_trace: np.ndarray
    variance_trace: np.ndarray
    parity_traces: dict[str, np.ndarray]
    final_params: ParamVector
    status: str  # converged | max_iters | failed
    wall_time: float = 0.0

    @property
    def n_recorded(self) -> int:
        return int(self.loss_trace.shape[0])

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def final_loss(self) -> float:
        return float(self.loss_trace[-1])


def train(circuit: CircuitSpec, init_state: StateVector, h: HamiltonianSpec,
          loss_cfg: LossConfig, opt_cfg: OptimizerConfig,
          seed: int) -> TrainingRecord:
    """Run one optimization from identity-adjacent parameters.

    Raises NumericError on NaN/Inf in the loss, gradient, or parameters;
    the exception carries the partial record accumulated so far.
    """
    started = time.perf_counter()
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))
    values = rng.uniform(-opt_cfg.init_scale, opt_cfg.init_scale,
                         circuit.n_params)
    sym_ops = symmetry_operators(circuit.symmetry, circuit.n_qubits)
    parity_keys = PARITY_KEYS[circuit.symmetry]

    traces = {k: [] for k in ("loss", "order", "energy", "variance")}
    parity_lists = {k: [] for k in parity_keys}
    safe_values = values

    def snapshot(status: str) -> TrainingRecord:
        # safe_values is the last parameter vector that passed the finite
        # check, so a record can be built even when an update overflowed.
        return TrainingRecord(
            seed=seed,
            loss_trace=np.array(traces["loss"]),
            order_trace=np.array(traces["order"]),
            energy_trace=np.array(traces["energy"]),
            variance_trace=np.array(traces["variance"]),
            parity_traces={k: np.array(v) for k, v in parity_lists.items()},
            final_params=ParamVector(safe_values.copy()),
            status=status,
            wall_time=time.perf_counter() - started)

    adam_m = np.zeros_like(values)
    adam_v = np.zeros_like(values)
    window = opt_cfg.convergence_window
    status = "max_iters"

    for step in range(opt_cfg.max_iters + 1):
        if not np.all(np.isfinite(values)):
            raise NumericError(
                f"non-finite parameters at iteration {step}",
                partial_record=snapshot("failed"))
        safe_values = values
        breakdown, grad, parities = forward_backward(
            ParamVector(values), circuit, init_state, h, loss_cfg, sym_ops)
        if not (np.isfinite(breakdown.loss) and np.all(np.isfinite(grad))):
            raise NumericError(
                f"non-finite loss or gradient at iteration {step}",
                partial_record=snapshot("failed"))
        traces["loss"].append(breakdown.loss)
        traces["order"].append(breakdown.order)
        traces["energy"].append(breakdown.energy_mean)
        traces["variance"].append(breakdown.energy_variance)
        for key, value in zip(parity_keys, parities):
            parity_lists[key].append(value)

        if step == opt_cfg.max_iters:
            break
        if step >= window:
            recent, past = traces["loss"][-1], traces["loss"][-1 - window]
            if abs(recent - past) <= opt_cfg.convergence_tol * max(abs(recent), 1.0):
                status = "converged"
                break

        # Overflow in an update surfaces as non-finite parameters on the
        # next pass, which is the abort path; no need to warn here.
        with np.errstate(over="ignore", invalid="ignore"):
            if opt_cfg.method == "adam":
                adam_m = opt_cfg.beta1 * adam_m + (1 - opt_cfg.beta1) * grad
                adam_v = opt_cfg.beta2 * adam_v + (1 - opt_cfg.beta2) * grad**2
                m_hat = adam_m / (1 - opt_cfg.beta1 ** (step + 1))
                v_hat = adam_v / (1 - opt_cfg.beta2 ** (step + 1))
                values = values - opt_cfg.learning_rate * m_hat / (
                    np.sqrt(v_hat) + opt_cfg.eps)
            else:
                values = values - opt_cfg.learning_rate * grad

    if len(traces["loss"]) > 1 and traces["loss"][-1] >= traces["loss"][0]:
        status = "failed"
    return snapshot(status)


INIT_STATE_KINDS = ("random_product", "cluster", "ghz", "zero")


@dataclass(frozen=True)
class RunSpec:
    """Everything one restart needs: circuit, model, loss, optimizer, init."""

    circuit: CircuitSpec
    hamiltonian: HamiltonianSpec
    loss_cfg: LossConfig
    opt_cfg: OptimizerConfig
    init_state_kind: str = "random_product"

    def initial_state(self, seed: int) -> StateVector:
        n = self.circuit.n_qubits
        if self.init_state_kind == "random_product":
            return random_product_state(
                n, np.random.SeedSequence(seed, spawn_key=(0,)))
        if self.init_state_kind == "cluster":
            return cluster_state(n)
        if self.init_state_kind == "ghz":
            return ghz_state(n)
        if self.init_state_kind == "zero":
            return zero_state(n)
        raise ValueError(f"unknown initial state kind {self.init_state_kind!r}")

    def to_dict(self) -> dict:
        return {"circuit": self.circuit.to_dict(),
                "model": self.hamiltonian.to_dict(),
                "loss": self.loss_cfg.to_dict(),
                "optimizer": self.opt_cfg.to_dict(),
                "init_state": self.init_state_kind}


def run_spec_from_dict(doc: dict) -> RunSpec:
    model = dict(doc["model"])
    label = model.pop("label")
    n_qubits = model.pop("n_qubits")
    return RunSpec(circuit=build_circuit(doc["circuit"]),
                   hamiltonian=build_model(label, n_qubits, **model),
                   loss_cfg=loss_config_from_dict(doc["loss"]),
                   opt_cfg=optimizer_config_from_dict(doc["optimizer"]),
                   init_state_kind=doc["init_state"])


@dataclass
class EnsembleSummary:
    """Across-restart mean and standard error of every traced observable.

    Traces of different lengths are padded with their final value before
    averaging (a stopped run holds its converged observables).
    """

    records: tuple
    seeds: tuple[int, ...]
    mean_traces: dict[str, np.ndarray]
    stderr_traces: dict[str, np.ndarray]
    failures: tuple[tuple[int, str], ...] = ()

    @property
    def n_restarts(self) -> int:
        return len(self.records)


def _padded(trace: np.ndarray, length: int) -> np.ndarray:
    if trace.shape[0] == length:
        return trace
    return np.concatenate([trace, np.full(length - trace.shape[0], trace[-1])])


def summarize(records, seeds, failures=()) -> EnsembleSummary:
    names = ("loss", "order", "energy", "variance")
    longest = max(r.n_recorded for r in records)
    stacked = {
        "loss": np.stack([_padded(r.loss_trace, longest) for r in records]),
        "order": np.stack([_padded(r.order_trace, longest) for r in records]),
        "energy": np.stack([_padded(r.energy_trace, longest) for r in records]),
        "variance": np.stack(
            [_padded(r.variance_trace, longest) for r in records]),
    }
    n = len(records)
    means, stderr = {}, {}
    for k in names:
        stack = stacked[k]
        # Bit-identical rows must reduce exactly: the mean of n equal values
        # need not round back to that value, leaving one-ulp residue in both
        # the mean and the spread.
        if n == 1 or np.all(stack == stack[0]):
            means[k] = stack[0].copy()
            stderr[k] = np.zeros(longest)
        else:
            means[k] = stack.mean(axis=0)
            stderr[k] = stack.std(axis=0, ddof=1) / np.sqrt(n)
    return EnsembleSummary(tuple(records), tuple(seeds), means, stderr,
                           tuple(failures))


def _run_restart(spec: RunSpec, seed: int):
    try:
        return train(spec.circuit, spec.initial_state(seed), spec.hamiltonian,
                     spec.loss_cfg, spec.opt_cfg, seed), None
    except NumericError as exc:
        return exc.partial_record, str(exc)


def multi_restart(spec: RunSpec, n_restarts: int, base_seed: int,
                  jobs: int = 1, seeds=None) -> EnsembleSummary:
    """Independent restarts with seeds base_seed+k (or an explicit list).

    Per-run numeric aborts are collected, not propagated; their partial
    records join the summary's record list but are excluded from trace
    averaging when empty.
    """
    if n_restarts < 1:
        raise ValueError(f"n_restarts must be >= 1, got {n_restarts}")
    if seeds is None:
        seeds = [base_seed + k for k in range(n_restarts)]
    elif len(seeds) != n_restarts:
        raise ValueError("explicit seed list length must equal n_restarts")

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_restart, [spec] * n_restarts, seeds))
    else:
        outcomes = [_run_restart(spec, s) for s in seeds]

    records, failures = [], []
    for k, (record, error) in enumerate(outcomes):
        if error is not None:
            failures.append((k, error))
        if record is not None and record.n_recorded > 0:
            records.append(record)
    if not records:
        raise NumericError("every restart aborted before recording a trace")
    return summarize(records, seeds, failures)
