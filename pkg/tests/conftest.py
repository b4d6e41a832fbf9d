"""Shared fixtures: trained ensembles are expensive, so build them once.

The session-scoped fixtures here back both the training-module tests and
the acceptance suite. Everything is seeded, so repeated sessions produce
identical ensembles.
"""

import numpy as np
import pytest

from vqorder.ansatz import build_spt_layer, build_z2_brickwork
from vqorder.models import build_cluster_ising, build_ising_annni
from vqorder.objective import LossConfig, StringOrder, default_string_endpoints
from vqorder.train import OptimizerConfig, RunSpec, multi_restart

ENSEMBLE_BASE_SEED = 2000
ENSEMBLE_RESTARTS = 10
ENSEMBLE_JOBS = 4


def flip_order_run_spec(n_qubits: int, depth: int) -> RunSpec:
    """Default collective-flip run: brickwork circuit, frustrated chain."""
    return RunSpec(build_z2_brickwork(n_qubits, depth),
                   build_ising_annni(n_qubits),
                   LossConfig(), OptimizerConfig())


def string_order_run_spec(n_qubits: int) -> RunSpec:
    """Default string-order run: one structured layer, cluster chain."""
    i, j = default_string_endpoints(n_qubits)
    cfg = LossConfig(order_observable=StringOrder(i, j))
    return RunSpec(build_spt_layer(n_qubits), build_cluster_ising(n_qubits),
                   cfg, OptimizerConfig(), init_state_kind="cluster")


def _trained(spec: RunSpec):
    return spec, multi_restart(spec, ENSEMBLE_RESTARTS, ENSEMBLE_BASE_SEED,
                               jobs=ENSEMBLE_JOBS)


@pytest.fixture(scope="session")
def z2_ensemble_n6():
    return _trained(flip_order_run_spec(6, 6))


@pytest.fixture(scope="session")
def z2_ensemble_n8():
    return _trained(flip_order_run_spec(8, 8))


@pytest.fixture(scope="session")
def z2_ensemble_n10():
    return _trained(flip_order_run_spec(10, 10))


@pytest.fixture(scope="session")
def z2_ensembles(z2_ensemble_n6, z2_ensemble_n8, z2_ensemble_n10):
    """Default-protocol ensembles keyed by size, shared across test files."""
    return {6: z2_ensemble_n6, 8: z2_ensemble_n8, 10: z2_ensemble_n10}


@pytest.fixture(scope="session")
def spt_ensemble_n8():
    return _trained(string_order_run_spec(8))


@pytest.fixture(scope="session")
def spt_ensemble_n12():
    return _trained(string_order_run_spec(12))


@pytest.fixture(scope="session")
def spt_ensembles(spt_ensemble_n8, spt_ensemble_n12):
    """String-order ensembles for the structured layer, keyed by size."""
    return {8: spt_ensemble_n8, 12: spt_ensemble_n12}


def smoothed(trace: np.ndarray, window: int = 10) -> np.ndarray:
    return np.convolve(trace, np.ones(window) / window, mode="valid")
