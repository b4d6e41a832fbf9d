"""Post-training analysis: spectral support, measurements, QFI, spectra.

Everything here consumes trained states or circuit unitaries and produces
plain data: eigenbasis decompositions, post-measurement entropy curves,
collective Fisher information, eigenphase clusters, gap-ratio statistics,
and parameter histograms against the Clifford angles.
"""

import logging
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from vqorder.errors import CapacityError, MatrixError, StatisticsError
from vqorder.models import EigenSystem
from vqorder.qstate import (
    StateVector,
    collective_z_weights,
    entanglement_entropy,
    reduced_density_matrix,
)

logger = logging.getLogger(__name__)

UNITARY_DIM_LIMIT = 1 << 12
DEGENERATE_GAP = 1e-12
UNDERFLOW_PROBABILITY = 1e-14
CLIFFORD_ANGLES = (0.0, np.pi / 2, np.pi, 3 * np.pi / 2)


def half_chain_entropy(state: StateVector) -> float:
    """Entanglement entropy of the first floor(N/2) sites."""
    cut = state.n_qubits // 2
    return entanglement_entropy(reduced_density_matrix(state, range(cut)))


@dataclass(frozen=True)
class SpectralSupport:
    """Decomposition of a state over an energy eigenbasis.

    weights[n] = |<E_n|psi>|^2 and phases[n] = arg <E_n|psi>; the optional
    diagonal_expectations column holds <E_n|O|E_n> for a chosen observable.
    """

    energies: np.ndarray
    weights: np.ndarray
    phases: np.ndarray
    diagonal_expectations: np.ndarray | None = None

    @property
    def mean_energy(self) -> float:
        return float(np.dot(self.weights, self.energies))

    def weight_in_window(self, low: float, high: float) -> float:
        inside = (self.energies >= low) & (self.energies <= high)
        return float(self.weights[inside].sum())

    def participating(self, weight_fraction: float = 0.9) -> np.ndarray:
        """Indices of the heaviest eigenstates holding the given weight."""
        order = np.argsort(self.weights)[::-1]
        cumulative = np.cumsum(self.weights[order])
        count = int(np.searchsorted(cumulative, weight_fraction) + 1)
        return order[:min(count, order.shape[0])]


def spectral_support(state: StateVector, eigensystem: EigenSystem,
                     observable=None) -> SpectralSupport:
    """Project a state onto a full eigenbasis.

    The coefficients are c_n = <E_n|psi>; their squared moduli sum to one
    for a normalized state, and the energy-weighted sum reproduces <H>.
    """
    if eigensystem.dim != state.amps.shape[0]:
        raise ValueError(
            f"eigensystem dimension {eigensystem.dim} does not match state "
            f"dimension {state.amps.shape[0]}")
    norm = np.linalg.norm(state.amps)
    if abs(norm - 1.0) > 1e-8:
        raise ValueError(f"state is not normalized: |psi| = {norm}")
    coeffs = eigensystem.eigenvectors.conj().T @ state.amps
    diagonal = None
    if observable is not None:
        diagonal = np.empty(eigensystem.dim)
        for n in range(eigensystem.dim):
            vec = StateVector(eigensystem.eigenvectors[:, n].astype(complex),
                              state.n_qubits)
            diagonal[n] = np.real(
                np.vdot(vec.amps, observable.apply(vec).amps))
    return SpectralSupport(energies=eigensystem.energies.copy(),
                           weights=np.abs(coeffs) ** 2,
                           phases=np.angle(coeffs),
                           diagonal_expectations=diagonal)


class MeasureOutcome(NamedTuple):
    outcome: int
    probability: float
    post_state: StateVector


def projective_measure(state: StateVector, site: int,
                       rng: np.random.Generator) -> MeasureOutcome:
    """Measure one site in the Z basis and collapse the state.

    The outcome is drawn with Born probabilities. If the drawn branch has
    probability below 1e-14 the projection would amplify numerical noise,
    so the other outcome is forced and the event logged.
    """
    if not 0 <= site < state.n_qubits:
        raise ValueError(f"site {site} outside 0..{state.n_qubits - 1}")
    bit_set = (np.arange(state.amps.shape[0]) >> site) & 1 == 1
    p_one = float(np.sum(np.abs(state.amps[bit_set]) ** 2))
    probabilities = (1.0 - p_one, p_one)
    outcome = 1 if rng.random() < p_one else 0
    if probabilities[outcome] < UNDERFLOW_PROBABILITY:
        logger.warning(
            "outcome %d on site %d has probability %.3e below underflow "
            "threshold; forcing outcome %d",
            outcome, site, probabilities[outcome], 1 - outcome)
        outcome = 1 - outcome
    keep = bit_set if outcome == 1 else ~bit_set
    amps = np.where(keep, state.amps, 0.0)
    amps /= np.sqrt(probabilities[outcome])
    return MeasureOutcome(outcome, probabilities[outcome],
                          StateVector(amps, state.n_qubits))


@dataclass(frozen=True)
class MeasurementRobustnessCurve:
    """Mean half-chain entropy after m random single-site measurements."""

    m_values: np.ndarray
    mean_entropy: np.ndarray
    stderr: np.ndarray
    sample_counts: np.ndarray


def measurement_robustness(states, m_max: int, samples_per_m: int,
                           rng: np.random.Generator) -> MeasurementRobustnessCurve:
    """Entropy-versus-measurement-count curve for an ensemble of states.

    Each sample draws one ensemble member, m distinct sites, and Born
    outcomes site by site, then evaluates the half-chain entropy of the
    collapsed state. The m = 0 row is the exact ensemble mean (no sampling).
    Per-sample child RNG streams keep the reduction order-independent.
    """
    states = list(states)
    if not states:
        raise ValueError("need at least one state")
    n = states[0].n_qubits
    if any(s.n_qubits != n for s in states):
        raise ValueError("all ensemble states must have the same size")
    if not 0 <= m_max < n:
        raise ValueError(f"m_max must satisfy 0 <= m_max < {n}, got {m_max}")
    if samples_per_m < 1:
        raise ValueError(f"samples_per_m must be >= 1, got {samples_per_m}")

    m_values = np.arange(m_max + 1)
    means = np.empty(m_max + 1)
    errors = np.empty(m_max + 1)
    counts = np.empty(m_max + 1, dtype=np.int64)

    base = np.array([half_chain_entropy(s) for s in states])
    means[0] = base.mean()
    errors[0] = base.std(ddof=1) / np.sqrt(len(base)) if len(base) > 1 else 0.0
    counts[0] = len(base)

    for m in range(1, m_max + 1):
        entropies = np.empty(samples_per_m)
        for k, stream in enumerate(rng.spawn(samples_per_m)):
            psi = states[stream.integers(len(states))]
            sites = stream.choice(n, size=m, replace=False)
            for site in sites:
                psi = projective_measure(psi, int(site), stream).post_state
            entropies[k] = half_chain_entropy(psi)
        means[m] = entropies.mean()
        errors[m] = (entropies.std(ddof=1) / np.sqrt(samples_per_m)
                     if samples_per_m > 1 else 0.0)
        counts[m] = samples_per_m
    return MeasurementRobustnessCurve(m_values, means, errors, counts)


def qfi_collective(state: StateVector) -> float:
    """Quantum Fisher information of a pure state for J_z = (1/2) sum Z_i.

    F_Q = 4 Var(J_z), which ranges from 0 to N^2; values above N witness
    multipartite entanglement and N^2 is the Heisenberg limit.
    """
    w = collective_z_weights(state.n_qubits)
    prob = np.abs(state.amps) ** 2
    first = float(np.dot(w, prob))
    second = float(np.dot(w * w, prob))
    return second - first * first


def _circular_mean(phases: np.ndarray) -> float:
    z = np.exp(1j * phases).mean()
    return float(np.angle(z))


def symmetry_sector_phases(unitary: np.ndarray, x_masks) -> dict:
    """Eigenphases of a unitary resolved into parity sectors.

    x_masks are the bit masks of commuting products of single-site X flips
    (each maps basis index b to b XOR mask). The unitary must commute with
    all of them; the returned dict maps a tuple of parity eigenvalues, one
    per mask, to the ascending eigenphases of the corresponding block.
    """
    u = np.asarray(unitary)
    dim = u.shape[0]
    masks = [int(m) for m in x_masks]
    if any(m == 0 or m >= dim for m in masks):
        raise ValueError(f"masks {masks} out of range for dimension {dim}")
    group = [0]
    for mask in masks:
        group += [g ^ mask for g in group]
    if len(set(group)) != len(group):
        raise ValueError("flip masks are not independent")

    idx = np.arange(dim)
    orbits = np.stack([idx ^ g for g in group])
    reps = idx[idx == orbits.min(axis=0)]
    scale = 1.0 / np.sqrt(len(group))

    out = {}
    for sector in np.ndindex(*([2] * len(masks))):
        signs = tuple(1 - 2 * s for s in sector)
        basis = np.zeros((dim, reps.shape[0]))
        for g_index, g in enumerate(group):
            character = 1.0
            for bit, sign in enumerate(signs):
                if (g_index >> bit) & 1:
                    character *= sign
            basis[reps ^ g, np.arange(reps.shape[0])] = character * scale
        block = basis.T @ u @ basis
        defect = np.max(np.abs(block.conj().T @ block - np.eye(reps.shape[0])))
        if defect > 1e-8:
            raise MatrixError(
                f"unitary does not respect the flip symmetry: block defect "
                f"{defect:.3e} in sector {signs}")
        out[signs] = np.sort(np.angle(np.linalg.eigvals(block)))
    return out


@dataclass(frozen=True)
class EigenphaseSpectrum:
    """Sorted principal-branch eigenphases with degeneracy clusters."""

    phases: np.ndarray
    clusters: tuple

    @property
    def multiplicities(self) -> np.ndarray:
        return np.array([mult for _, mult in self.clusters], dtype=np.int64)

    def modal_multiplicity(self) -> int:
        mults = self.multiplicities
        values, counts = np.unique(mults, return_counts=True)
        level_mass = values * counts
        return int(values[np.argmax(level_mass)])

    def level_fraction_with_multiplicity(self, k: int) -> float:
        mults = self.multiplicities
        return float(mults[mults == k].sum() / self.phases.shape[0])


def eigenphase_spectrum(unitary: np.ndarray,
                        degeneracy_tol: float = 1e-6) -> EigenphaseSpectrum:
    """Eigenphases of a unitary, clustered by circular proximity.

    Phases are principal-branch arguments in (-pi, pi], ascending. Adjacent
    phases within degeneracy_tol (including across the -pi/pi seam) merge
    into one cluster carrying a representative phase and a multiplicity.
    """
    u = np.asarray(unitary)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise MatrixError(f"expected a square matrix, got shape {u.shape}")
    dim = u.shape[0]
    if dim > UNITARY_DIM_LIMIT:
        raise CapacityError(
            f"dimension {dim} exceeds the {UNITARY_DIM_LIMIT} limit")
    defect = np.max(np.abs(u.conj().T @ u - np.eye(dim)))
    if defect > 1e-8:
        raise MatrixError(f"matrix is not unitary: defect {defect:.3e}")

    phases = np.sort(np.angle(np.linalg.eigvals(u)))
    groups = [[phases[0]]]
    for phase in phases[1:]:
        if phase - groups[-1][-1] <= degeneracy_tol:
            groups[-1].append(phase)
        else:
            groups.append([phase])
    if len(groups) > 1:
        wrap = (phases[0] + 2 * np.pi) - phases[-1]
        if wrap <= degeneracy_tol:
            seam = groups.pop()
            groups[0] = [p - 2 * np.pi for p in seam] + groups[0]
    clusters = tuple(
        (_circular_mean(np.array(group)), len(group)) for group in groups)
    return EigenphaseSpectrum(phases=phases, clusters=clusters)


def _sector_mean_r(levels: np.ndarray, circular: bool) -> tuple[float, int]:
    levels = np.sort(np.asarray(levels, dtype=float))
    if levels.shape[0] < 10:
        raise StatisticsError(
            f"need at least 10 levels per sector, got {levels.shape[0]}")
    # Degenerate levels are collapsed to one representative so that exact
    # multiplets do not flood the statistic with zero gaps.
    distinct = np.concatenate([[True], np.diff(levels) >= DEGENERATE_GAP])
    deduped = levels[distinct]
    dropped = levels.shape[0] - deduped.shape[0]
    if circular and deduped.shape[0] > 1:
        wrap = deduped[0] + 2 * np.pi - deduped[-1]
        if wrap < DEGENERATE_GAP:
            deduped = deduped[:-1]
            dropped += 1
    if dropped:
        warnings.warn(
            f"excluded {dropped} degenerate levels (gap below "
            f"{DEGENERATE_GAP})", stacklevel=3)
    gaps = np.diff(deduped)
    if circular:
        gaps = np.append(gaps, deduped[0] + 2 * np.pi - deduped[-1])
    if gaps.shape[0] < 2:
        raise StatisticsError("fewer than two nondegenerate gaps in sector")
    if circular:
        left, right = gaps, np.roll(gaps, -1)
    else:
        left, right = gaps[:-1], gaps[1:]
    ratios = np.minimum(left, right) / np.maximum(left, right)
    return float(ratios.mean()), deduped.shape[0]


def level_spacing_r(levels, sector_labels=None, circular: bool = False) -> float:
    """Mean adjacent-gap ratio r = <min(d_n, d_n+1)/max(d_n, d_n+1)>.

    With sector labels, levels are split per sector and the sector means
    are combined weighted by level count (mixing symmetry sectors biases r
    toward the uncorrelated value). Pass circular=True for phases so the
    wrap-around gap across the principal-branch seam participates.
    Uncorrelated levels give 2 ln 2 - 1 = 0.386; unitary-ensemble levels
    give about 0.60; a strictly uniform ladder gives exactly 1.
    """
    levels = np.asarray(levels, dtype=float)
    if sector_labels is None:
        mean_r, _ = _sector_mean_r(levels, circular)
        return mean_r
    sector_labels = np.asarray(sector_labels)
    if sector_labels.shape[0] != levels.shape[0]:
        raise ValueError("sector labels must align with levels")
    total = 0.0
    weight = 0
    for label in np.unique(sector_labels):
        mean_r, count = _sector_mean_r(levels[sector_labels == label],
                                       circular)
        total += mean_r * count
        weight += count
    return total / weight


@dataclass(frozen=True)
class CliffordAngleHistogram:
    """Histogram of parameters mod 2 pi against the Clifford reference."""

    bin_edges: np.ndarray
    counts: np.ndarray
    clifford_angles: tuple
    mean_clifford_distance: float


def clifford_angle_histogram(params, n_bins: int = 60) -> CliffordAngleHistogram:
    """Reduce parameters mod 2 pi and histogram them over [0, 2 pi).

    Pauli-string rotations are Clifford exactly at multiples of pi/2, so
    the summary statistic is the mean circular distance to the nearest
    multiple of pi/2 (maximal value pi/4).
    """
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    values = np.asarray(getattr(params, "values", params), dtype=float)
    angles = np.mod(values, 2 * np.pi)
    counts, edges = np.histogram(angles, bins=n_bins, range=(0.0, 2 * np.pi))
    quarter = np.pi / 2
    distance = np.abs(np.mod(angles + quarter / 2, quarter) - quarter / 2)
    mean_distance = float(distance.mean()) if distance.size else 0.0
    return CliffordAngleHistogram(bin_edges=edges, counts=counts,
                                  clifford_angles=CLIFFORD_ANGLES,
                                  mean_clifford_distance=mean_distance)
