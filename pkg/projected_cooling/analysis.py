"""
Exact-diagonalization oracle and overlap, efficiency and decay diagnostics.
"""

from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import math

import numpy as np
import scipy.linalg
from scipy.stats import linregress

from .exceptions import (
    ConfigurationError,
    DegenerateGroundStateError,
    FitError,
    SimulationError,
)
from .lattice import (
    InteriorProjector,
    LatticeBasis,
    ModelSpec,
    SectorOperator,
    StateVector,
    build_hamiltonian,
    build_projector,
)

BOUND_TOL = 1e-9
LOCALIZED_WEIGHT = 0.5
DEGENERACY_TOL = 1e-10
ESCAPE_TOL = 1e-14
RESIDUAL_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """Ascending eigenvalues with phase-fixed eigenvectors stored as columns."""

    basis: LatticeBasis
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __len__(self) -> int:
        return len(self.eigenvalues)

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def ground(self) -> StateVector:
        return self.state(0)

    def state(self, index: int) -> StateVector:
        return StateVector(self.basis, self.eigenvectors[:, index])

    def residual(self, H: SectorOperator, index: int) -> float:
        """||H v - E v|| for one eigenpair."""
        v = self.eigenvectors[:, index]
        return float(np.linalg.norm(H.matrix @ v - self.eigenvalues[index] * v))


def _canonical_phase(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its first nonzero component is positive real."""
    vectors = np.array(vectors, dtype=complex)
    for j in range(vectors.shape[1]):
        column = vectors[:, j]
        leading = np.flatnonzero(np.abs(column) > 1e-12 * np.abs(column).max())
        if leading.size:
            pivot = column[leading[0]]
            vectors[:, j] = column * (abs(pivot) / pivot)
    return vectors


def ground_state(
    H: SectorOperator, n_lowest: Optional[int] = None, check_degeneracy: bool = True
) -> SpectrumResult:
    """
    Diagonalize H.

    Args:
        H: Hermitian sector operator
        n_lowest: Only compute this many lowest pairs. Falls back to the full
            spectrum when every returned eigenvalue is still negative, so all
            bound states are always included.
        check_degeneracy: Raise if the two lowest eigenvalues coincide

    Returns:
        SpectrumResult in ascending order
    """
    dense = H.dense()
    dim = dense.shape[0]
    try:
        if n_lowest is not None and n_lowest < dim:
            eigenvalues, eigenvectors = scipy.linalg.eigh(
                dense, subset_by_index=[0, max(n_lowest, 2) - 1]
            )
            if eigenvalues[-1] < -BOUND_TOL:
                eigenvalues, eigenvectors = scipy.linalg.eigh(dense)
        else:
            eigenvalues, eigenvectors = scipy.linalg.eigh(dense)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise SimulationError(f"Eigensolver failed to converge: {e}") from e

    if check_degeneracy and len(eigenvalues) > 1 and eigenvalues[1] - eigenvalues[0] < DEGENERACY_TOL:
        raise DegenerateGroundStateError(
            f"Ground state is degenerate: E0={eigenvalues[0]:.12g}, E1={eigenvalues[1]:.12g}"
        )
    return SpectrumResult(H.basis, eigenvalues, _canonical_phase(eigenvectors))


def _overlap(x: np.ndarray, y: np.ndarray) -> float:
    nx = np.vdot(x, x).real
    ny = np.vdot(y, y).real
    if nx == 0 or ny == 0:
        raise ConfigurationError("Normalized overlap is undefined for a zero-norm state")
    return min(1.0, float(abs(np.vdot(x, y)) / math.sqrt(nx * ny)))


def normalized_overlap(x: StateVector, y: StateVector) -> float:
    """|<x|y>| / sqrt(<x|x><y|y>), invariant under scale and global phase."""
    if x.basis != y.basis:
        raise ConfigurationError("States live on different bases")
    return _overlap(x.amplitudes, y.amplitudes)


@dataclass(frozen=True)
class ProjectedOverlap:
    value: float
    escaped: bool = False

    def __float__(self) -> float:
        return self.value


def interior_overlap(psi: StateVector, psi0: StateVector, P: InteriorProjector) -> ProjectedOverlap:
    """Normalized overlap of P|psi0> and P|psi>; escaped when P|psi> vanishes."""
    inner = P.restrict(psi)
    weight = np.vdot(inner, inner).real
    total = np.vdot(psi.amplitudes, psi.amplitudes).real
    if total == 0 or weight <= ESCAPE_TOL * total:
        return ProjectedOverlap(0.0, escaped=True)
    return ProjectedOverlap(_overlap(P.restrict(psi0), inner))


def signal_efficiency(psi_I: StateVector, psi0: StateVector, P: InteriorProjector) -> float:
    """Post-selection success probability |<psi0|P|psi_I>|^2."""
    return float(abs(np.vdot(P.restrict(psi0), P.restrict(psi_I))) ** 2)


@dataclass(frozen=True)
class RegionExpectation:
    value: float
    probability: float
    escaped: bool = False


def expectation_in_region(O: SectorOperator, psi: StateVector, P: InteriorProjector) -> RegionExpectation:
    """
    <psi|P O P|psi> / <psi|P|psi>, the expectation conditioned on every
    exterior site being found empty.
    """
    total = np.vdot(psi.amplitudes, psi.amplitudes).real
    projected = P.apply(psi).amplitudes
    weight = np.vdot(projected, projected).real
    probability = weight / total if total > 0 else 0.0
    if probability < ESCAPE_TOL:
        return RegionExpectation(float("nan"), probability, escaped=True)
    value = np.vdot(projected, O.matrix @ projected).real / weight
    return RegionExpectation(float(value), float(probability))


@dataclass(frozen=True)
class LocalizedCandidate:
    index: int
    energy: float
    interior_weight: float

    @property
    def bound(self) -> bool:
        return self.energy < -BOUND_TOL

    @property
    def localized(self) -> bool:
        return self.bound and self.interior_weight >= LOCALIZED_WEIGHT


@dataclass(frozen=True)
class LocalizationReport:
    count: int
    candidates: List[LocalizedCandidate] = field(default_factory=list)

    def disagreements(self) -> List[LocalizedCandidate]:
        """Candidates meeting exactly one of the two criteria."""
        return [c for c in self.candidates if c.bound != (c.interior_weight >= LOCALIZED_WEIGHT)]


def count_localized_states(
    H: SectorOperator, P: InteriorProjector, spectrum: Optional[SpectrumResult] = None
) -> LocalizationReport:
    """
    Count eigenstates below the continuum (E < 0) with interior weight >= 0.5.

    Every state meeting either criterion is reported as a candidate.
    """
    if spectrum is None:
        spectrum = ground_state(H, check_degeneracy=False)
    weights = np.sum(np.abs(spectrum.eigenvectors[P.interior_indices, :]) ** 2, axis=0)
    candidates = []
    for i, (energy, weight) in enumerate(zip(spectrum.eigenvalues, weights)):
        if energy < -BOUND_TOL or weight >= LOCALIZED_WEIGHT:
            candidates.append(LocalizedCandidate(i, float(energy), float(weight)))
    count = sum(1 for c in candidates if c.localized)
    return LocalizationReport(count, candidates)


def tune_kinetic_scale(spec: ModelSpec, scales: Iterable[float] = range(1, 11)) -> Optional[float]:
    """Smallest kinetic scale factor leaving at most one localized state."""
    projector = build_projector(spec)
    for scale in scales:
        H = build_hamiltonian(spec.with_kinetic_scale(float(scale)))
        if count_localized_states(H, projector).count <= 1:
            return float(scale)
    return None


@dataclass(frozen=True)
class OverlapSeries:
    """Overlap samples O(t); the residual 1 - O(t) is what decays."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape:
            raise ConfigurationError("times and values must have the same length")
        if values.size and (values.min() < 0 or values.max() > 1 + 1e-12):
            raise ConfigurationError("Overlap values must lie in [0, 1]")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_trajectory(cls, trajectory) -> "OverlapSeries":
        return cls(trajectory.times, trajectory.overlaps)

    @property
    def residual(self) -> np.ndarray:
        return 1.0 - self.values


@dataclass(frozen=True)
class DecayFit:
    alpha: float
    stderr: float
    amplitude: float
    frequency: Optional[float]
    n_points: int
    used_envelope: bool


def _local_maxima(values: np.ndarray) -> np.ndarray:
    interior = (values[1:-1] >= values[:-2]) & (values[1:-1] > values[2:])
    return np.flatnonzero(interior) + 1


def fit_decay_exponent(series: OverlapSeries, t_min: float = 5.0, min_points: int = 20) -> DecayFit:
    """
    Fit 1 - O(t) ~ amplitude * t^-alpha on the upper envelope of the residual.

    The envelope is the set of local maxima of the residual after t_min;
    monotone residuals (fewer than three maxima) are fitted point by point.
    The dominant angular frequency of the detrended residual is reported
    when the samples are evenly spaced.

    Args:
        series: Overlap samples
        t_min: Transient cutoff
        min_points: Points required after the cutoff

    Returns:
        DecayFit with alpha, its standard error and diagnostics
    """
    keep = series.times >= t_min
    t = series.times[keep]
    r = series.residual[keep]
    if t.size < min_points:
        raise FitError(f"Need at least {min_points} points after t={t_min}, got {t.size}")
    if np.all(r < RESIDUAL_FLOOR):
        raise FitError("Residual is below 1e-12 everywhere; nothing to fit")

    peaks = _local_maxima(r)
    used_envelope = peaks.size >= 3
    index = peaks if used_envelope else np.arange(t.size)
    index = index[r[index] > RESIDUAL_FLOOR]
    if index.size < 3:
        raise FitError("Too few positive residual points to fit")
    fit = linregress(np.log(t[index]), np.log(r[index]))
    alpha = -fit.slope
    amplitude = math.exp(fit.intercept)

    frequency = None
    steps = np.diff(t)
    if steps.size and np.allclose(steps, steps[0]):
        detrended = r / (amplitude * t ** (-alpha)) - 1.0
        detrended = detrended - detrended.mean()
        spectrum = np.abs(np.fft.rfft(detrended))
        freqs = np.fft.rfftfreq(t.size, d=steps[0])
        if spectrum.size > 1:
            frequency = float(2 * math.pi * freqs[1:][np.argmax(spectrum[1:])])

    return DecayFit(
        alpha=float(alpha),
        stderr=float(fit.stderr),
        amplitude=amplitude,
        frequency=frequency,
        n_points=int(index.size),
        used_envelope=used_envelope,
    )


def oscillation_detected(series: OverlapSeries, t_min: float = 5.0, threshold: float = 0.05) -> bool:
    """
    True when the overlap keeps oscillating after t_min by more than `threshold`
    relative to its running envelope, the signature of several localized states.
    """
    keep = series.times >= t_min
    values = series.values[keep]
    if values.size < 5:
        return False
    peaks = _local_maxima(values)
    troughs = _local_maxima(-values)
    if peaks.size < 2 or troughs.size < 2:
        return False
    tail = slice(len(peaks) // 2, None)
    swing = values[peaks][tail].mean() - values[troughs][len(troughs) // 2:].mean()
    return bool(swing > threshold)


def smoothed_nondecreasing(
    times: Sequence[float], values: Sequence[float], window: float = 5.0, tol: float = 1e-3
) -> bool:
    """Moving average over `window` time units never drops by more than tol."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size < 2:
        return True
    width = max(1, int(round(window / (times[1] - times[0]))))
    if width >= values.size:
        return True
    smoothed = np.convolve(values, np.ones(width) / width, mode="valid")
    return bool(np.all(np.diff(smoothed) >= -tol))


def exterior_excitation_probabilities(psi: StateVector, P: InteriorProjector) -> np.ndarray:
    """Probability of finding k = 0..N particles outside the interior."""
    basis = psi.basis
    probabilities = np.abs(psi.amplitudes) ** 2
    probabilities = probabilities / probabilities.sum()
    radius = np.abs(basis.sites)
    if basis.particles == 1:
        outside = (radius > P.R).astype(int)
    else:
        single = (radius > P.R).astype(int)
        outside = np.add.outer(single, single).ravel()
    return np.bincount(outside, weights=probabilities, minlength=basis.particles + 1)


def relaxed_acceptance(exterior_excitations: int, n_particles: int, delta: float = 0.0) -> bool:
    """
    Keep a measurement when no exterior site is occupied, or (many-particle
    relaxation) when fewer than delta * n_particles are.
    """
    if exterior_excitations < 0 or n_particles < 1:
        raise ConfigurationError("Excitation and particle counts must be nonnegative")
    return exterior_excitations == 0 or exterior_excitations < delta * n_particles


def accepted_probability(psi: StateVector, P: InteriorProjector, delta: float = 0.0) -> float:
    """Probability that a measurement of the exterior sites passes `relaxed_acceptance`."""
    probabilities = exterior_excitation_probabilities(psi, P)
    n_particles = psi.basis.particles
    return float(sum(p for k, p in enumerate(probabilities) if relaxed_acceptance(k, n_particles, delta)))


def boundary_weight(psi: StateVector, width: int = 2) -> float:
    """Share of the norm on the outermost `width` sites of either chain."""
    probabilities = np.abs(psi.amplitudes) ** 2
    total = probabilities.sum()
    if total == 0:
        raise ConfigurationError("Boundary weight is undefined for a zero-norm state")
    return float(probabilities[psi.basis.edge_mask(width)].sum() / total)
