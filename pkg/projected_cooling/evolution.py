"""
Time evolution of lattice states under time-dependent Hamiltonians.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import math

import numpy as np
import scipy.linalg

from .analysis import expectation_in_region, ground_state, interior_overlap
from .exceptions import ConfigurationError, SimulationError
from .lattice import (
    KINETIC_TAGS,
    InteriorProjector,
    ModelSpec,
    SectorOperator,
    StateVector,
    build_hamiltonian,
    build_kinetic,
    build_potential,
    build_projector,
    initial_state,
    trotter_parts,
)

SCHEDULE_KINDS = ("static", "adiabatic", "projected_cooling")
METHODS = ("full", "trotter")
TIME_GRIDS = ("end", "midpoint")


@dataclass(frozen=True, eq=False)
class Schedule:
    """
    Time-dependent Hamiltonian H(t) = c_K(t) * K + c_V(t) * (V + W).

    static:            c_K = 1, c_V = 1
    adiabatic:         c_K = t / t_final, c_V = 1
    projected_cooling: H(t) = (kappa*K - H) exp(-t/tau) + H
    """

    model: ModelSpec
    kind: str = "static"
    t_final: Optional[float] = None
    kappa: float = 10.0
    tau: float = 3.6

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ConfigurationError(
                f"Unknown schedule '{self.kind}' (choose from {', '.join(SCHEDULE_KINDS)})"
            )
        if self.kind == "adiabatic" and (self.t_final is None or self.t_final <= 0):
            raise ConfigurationError("Adiabatic schedules need a positive t_final")
        if self.kind == "projected_cooling" and (self.kappa <= 0 or self.tau <= 0):
            raise ConfigurationError("Projected cooling needs positive kappa and tau")

    @classmethod
    def static(cls, model: ModelSpec) -> "Schedule":
        return cls(model, "static")

    @classmethod
    def adiabatic(cls, model: ModelSpec, t_final: float) -> "Schedule":
        return cls(model, "adiabatic", t_final=t_final)

    @classmethod
    def projected_cooling(cls, model: ModelSpec, kappa: float = 10.0, tau: float = 3.6) -> "Schedule":
        return cls(model, "projected_cooling", kappa=kappa, tau=tau)

    @cached_property
    def kinetic(self) -> SectorOperator:
        return build_kinetic(self.model)

    @cached_property
    def potential(self) -> SectorOperator:
        return build_potential(self.model)

    @cached_property
    def hamiltonian(self) -> SectorOperator:
        """The static target Hamiltonian H-bar."""
        return self.kinetic + self.potential

    @cached_property
    def parts(self) -> List[SectorOperator]:
        return trotter_parts(self.model)

    def coefficients(self, t: float) -> Tuple[float, float]:
        """(kinetic, potential) multipliers at time t."""
        if self.kind == "static":
            return 1.0, 1.0
        if self.kind == "adiabatic":
            return t / self.t_final, 1.0
        decay = math.exp(-t / self.tau)
        return 1.0 + (self.kappa - 1.0) * decay, 1.0 - decay

    def hamiltonian_at(self, t: float) -> SectorOperator:
        c_kin, c_pot = self.coefficients(t)
        matrix = c_kin * self.kinetic.matrix + c_pot * self.potential.matrix
        return SectorOperator(self.model.basis, matrix, "H-composite")

    def parts_at(self, t: float) -> List[SectorOperator]:
        c_kin, c_pot = self.coefficients(t)
        return [p.scaled(c_kin if p.tag in KINETIC_TAGS else c_pot) for p in self.parts]

    def describe(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"kind": self.kind}
        if self.kind == "adiabatic":
            data["t_final"] = self.t_final
        if self.kind == "projected_cooling":
            data.update(kappa=self.kappa, tau=self.tau)
        return data


@dataclass(frozen=True)
class NoiseModel:
    """Multiplicative 1 + z noise, z complex Gaussian with rms epsilon/sqrt(2) per part."""

    epsilon: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not math.isfinite(self.epsilon) or self.epsilon < 0:
            raise ConfigurationError(f"Noise strength must be nonnegative, got {self.epsilon}")

    @property
    def is_noiseless(self) -> bool:
        return self.epsilon == 0

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def spawn(self, count: int) -> List["NoiseModel"]:
        """Independent child noise models derived from this seed."""
        children = np.random.SeedSequence(self.seed).spawn(count)
        return [NoiseModel(self.epsilon, int(c.generate_state(1)[0])) for c in children]


@dataclass(frozen=True)
class StepRecord:
    step: int
    time: float
    overlap: float
    norm: float
    interior_weight: float
    energy: float
    escaped: bool = False


@dataclass
class Trajectory:
    """Per-step record of one evolution run."""

    records: List[StepRecord]
    final_state: StateVector
    metadata: Dict[str, Any] = field(default_factory=dict)
    snapshots: Optional[List[StateVector]] = None

    @property
    def n_steps(self) -> int:
        return len(self.records) - 1

    @property
    def times(self) -> np.ndarray:
        return np.array([r.time for r in self.records])

    @property
    def overlaps(self) -> np.ndarray:
        return np.array([r.overlap for r in self.records])

    @property
    def norms(self) -> np.ndarray:
        return np.array([r.norm for r in self.records])

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records])

    @property
    def max_overlap(self) -> float:
        return float(self.overlaps.max())

    def first_step_reaching(self, threshold: float) -> Optional[int]:
        """Smallest step whose overlap is at least `threshold`, if any."""
        for record in self.records:
            if record.overlap >= threshold:
                return record.step
        return None


class SweepPoint(NamedTuple):
    n_steps: int
    overlap: float
    record: StepRecord


Spectrum = Tuple[np.ndarray, np.ndarray]


def _exchange_spectra(H: SectorOperator, with_antisymmetric: bool) -> Tuple[Spectrum, Optional[Spectrum]]:
    """Symmetric-block eigenpairs and, if asked, the full ascending spectrum."""
    Q, n_sym = H.basis.exchange_transform
    rotated = (Q.T @ H.matrix @ Q).toarray()
    values, vectors = scipy.linalg.eigh(rotated[:n_sym, :n_sym])
    symmetric = (values, Q[:, :n_sym] @ vectors)
    if not with_antisymmetric:
        return symmetric, None
    if n_sym == H.basis.dimension:
        return symmetric, symmetric
    anti_values, anti_vectors = scipy.linalg.eigh(rotated[n_sym:, n_sym:])
    values = np.concatenate([symmetric[0], anti_values])
    vectors = np.hstack([symmetric[1], Q[:, n_sym:] @ anti_vectors])
    order = np.argsort(values, kind="stable")
    return symmetric, (values[order], vectors[:, order])


def _decompose(H: SectorOperator, symmetric: bool, full: bool) -> Tuple[Optional[Spectrum], Optional[Spectrum]]:
    """(exchange-symmetric eigenpairs, full spectrum), each only if requested."""
    if symmetric and not H.exchange_symmetric:
        raise ConfigurationError(f"Operator {H.tag} does not commute with the chain swap")
    try:
        if H.exchange_symmetric:
            block, whole = _exchange_spectra(H, full)
            return (block if symmetric else None), whole
        return None, scipy.linalg.eigh(H.dense())
    except (np.linalg.LinAlgError, ValueError) as e:
        raise SimulationError(f"Eigendecomposition of {H.tag} failed: {e}") from e


def spectral_decomposition(H: SectorOperator, symmetric_only: bool = False) -> Spectrum:
    """
    Eigenvalues and eigenvectors of a Hermitian sector operator.

    Two-chain operators that commute with the chain swap are diagonalized
    block by block in the exchange basis.

    Args:
        H: Hermitian operator
        symmetric_only: Keep only the exchange-symmetric eigenpairs; exact
            for propagating states that are themselves exchange-symmetric

    Returns:
        (eigenvalues, eigenvectors as columns)
    """
    block, whole = _decompose(H, symmetric_only, not symmetric_only)
    return block if symmetric_only else whole


def propagate_spectral(
    psi: StateVector, eigenvalues: np.ndarray, eigenvectors: np.ndarray, dt: float
) -> StateVector:
    coefficients = eigenvectors.conj().T @ psi.amplitudes
    return psi.with_amplitudes(eigenvectors @ (np.exp(-1j * eigenvalues * dt) * coefficients))


def _check_step(psi: StateVector, basis_dimension: int, dt: float) -> None:
    if psi.basis.dimension != basis_dimension:
        raise ConfigurationError(
            f"State dimension {psi.basis.dimension} does not match operator dimension {basis_dimension}"
        )
    if dt < 0:
        raise ConfigurationError(f"Time step must be nonnegative, got {dt}")


def step_full(psi: StateVector, H_t: SectorOperator, dt: float) -> StateVector:
    """
    exp(-i H_t dt) |psi> via the spectral decomposition of H_t.

    Args:
        psi: Current state
        H_t: Hamiltonian evaluated for this step
        dt: Time step

    Returns:
        Propagated state (same norm as psi)
    """
    _check_step(psi, H_t.basis.dimension, dt)
    if dt == 0:
        return psi
    eigenvalues, eigenvectors = spectral_decomposition(H_t)
    return propagate_spectral(psi, eigenvalues, eigenvectors, dt)


def step_trotter(psi: StateVector, parts: Sequence[SectorOperator], dt: float) -> StateVector:
    """
    Ordered product exp(-i P_1 dt) ... exp(-i P_m dt) |psi>.

    The rightmost factor (last part) acts first.
    """
    for part in parts:
        _check_step(psi, part.basis.dimension, dt)
    for part in reversed(parts):
        psi = part.exponential_action(psi, dt)
    return psi


def apply_noise(
    psi: StateVector, noise: NoiseModel, rng: Optional[np.random.Generator] = None
) -> StateVector:
    """
    Multiply every amplitude by an independent 1 + z. The state is not renormalized.

    Args:
        psi: State after a time step
        noise: Noise strength and seed
        rng: Generator to draw from; a fresh one seeded from `noise` if omitted

    Returns:
        The noisy state (psi itself when epsilon is zero)
    """
    if noise.is_noiseless:
        return psi
    if rng is None:
        rng = noise.generator()
    sigma = noise.epsilon / math.sqrt(2.0)
    draws = rng.standard_normal((2, psi.basis.dimension))
    z = sigma * (draws[0] + 1j * draws[1])
    return psi.with_amplitudes(psi.amplitudes * (1.0 + z))


class _Observer:
    """Computes the recorded quantities for a state at a given step."""

    def __init__(self, reference: StateVector, projector: InteriorProjector, target: SectorOperator):
        self.reference = reference
        self.projector = projector
        self.target = target

    def record(self, step: int, time: float, psi: StateVector) -> StepRecord:
        overlap = interior_overlap(psi, self.reference, self.projector)
        energy = expectation_in_region(self.target, psi, self.projector)
        return StepRecord(
            step=step,
            time=time,
            overlap=overlap.value,
            norm=psi.norm(),
            interior_weight=self.projector.weight(psi),
            energy=energy.value,
            escaped=overlap.escaped,
        )


def _validate_run(spec: ModelSpec, schedule: Schedule, method: str, dt: float, n_steps: int) -> None:
    if schedule.model != spec:
        raise ConfigurationError("Schedule was built for a different model")
    if method not in METHODS:
        raise ConfigurationError(f"Unknown method '{method}' (choose from {', '.join(METHODS)})")
    if not dt > 0:
        raise ConfigurationError(f"Time step must be positive, got {dt}")
    if int(n_steps) != n_steps or n_steps < 0:
        raise ConfigurationError(f"Number of steps must be a nonnegative integer, got {n_steps}")


def evolve_batch(
    spec: ModelSpec,
    schedule: Schedule,
    method: str,
    dt: float,
    n_steps: int,
    runs: Sequence[Tuple[StateVector, Optional[NoiseModel]]],
    reference: Optional[StateVector] = None,
    time_grid: str = "end",
    keep_states: bool = False,
) -> List[Trajectory]:
    """
    Evolve several (initial state, noise) runs on a shared time grid.

    All members use the same H(t) per step, so the full method decomposes
    each H(t) once for the whole batch, and only when H(t) changed since the
    previous step. Noiseless exchange-symmetric members of an
    exchange-symmetric two-chain model are propagated in the symmetric
    block alone. Every member is numerically identical to a standalone
    `evolve` call.

    Args:
        spec: Model being simulated
        schedule: Time dependence of the Hamiltonian
        method: 'full' or 'trotter'
        dt: Time step
        n_steps: Number of steps N_t
        runs: (initial state, noise model or None) per member
        reference: Exact ground state to measure overlaps against
        time_grid: Evaluate H at the step's 'end' (default) or 'midpoint'
        keep_states: Store a snapshot of every step

    Returns:
        One Trajectory per run, in order
    """
    _validate_run(spec, schedule, method, dt, n_steps)
    if time_grid not in TIME_GRIDS:
        raise ConfigurationError(f"Unknown time grid '{time_grid}'")
    for psi, _ in runs:
        if psi.basis != spec.basis:
            raise ConfigurationError("Initial state does not live on the model's basis")

    projector = build_projector(spec)
    if reference is None:
        reference = ground_state(schedule.hamiltonian).ground
    observer = _Observer(reference, projector, schedule.hamiltonian)

    states = [psi for psi, _ in runs]
    noises = [noise if noise is not None else NoiseModel() for _, noise in runs]
    rngs = [None if n.is_noiseless else n.generator() for n in noises]
    records = [[observer.record(0, 0.0, psi)] for psi in states]
    snapshots = [[psi] for psi in states] if keep_states else None
    exchange = method == "full" and schedule.hamiltonian.exchange_symmetric
    symmetric = [exchange and n.is_noiseless and psi.exchange_symmetric for psi, n in zip(states, noises)]
    decomposed_at = None
    spectra: Dict[bool, Optional[Spectrum]] = {}

    for k in range(1, int(n_steps) + 1):
        t_eval = k * dt if time_grid == "end" else (k - 0.5) * dt
        if method == "full":
            coefficients = schedule.coefficients(t_eval)
            if coefficients != decomposed_at:
                block, whole = _decompose(schedule.hamiltonian_at(t_eval), any(symmetric), not all(symmetric))
                spectra = {True: block, False: whole}
                decomposed_at = coefficients
        else:
            parts = schedule.parts_at(t_eval)
        for j, psi in enumerate(states):
            try:
                if method == "full":
                    eigenvalues, eigenvectors = spectra[symmetric[j]]
                    psi = propagate_spectral(psi, eigenvalues, eigenvectors, dt)
                else:
                    psi = step_trotter(psi, parts, dt)
                if rngs[j] is not None:
                    psi = apply_noise(psi, noises[j], rngs[j])
            except SimulationError as e:
                raise SimulationError(f"Run {j} aborted at step {k} (t={k * dt:g}): {e}") from e
            states[j] = psi
            records[j].append(observer.record(k, k * dt, psi))
            if snapshots is not None:
                snapshots[j].append(psi)

    trajectories = []
    for j, psi in enumerate(states):
        metadata = {
            "model": spec.name,
            "schedule": schedule.describe(),
            "method": method,
            "dt": dt,
            "n_steps": int(n_steps),
            "epsilon": noises[j].epsilon,
            "seed": noises[j].seed,
            "time_grid": time_grid,
        }
        trajectories.append(
            Trajectory(
                records=records[j],
                final_state=psi,
                metadata=metadata,
                snapshots=snapshots[j] if snapshots is not None else None,
            )
        )
    return trajectories


def evolve(
    spec: ModelSpec,
    schedule: Schedule,
    method: str,
    dt: float,
    n_steps: int,
    initial: StateVector,
    noise: Optional[NoiseModel] = None,
    reference: Optional[StateVector] = None,
    time_grid: str = "end",
    keep_states: bool = False,
) -> Trajectory:
    """Evolve one state for n_steps and record overlap, norm and energy at every step."""
    return evolve_batch(
        spec, schedule, method, dt, n_steps, [(initial, noise)],
        reference=reference, time_grid=time_grid, keep_states=keep_states,
    )[0]


def _adiabatic_group(args) -> List[SweepPoint]:
    """
    Advance several sweep points in lockstep.

    With t_final = N * dt, step k of point N evaluates the ramp at k/N, so
    every (N, k) sharing that ratio uses the same Hamiltonian. Ratios are
    visited in ascending order, which keeps each point's steps in sequence.
    """
    spec, dt, sizes, method, noises, reference = args
    ramp = Schedule.adiabatic(spec, t_final=1.0)
    observer = _Observer(reference, build_projector(spec), ramp.hamiltonian)
    start = initial_state(spec, "point")
    states = {n: start for n in sizes}
    rngs = {n: None if noise is None else noise.generator() for n, noise in zip(sizes, noises)}
    noise_of = dict(zip(sizes, noises))
    symmetric = (
        method == "full"
        and all(noise is None for noise in noises)
        and start.exchange_symmetric
        and ramp.hamiltonian.exchange_symmetric
    )

    ratios: Dict[Fraction, List[int]] = {}
    for n in sizes:
        for k in range(1, n + 1):
            ratios.setdefault(Fraction(k, n), []).append(n)

    for ratio in sorted(ratios):
        s = float(ratio)
        if method == "full":
            eigenvalues, eigenvectors = spectral_decomposition(ramp.hamiltonian_at(s), symmetric_only=symmetric)
        else:
            parts = ramp.parts_at(s)
        for n in ratios[ratio]:
            if method == "full":
                psi = propagate_spectral(states[n], eigenvalues, eigenvectors, dt)
            else:
                psi = step_trotter(states[n], parts, dt)
            if rngs[n] is not None:
                psi = apply_noise(psi, noise_of[n], rngs[n])
            states[n] = psi

    points = []
    for n in sizes:
        final = observer.record(n, n * dt, states[n])
        points.append(SweepPoint(n, final.overlap, final))
    return points


def run_adiabatic_sweep(
    spec: ModelSpec,
    dt: float,
    n_steps_max: int,
    method: str = "full",
    noise: Optional[NoiseModel] = None,
    reference: Optional[StateVector] = None,
    workers: int = 1,
) -> List[SweepPoint]:
    """
    Independent adiabatic runs with t_final = N_t * dt for N_t = 1..n_steps_max.

    Each run starts from the point state (ground state of V alone) and
    reports its final interior overlap. Noisy sweeps give every point its
    own child seed. Points whose step ratio k/N_t agrees share one
    decomposition; with several workers the points are dealt round-robin
    into one lockstep group per worker.
    """
    if n_steps_max < 1:
        raise ConfigurationError(f"n_steps_max must be at least 1, got {n_steps_max}")
    if method not in METHODS:
        raise ConfigurationError(f"Unknown method '{method}' (choose from {', '.join(METHODS)})")
    if not dt > 0:
        raise ConfigurationError(f"Time step must be positive, got {dt}")
    if reference is None:
        reference = ground_state(build_hamiltonian(spec)).ground
    noises: List[Optional[NoiseModel]]
    if noise is None or noise.is_noiseless:
        noises = [None] * n_steps_max
    else:
        noises = list(noise.spawn(n_steps_max))

    n_groups = max(1, min(int(workers), n_steps_max))
    jobs = []
    for g in range(n_groups):
        sizes = list(range(g + 1, n_steps_max + 1, n_groups))
        jobs.append((spec, dt, sizes, method, [noises[n - 1] for n in sizes], reference))
    if n_groups > 1:
        with ProcessPoolExecutor(max_workers=n_groups) as pool:
            groups = list(pool.map(_adiabatic_group, jobs))
    else:
        groups = [_adiabatic_group(job) for job in jobs]
    return sorted((p for group in groups for p in group), key=lambda p: p.n_steps)
