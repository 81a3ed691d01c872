"""
Self-checks behind `pcool check`.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .analysis import boundary_weight, count_localized_states, ground_state, tune_kinetic_scale
from .config import ExperimentConfig
from .evolution import Schedule, evolve, step_full, step_trotter
from .harness import ExperimentRunner
from .lattice import (
    ModelSpec,
    build_hamiltonian,
    build_projector,
    initial_state,
    model_1a,
    model_1b,
    model_2,
    required_extent,
    trotter_parts,
)
from .qubits import compare_sectors, pauli_from_spec

SUITES = ("qubits", "invariants", "oracles", "determinism", "fig1", "fig2a", "fig2b", "fig3")
UNITARITY_TOL = 1e-10
TROTTER_RATIO = 1.8
REFLECTION_TOL = 1e-3


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str = ""

    def describe(self) -> str:
        mark = "✅" if self.passed else "❌"
        return f"{mark} [{self.suite}] {self.name}" + (f": {self.detail}" if self.detail else "")


@dataclass
class CheckReport:
    results: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def failures(self) -> List[CheckResult]:
        return [r for r in self.results if not r.passed]


def check_qubits() -> List[CheckResult]:
    results = []
    for spec in (model_1a(L=3, R=2), model_1b(L=3, R=2), model_2(L=2, R=1)):
        comparison = compare_sectors(spec)
        detail = f"max deviation {comparison.max_deviation:.2e}"
        if spec.chains == 2:
            detail += (f", diagonal shift {comparison.shift:+g}, hopping {comparison.hopping_deviation:.2e}"
                       f", potential {comparison.potential_deviation:.2e}")
        results.append(CheckResult("qubits", f"{spec.name} sector equivalence", comparison.passed(), detail))
        results.append(CheckResult(
            "qubits", f"{spec.name} conserves particle number",
            pauli_from_spec(spec).conserves_particle_number(),
        ))
    return results


def trotter_deviation(spec: ModelSpec, dt: float, t_total: float, kind: str = "spread") -> float:
    """Distance between Trotter and full final states under the static Hamiltonian."""
    n_steps = int(round(t_total / dt))
    schedule = Schedule.static(spec)
    psi = initial_state(spec, kind)
    full = evolve(spec, schedule, "full", dt, n_steps, psi).final_state
    trotter = evolve(spec, schedule, "trotter", dt, n_steps, psi).final_state
    return float(np.linalg.norm(full.amplitudes - trotter.amplitudes))


def check_invariants() -> List[CheckResult]:
    results = []
    spec = model_1b()
    psi = initial_state(spec, "spread")
    H = build_hamiltonian(spec)
    for label, stepped in (
        ("full", step_full(psi, H, 0.3)),
        ("trotter", step_trotter(psi, trotter_parts(spec), 0.3)),
    ):
        drift = abs(stepped.norm() - 1.0)
        results.append(CheckResult("invariants", f"{label} step is unitary", drift <= UNITARITY_TOL,
                                   f"norm drift {drift:.2e}"))

    coarse = trotter_deviation(spec, 0.3, 12.0)
    fine = trotter_deviation(spec, 0.15, 12.0)
    ratio = coarse / fine if fine > 0 else math.inf
    results.append(CheckResult("invariants", "Trotter error shrinks with dt", ratio >= TROTTER_RATIO,
                               f"ratio {ratio:.3f} (dt 0.3 -> 0.15)"))

    # A, D and V = 0 commute, so the product formula is exact.
    free = ModelSpec(chains=1, L=2, R=1)
    A, _, D, V = trotter_parts(free)
    psi = initial_state(free, "gaussian")
    exact = step_full(psi, A + D + V, 0.3)
    split = step_trotter(psi, [A, D, V], 0.3)
    gap = float(np.abs(exact.amplitudes - split.amplitudes).max())
    results.append(CheckResult("invariants", "commuting parts are stepped exactly", gap <= UNITARITY_TOL,
                               f"max deviation {gap:.2e}"))

    L = required_extent(5, 1.0, 50.0)
    sized = model_1a(L=L)
    final = evolve(sized, Schedule.static(sized), "full", 0.25, 200, initial_state(sized, "point")).final_state
    weight = boundary_weight(final)
    results.append(CheckResult("invariants", "sizing rule keeps the outer sites empty", weight <= REFLECTION_TOL,
                               f"L={L}, outer two sites hold {weight:.2e} at t=50"))
    return results


def check_oracles() -> List[CheckResult]:
    results = []
    wide = model_1a(L=200, R=5)
    energy = ground_state(build_hamiltonian(wide)).ground_energy
    target = 1.0 - math.sqrt(2.0)
    results.append(CheckResult("oracles", "Model 1A ground energy", abs(energy - target) <= 1e-4,
                               f"E0={energy:.8f}, expected {target:.8f}"))

    expected = (
        (model_1b(), 4, "Model 1B bound states"),
        (model_2(), 4, "Model 2 localized states"),
    )
    for spec, count, label in expected:
        found = count_localized_states(build_hamiltonian(spec), build_projector(spec)).count
        results.append(CheckResult("oracles", label, found == count, f"found {found}, expected {count}"))

    stiff = model_1b().with_kinetic_scale(10.0)
    found = count_localized_states(build_hamiltonian(stiff), build_projector(stiff)).count
    results.append(CheckResult("oracles", "Model 1B at kinetic scale 10", found <= 1, f"found {found}"))

    scale = tune_kinetic_scale(model_1b())
    results.append(CheckResult("oracles", "Model 1B single localized state within kinetic scale 10",
                               scale is not None and scale <= 10, f"smallest scale {scale}"))
    return results


def check_determinism() -> List[CheckResult]:
    config = ExperimentConfig(model=model_1b(), method="trotter", epsilon=0.05, n_steps=20, seed=7)
    runner = ExperimentRunner()
    first = runner.execute(config)
    second = runner.execute(config)
    same = [a.to_text() for a in first.tables] == [b.to_text() for b in second.tables]
    return [CheckResult("determinism", "noisy run reproduces byte for byte", same)]


def _figure_suite(experiment: str, workers: int) -> Callable[[], List[CheckResult]]:
    def run() -> List[CheckResult]:
        runner = ExperimentRunner(workers=workers)
        config = ExperimentConfig.for_experiment(experiment)
        checks = list(runner.execute(config).checks)
        if experiment in ("fig2a", "fig2b"):
            checks += runner.noise_robustness(config).checks
        return [CheckResult(experiment, c.name, c.passed, c.describe()) for c in checks]
    return run


def check_all(suites: Optional[Sequence[str]] = None, workers: int = 1) -> CheckReport:
    """
    Run the requested suites (all by default) and collect their results.

    Args:
        suites: Names from SUITES
        workers: Process count for the figure suites

    Returns:
        CheckReport; passed is False if any check failed
    """
    registry: Dict[str, Callable[[], List[CheckResult]]] = {
        "qubits": check_qubits,
        "invariants": check_invariants,
        "oracles": check_oracles,
        "determinism": check_determinism,
    }
    for experiment in ("fig1", "fig2a", "fig2b", "fig3"):
        registry[experiment] = _figure_suite(experiment, workers)

    report = CheckReport()
    for suite in suites or SUITES:
        if suite not in registry:
            raise ValueError(f"Unknown check suite '{suite}'")
        print(f"🔎 Running {suite} checks...")
        report.results.extend(registry[suite]())
    return report
