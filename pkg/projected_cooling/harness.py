"""
Experiment runner: reproduces the reference curve families and writes
versioned data tables plus a JSON run manifest.
"""

import csv
import io
import itertools
import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .analysis import (
    OverlapSeries,
    accepted_probability,
    boundary_weight,
    exterior_excitation_probabilities,
    ground_state,
    interior_overlap,
    oscillation_detected,
    smoothed_nondecreasing,
)
from .config import ExperimentConfig, apply_overrides
from .evolution import (
    METHODS,
    NoiseModel,
    Schedule,
    Trajectory,
    evolve,
    evolve_batch,
    run_adiabatic_sweep,
)
from .exceptions import ConfigurationError
from .lattice import (
    ModelSpec,
    build_hamiltonian,
    build_projector,
    initial_state,
    required_extent,
    required_extent_cooling,
)

TABLE_FORMAT = "projected-cooling-table v1"
MANIFEST_FORMAT = "projected-cooling-manifest v1"
CURVE_COLUMNS = ("step", "t", "overlap", "norm", "interior_weight", "energy")
GRID_COLUMNS = ("n1", "n2", "magnitude")
FIG1_FINAL_OVERLAP = 0.99
NOISE_SEEDS = 10


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


@dataclass
class DataTable:
    name: str
    columns: Tuple[str, ...]
    rows: List[Tuple[Any, ...]] = field(default_factory=list)

    def to_text(self) -> str:
        """CSV text with the format tag on the first line."""
        buffer = io.StringIO()
        buffer.write(f"# {TABLE_FORMAT}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_cell(v) for v in row])
        return buffer.getvalue()

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows], dtype=float)


@dataclass(frozen=True)
class ThresholdCheck:
    """
    value >= bound ('min') or value <= bound ('max').

    `target` is the reference value when the asserted bound is a lower
    reproduced floor; missing it is reported but does not fail the check.
    """

    name: str
    value: float
    bound: float
    kind: str = "min"
    target: Optional[float] = None

    def _holds(self, bound: float) -> bool:
        if self.kind == "min":
            return bool(self.value >= bound)
        return bool(self.value <= bound)

    @property
    def passed(self) -> bool:
        return self._holds(self.bound)

    @property
    def meets_target(self) -> bool:
        return self._holds(self.bound if self.target is None else self.target)

    def describe(self) -> str:
        op = ">=" if self.kind == "min" else "<="
        mark = "✅" if self.passed else "❌"
        text = f"{mark} {self.name}: {self.value:.4f} (required {op} {self.bound})"
        if self.passed and not self.meets_target:
            text += f", below target {self.target}"
        return text

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "value": self.value,
            "bound": self.bound,
            "kind": self.kind,
            "target": self.target,
            "passed": self.passed,
            "meets_target": self.meets_target,
        }


def pc_check(config: ExperimentConfig, name: str, curve: str, value: float) -> ThresholdCheck:
    """
    Check a PC overlap against the config's floor for `curve`, if any.

    Args:
        config: Config carrying pc_threshold and pc_floors
        name: Check name
        curve: Floor key, "<method>_<initial>_eps<epsilon>"
        value: Measured max overlap
    """
    floor = config.pc_floors.get(curve)
    if floor is None:
        return ThresholdCheck(name, value, config.pc_threshold)
    return ThresholdCheck(name, value, min(floor, config.pc_threshold), target=config.pc_threshold)


@dataclass
class RunArtifact:
    """Config echo, data tables, summary and acceptance checks of one run."""

    name: str
    config: Dict[str, Any]
    tables: List[DataTable] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    checks: List[ThresholdCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> List[ThresholdCheck]:
        return [c for c in self.checks if not c.passed]

    def table(self, name: str) -> DataTable:
        for table in self.tables:
            if table.name == name:
                return table
        raise KeyError(name)

    def table_filename(self, table: DataTable) -> str:
        return f"{self.name}__{table.name}.csv"

    def manifest(self) -> Dict[str, Any]:
        return {
            "format": MANIFEST_FORMAT,
            "name": self.name,
            "config": self.config,
            "summary": self.summary,
            "checks": [c.to_dict() for c in self.checks],
            "passed": self.passed,
            "tables": [self.table_filename(t) for t in self.tables],
        }

    def write(self, output_dir) -> List[Path]:
        """
        Write every table and the manifest into `output_dir`.

        Args:
            output_dir: Target directory (created if missing)

        Returns:
            Paths of the written files, manifest last
        """
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        written = []
        for table in self.tables:
            path = output_dir / self.table_filename(table)
            _write_atomic(path, table.to_text())
            written.append(path)
        manifest_path = output_dir / f"{self.name}.manifest.json"
        _write_atomic(manifest_path, json.dumps(self.manifest(), indent=2, sort_keys=True) + "\n")
        written.append(manifest_path)
        return written


def _write_atomic(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def curve_table(name: str, trajectory: Trajectory) -> DataTable:
    rows = [
        (r.step, r.time, r.overlap, r.norm, r.interior_weight, r.energy)
        for r in trajectory.records
    ]
    return DataTable(name, CURVE_COLUMNS, rows)


def averaged_table(name: str, trajectories: Sequence[Trajectory]) -> DataTable:
    """Per-step mean of every recorded quantity across noise realizations."""
    first = trajectories[0]
    values = np.mean(
        [[(r.overlap, r.norm, r.interior_weight, r.energy) for r in t.records] for t in trajectories],
        axis=0,
    )
    rows = [(r.step, r.time, *map(float, v)) for r, v in zip(first.records, values)]
    return DataTable(name, CURVE_COLUMNS, rows)


def curve_summary(table: DataTable, threshold: Optional[float] = None) -> Dict[str, Any]:
    overlaps = table.column("overlap")
    steps = table.column("step")
    summary: Dict[str, Any] = {
        "final_overlap": float(overlaps[-1]),
        "max_overlap": float(overlaps.max()),
        "final_energy": float(table.column("energy")[-1]),
    }
    if threshold is not None:
        reached = np.flatnonzero(overlaps >= threshold)
        summary["threshold"] = threshold
        summary["step_reaching_threshold"] = int(steps[reached[0]]) if reached.size else None
    return summary


def grid_table(name: str, grid: np.ndarray, R: int) -> DataTable:
    magnitude = np.abs(grid)
    magnitude = magnitude / np.sqrt(np.sum(magnitude ** 2))
    rows = [
        (n1, n2, float(magnitude[n1 + R, n2 + R]))
        for n1 in range(-R, R + 1)
        for n2 in range(-R, R + 1)
    ]
    return DataTable(name, GRID_COLUMNS, rows)


class ExperimentRunner:
    """Run experiment configs and optionally write their artifacts."""

    def __init__(self, output_dir: Optional[str] = None, verbose: bool = False, workers: int = 1):
        """
        Initialize the runner.

        Args:
            output_dir: Directory for tables and manifests; nothing is written if None
            verbose: Echo run parameters
            workers: Process count for adiabatic sweeps and sweep points
        """
        self.output_dir = Path(output_dir) if output_dir is not None else None
        self.verbose = verbose
        self.workers = max(1, int(workers))

    def _target_dir(self, config: ExperimentConfig) -> Optional[Path]:
        if self.output_dir is not None:
            return self.output_dir
        if config.output_dir is not None:
            return Path(config.output_dir)
        return None

    def execute(self, config: ExperimentConfig) -> RunArtifact:
        """Dispatch on the config's experiment id without writing anything."""
        if config.experiment == "fig1":
            return self.run_fig1(config)
        if config.experiment in ("fig2a", "fig2b"):
            return self.run_fig2(config)
        if config.experiment == "fig3":
            return self.run_fig3(config)
        return self.run_custom(config)

    def run(self, config: ExperimentConfig) -> RunArtifact:
        """Execute a config, report its checks and write the artifact."""
        if self.verbose:
            print(f"⚙️  {config.run_name}: model={config.model.name} L={config.model.L} "
                  f"R={config.model.R} dt={config.dt} n_steps={config.n_steps} "
                  f"epsilon={config.epsilon} seed={config.seed}")
        artifact = self.execute(config)

        for check in artifact.checks:
            print(f"   {check.describe()}")
        target = self._target_dir(config)
        if target is not None:
            for path in artifact.write(target):
                print(f"  ✓ Saved: {path}")
        return artifact

    def run_fig1(self, config: ExperimentConfig) -> RunArtifact:
        """Seeded random interior states under the static Hamiltonian."""
        spec = config.model
        schedule = Schedule(spec, config.schedule, t_final=config.t_final or config.n_steps * config.dt,
                            kappa=config.kappa, tau=config.tau)
        seeds = [config.seed + i for i in range(config.n_runs)]
        print(f"🎲 Evolving {len(seeds)} random initial states ({config.method}, {config.n_steps} steps)")
        runs = [
            (initial_state(spec, config.initial, seed=s),
             NoiseModel(config.epsilon, s) if config.epsilon > 0 else None)
            for s in seeds
        ]
        trajectories = evolve_batch(
            spec, schedule, config.method, config.dt, config.n_steps, runs,
            time_grid=config.time_grid,
        )

        artifact = RunArtifact(config.run_name, config.to_dict())
        for seed, trajectory in zip(seeds, trajectories):
            table = curve_table(f"seed{seed}", trajectory)
            artifact.tables.append(table)
            artifact.summary[table.name] = curve_summary(table, FIG1_FINAL_OVERLAP)
            final = trajectory.records[-1].overlap
            artifact.checks.append(ThresholdCheck(f"seed {seed} final overlap", final, FIG1_FINAL_OVERLAP))
            artifact.checks.append(ThresholdCheck(
                f"seed {seed} smoothed overlap non-decreasing",
                float(smoothed_nondecreasing(trajectory.times, trajectory.overlaps)), 1.0,
            ))
        return artifact

    def _pc_runs(self, config: ExperimentConfig, spec: ModelSpec) -> Tuple[list, list]:
        """(label, initial, noise) runs plus the curve groups they average into."""
        runs = []
        curves = []
        initials = ("point", "spread")
        for initial in initials:
            runs.append((f"{initial}_eps0", initial_state(spec, initial), None))
            curves.append((f"{initial}_eps0", [len(runs) - 1]))
        if config.epsilon > 0:
            children = NoiseModel(config.epsilon, config.seed).spawn(len(initials) * config.realizations)
            for i, initial in enumerate(initials):
                members = []
                for noise in children[i * config.realizations:(i + 1) * config.realizations]:
                    runs.append((f"{initial}_eps{config.epsilon:g}", initial_state(spec, initial), noise))
                    members.append(len(runs) - 1)
                curves.append((f"{initial}_eps{config.epsilon:g}", members))
        return runs, curves

    def run_fig2(self, config: ExperimentConfig) -> RunArtifact:
        """
        AE baseline and the projected cooling curve family.

        PC runs cover both steppers, both initial states, and epsilon in
        {0, config.epsilon}; each curve is checked against pc_threshold at
        some step <= n_steps, or against the lower pc_floors entry for curves
        whose reproduced maximum falls short; the AE sweep is checked
        against ae_ceiling.
        """
        spec = config.model
        reference = ground_state(build_hamiltonian(spec)).ground
        artifact = RunArtifact(config.run_name, config.to_dict())

        print(f"🐢 Adiabatic sweep N_t = 1..{config.n_steps} ({config.ae_method})")
        points = run_adiabatic_sweep(
            spec, config.dt, config.n_steps, method=config.ae_method,
            reference=reference, workers=self.workers,
        )
        ae = DataTable("AE", CURVE_COLUMNS, [
            (p.n_steps, p.n_steps * config.dt, p.overlap, p.record.norm,
             p.record.interior_weight, p.record.energy)
            for p in points
        ])
        artifact.tables.append(ae)
        artifact.summary["AE"] = curve_summary(ae)
        if config.ae_ceiling is not None:
            artifact.checks.append(ThresholdCheck("AE max overlap", artifact.summary["AE"]["max_overlap"],
                                                  config.ae_ceiling, kind="max"))

        schedule = Schedule.projected_cooling(spec, kappa=config.kappa, tau=config.tau)
        runs, curves = self._pc_runs(config, spec)
        for method in METHODS:
            print(f"❄️  Projected cooling ({method}): {len(curves)} curves")
            trajectories = evolve_batch(
                spec, schedule, method, config.dt, config.n_steps,
                [(psi, noise) for _, psi, noise in runs],
                reference=reference, time_grid=config.time_grid,
            )
            for label, members in curves:
                name = f"PC_{method}_{label}"
                if len(members) == 1:
                    table = curve_table(name, trajectories[members[0]])
                else:
                    table = averaged_table(name, [trajectories[j] for j in members])
                artifact.tables.append(table)
                artifact.summary[name] = curve_summary(table, config.pc_threshold)
                if config.pc_threshold is not None:
                    artifact.checks.append(pc_check(
                        config, f"{name} max overlap", f"{method}_{label}", artifact.summary[name]["max_overlap"],
                    ))
        return artifact

    def noise_robustness(self, config: ExperimentConfig, n_seeds: int = NOISE_SEEDS) -> RunArtifact:
        """
        Check every noisy PC realization on its own instead of on average.

        Args:
            config: fig2a or fig2b config with epsilon > 0 and a pc_threshold
            n_seeds: Noise realizations per (method, initial state)

        Returns:
            RunArtifact with one summary table per method and one check per realization
        """
        if config.epsilon <= 0 or config.pc_threshold is None:
            raise ConfigurationError("Noise robustness needs epsilon > 0 and a pc_threshold")
        spec = config.model
        reference = ground_state(build_hamiltonian(spec)).ground
        schedule = Schedule.projected_cooling(spec, kappa=config.kappa, tau=config.tau)
        runs, curves = self._pc_runs(replace(config, realizations=n_seeds), spec)
        noisy = [(label, members) for label, members in curves if not label.endswith("_eps0")]

        artifact = RunArtifact(f"{config.run_name}__noise", config.to_dict())
        for method in METHODS:
            print(f"🎲 {method}: {n_seeds} noise seeds per curve")
            trajectories = evolve_batch(
                spec, schedule, method, config.dt, config.n_steps,
                [(psi, noise) for _, psi, noise in runs],
                reference=reference, time_grid=config.time_grid,
            )
            table = DataTable(f"{method}_max_overlap", ("curve", "realization", "max_overlap"))
            for label, members in noisy:
                for k, j in enumerate(members):
                    best = trajectories[j].max_overlap
                    table.rows.append((label, k, best))
                    artifact.checks.append(pc_check(
                        config, f"PC_{method}_{label} realization {k} max overlap", f"{method}_{label}", best,
                    ))
            artifact.tables.append(table)
        return artifact

    def run_fig3(self, config: ExperimentConfig) -> RunArtifact:
        """Interior amplitude grids: exact ground state, AE and PC after n_steps."""
        spec = config.model
        if spec.chains != 2:
            raise ConfigurationError("Wavefunction grids need the two-chain model")
        projector = build_projector(spec)
        exact = ground_state(build_hamiltonian(spec)).ground

        print(f"🐢 Adiabatic evolution, {config.n_steps} steps")
        ae_schedule = Schedule.adiabatic(spec, t_final=config.n_steps * config.dt)
        ae = evolve(spec, ae_schedule, config.ae_method, config.dt, config.n_steps,
                    initial_state(spec, "point"), reference=exact).final_state

        print(f"❄️  Projected cooling ({config.method}, {config.initial}), {config.n_steps} steps")
        noise = NoiseModel(config.epsilon, config.seed) if config.epsilon > 0 else None
        pc_schedule = Schedule.projected_cooling(spec, kappa=config.kappa, tau=config.tau)
        pc = evolve(spec, pc_schedule, config.method, config.dt, config.n_steps,
                    initial_state(spec, config.initial), noise=noise, reference=exact,
                    time_grid=config.time_grid).final_state

        artifact = RunArtifact(config.run_name, config.to_dict())
        for name, psi in (("exact", exact), ("AE", ae), ("PC", pc)):
            artifact.tables.append(grid_table(name, projector.interior_grid(psi), spec.R))
        artifact.summary = {
            "AE_overlap": interior_overlap(ae, exact, projector).value,
            "PC_overlap": interior_overlap(pc, exact, projector).value,
        }
        if config.pc_threshold is not None:
            artifact.checks.append(ThresholdCheck("PC grid overlap", artifact.summary["PC_overlap"],
                                                  config.pc_threshold))
        return artifact

    def _sized_model(self, config: ExperimentConfig) -> ModelSpec:
        """The config's model, resized by the sizing rule when auto_extent is set."""
        spec = config.model
        if not config.auto_extent:
            return spec
        s = spec.kinetic_scale
        t_total = config.n_steps * config.dt
        if config.schedule == "projected_cooling":
            L = required_extent_cooling(spec.R, config.tau, s * t_total, kappa=config.kappa * s)
        else:
            L = required_extent(spec.R, s, t_total)
        if L != spec.L:
            print(f"📏 Resizing {spec.name}: L {spec.L} -> {L}")
        return spec.with_extent(L)

    def run_custom(self, config: ExperimentConfig) -> RunArtifact:
        """
        One curve per seed for any model, schedule and stepper.

        Each seed's summary also reports the final boundary weight, whether
        the residual overlap still oscillates, the exterior excitation
        distribution and the probability the relaxed acceptance test keeps.
        """
        spec = self._sized_model(config)
        if spec is not config.model:
            config = replace(config, model=spec)
        schedule = Schedule(spec, config.schedule, t_final=config.t_final or config.n_steps * config.dt,
                            kappa=config.kappa, tau=config.tau)
        projector = build_projector(spec)
        seeds = [config.seed + i for i in range(config.n_runs)]
        runs = []
        for seed in seeds:
            psi = initial_state(spec, config.initial, seed=seed if config.initial == "random" else None)
            noise = NoiseModel(config.epsilon, seed) if config.epsilon > 0 else None
            runs.append((psi, noise))
        print(f"🚀 {config.run_name}: {len(runs)} run(s), {schedule.kind}, {config.method}")
        trajectories = evolve_batch(
            spec, schedule, config.method, config.dt, config.n_steps, runs,
            time_grid=config.time_grid,
        )

        artifact = RunArtifact(config.run_name, config.to_dict())
        for seed, trajectory in zip(seeds, trajectories):
            table = curve_table(f"seed{seed}", trajectory)
            artifact.tables.append(table)
            final = trajectory.final_state
            summary = curve_summary(table, config.pc_threshold)
            summary.update(
                final_boundary_weight=boundary_weight(final),
                oscillating=oscillation_detected(OverlapSeries.from_trajectory(trajectory)),
                exterior_probabilities=[float(p) for p in exterior_excitation_probabilities(final, projector)],
                accepted_probability=accepted_probability(final, projector, config.acceptance_delta),
            )
            artifact.summary[table.name] = summary
            if config.pc_threshold is not None:
                artifact.checks.append(ThresholdCheck(
                    f"seed {seed} max overlap", summary["max_overlap"], config.pc_threshold,
                ))
        return artifact

    def sweep(self, config: ExperimentConfig, grid: Mapping[str, Sequence[str]]) -> List[RunArtifact]:
        """
        Run the cartesian product of parameter overrides.

        Args:
            config: Base config
            grid: Override key -> candidate values (see apply_overrides)

        Returns:
            One artifact per grid point, in product order
        """
        if not grid:
            raise ConfigurationError("A sweep needs at least one --param")
        keys = list(grid)
        points = []
        for combo in itertools.product(*(grid[k] for k in keys)):
            overrides = dict(zip(keys, combo))
            suffix = "_".join(f"{k.replace('model.', '')}={v}" for k, v in overrides.items())
            point = apply_overrides(config, {**overrides, "name": f"{config.run_name}__{suffix}"})
            points.append(point)
        print(f"🧭 Sweep over {len(points)} points ({', '.join(keys)})")

        if self.workers > 1:
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                artifacts = list(pool.map(_run_point, points))
        else:
            artifacts = [_run_point(point) for point in points]

        for point, artifact in zip(points, artifacts):
            target = self._target_dir(point)
            if target is not None:
                for path in artifact.write(target):
                    print(f"  ✓ Saved: {path}")
        return artifacts


def _run_point(config: ExperimentConfig) -> RunArtifact:
    return ExperimentRunner(output_dir=None).execute(config)
