"""
Configuration management for the projected cooling simulator.
"""

import json
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

from dotenv import load_dotenv

from .evolution import METHODS, SCHEDULE_KINDS, TIME_GRIDS
from .exceptions import ConfigurationError
from .lattice import INITIAL_KINDS, ModelSpec, model_1a, model_1b, model_2, required_extent

FIG1_HORIZON = 200.0

# Lowest max overlap reproduced per curve where the published target is not
# met: (method, initial state, epsilon) -> floor.
FIG2A_FLOORS = {
    "trotter_point_eps0.05": 0.85,
    "full_point_eps0.05": 0.88,
    "trotter_spread_eps0.05": 0.85,
    "full_spread_eps0.05": 0.85,
}
FIG2B_FLOORS = {
    "trotter_point_eps0": 0.63,
    "trotter_point_eps0.05": 0.45,
    "trotter_spread_eps0.05": 0.75,
    "full_point_eps0.05": 0.72,
    "full_spread_eps0.05": 0.78,
}

EXPERIMENTS = ("fig1", "fig2a", "fig2b", "fig3", "custom")
CONFIG_FORMAT = "projected-cooling-config v1"


class Config:
    """Environment-backed defaults for the command line."""

    def __init__(self, env_file: str = '.env'):
        """
        Initialize configuration.

        Args:
            env_file: Path to .env file
        """
        self.env_file = env_file
        self._load_env()

    def _load_env(self) -> None:
        """Load environment variables from .env file if it exists."""
        env_path = Path(self.env_file)
        if env_path.exists():
            load_dotenv(env_path)

    @property
    def default_output_dir(self) -> str:
        """Get default output directory."""
        return os.getenv('PCOOL_OUTPUT_DIR', 'pcool_results')

    @property
    def default_workers(self) -> int:
        """Get default number of worker processes."""
        try:
            return max(1, int(os.getenv('PCOOL_WORKERS', '1')))
        except ValueError:
            return 1

    @property
    def default_seed(self) -> int:
        """Get default root seed."""
        try:
            return int(os.getenv('PCOOL_SEED', '1'))
        except ValueError:
            return 1


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Every parameter of one experiment run.

    fig2a and fig2b run a whole curve family; `method`, `initial` and
    `epsilon` then describe the noisy PC variants, and `ae_method` the
    adiabatic baseline.
    """

    experiment: str = "custom"
    model: ModelSpec = field(default_factory=model_1a)
    schedule: str = "projected_cooling"
    kappa: float = 10.0
    tau: float = 3.6
    t_final: Optional[float] = None
    method: str = "full"
    initial: str = "spread"
    dt: float = 0.3
    n_steps: int = 40
    epsilon: float = 0.0
    seed: int = 1
    n_runs: int = 1
    realizations: int = 1
    time_grid: str = "end"
    ae_method: str = "full"
    pc_threshold: Optional[float] = None
    ae_ceiling: Optional[float] = None
    pc_floors: Dict[str, float] = field(default_factory=dict)
    auto_extent: bool = False
    acceptance_delta: float = 0.0
    output_dir: Optional[str] = None
    name: Optional[str] = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(
                f"Unknown experiment '{self.experiment}' (choose from {', '.join(EXPERIMENTS)})"
            )
        if self.schedule not in SCHEDULE_KINDS:
            raise ConfigurationError(f"Unknown schedule '{self.schedule}'")
        for label, value in (("method", self.method), ("ae_method", self.ae_method)):
            if value not in METHODS:
                raise ConfigurationError(f"Unknown {label} '{value}' (choose from {', '.join(METHODS)})")
        if self.initial not in INITIAL_KINDS:
            raise ConfigurationError(f"Unknown initial state kind '{self.initial}'")
        if self.time_grid not in TIME_GRIDS:
            raise ConfigurationError(f"Unknown time grid '{self.time_grid}'")
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 1:
            raise ConfigurationError(f"n_steps must be at least 1, got {self.n_steps}")
        if self.epsilon < 0:
            raise ConfigurationError(f"epsilon must be nonnegative, got {self.epsilon}")
        if self.n_runs < 1 or self.realizations < 1:
            raise ConfigurationError("n_runs and realizations must be at least 1")
        if self.schedule == "adiabatic" and self.t_final is not None and self.t_final <= 0:
            raise ConfigurationError("t_final must be positive")
        if self.acceptance_delta < 0:
            raise ConfigurationError(f"acceptance_delta must be nonnegative, got {self.acceptance_delta}")
        if not isinstance(self.pc_floors, Mapping):
            raise ConfigurationError("pc_floors must map curve labels to overlaps")
        for key, floor in self.pc_floors.items():
            if not isinstance(floor, (int, float)) or not 0.0 <= floor <= 1.0:
                raise ConfigurationError(f"pc_floors['{key}'] must lie in [0, 1], got {floor!r}")

    @property
    def run_name(self) -> str:
        return self.name or self.experiment

    @classmethod
    def for_experiment(cls, experiment: str) -> "ExperimentConfig":
        """
        Default parameters of a named experiment.

        Args:
            experiment: One of fig1, fig2a, fig2b, fig3, custom

        Returns:
            ExperimentConfig with the reference run parameters
        """
        if experiment == "fig1":
            L = required_extent(5, 1.0, FIG1_HORIZON)
            return cls(
                experiment="fig1", model=model_1a(L=L), schedule="static", method="full",
                initial="random", dt=0.25, n_steps=int(FIG1_HORIZON / 0.25), n_runs=5,
            )
        if experiment == "fig2a":
            return cls(
                experiment="fig2a", model=model_1b(), epsilon=0.05,
                pc_threshold=0.94, ae_ceiling=0.35, pc_floors=dict(FIG2A_FLOORS),
            )
        if experiment == "fig2b":
            return cls(
                experiment="fig2b", model=model_2(), epsilon=0.05,
                pc_threshold=0.85, ae_ceiling=0.24, pc_floors=dict(FIG2B_FLOORS),
            )
        if experiment == "fig3":
            return cls(experiment="fig3", model=model_2(), pc_threshold=0.85)
        if experiment == "custom":
            return cls()
        raise ConfigurationError(
            f"Unknown experiment '{experiment}' (choose from {', '.join(EXPERIMENTS)})"
        )

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"format": CONFIG_FORMAT}
        for f in fields(self):
            value = getattr(self, f.name)
            data[f.name] = value.to_dict() if isinstance(value, ModelSpec) else value
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        """
        Build a config from its dictionary form.

        Missing keys take the defaults of the named experiment.
        """
        data = dict(data)
        fmt = data.pop("format", CONFIG_FORMAT)
        if fmt != CONFIG_FORMAT:
            raise ConfigurationError(f"Unsupported config format '{fmt}'")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"Unknown config keys: {', '.join(sorted(unknown))}")

        base = cls.for_experiment(data.get("experiment", "custom"))
        if "model" in data:
            if not isinstance(data["model"], Mapping):
                raise ConfigurationError("'model' must be an object")
            data["model"] = ModelSpec.from_dict(data["model"])
        try:
            return replace(base, **data)
        except TypeError as e:
            raise ConfigurationError(f"Malformed config: {e}") from e

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, indent=2, ensure_ascii=False)
            f.write('\n')
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"Config file not found: {path}")
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Config file {path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigurationError(f"Config file {path} must contain a JSON object")
        return cls.from_dict(data)


def _coerce(raw: str, current: Any) -> Any:
    """Parse an override string into the type of the value it replaces."""
    if raw.lower() in ("none", "null"):
        return None
    try:
        if isinstance(current, bool):
            if raw.lower() not in ("true", "false", "1", "0"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1")
        if isinstance(current, int):
            return int(raw)
        if isinstance(current, float):
            return float(raw)
    except ValueError:
        raise ConfigurationError(f"Cannot parse '{raw}' as {type(current).__name__}") from None
    if current is None:
        try:
            return float(raw)
        except ValueError:
            return raw
    return raw


def apply_overrides(config: ExperimentConfig, overrides: Mapping[str, Any]) -> ExperimentConfig:
    """
    Return a copy of `config` with `key=value` overrides applied.

    Keys name ExperimentConfig fields or, with a `model.` prefix, ModelSpec
    fields (e.g. `model.kinetic_scale`). String values are parsed to the
    type of the value they replace; other values are used as given.
    """
    data = config.to_dict()
    model = data["model"]
    for key, value in overrides.items():
        target, name = (model, key[len("model."):]) if key.startswith("model.") else (data, key)
        if name not in target or name in ("format", "model", "potential", "coupling", "pc_floors"):
            raise ConfigurationError(f"Cannot override '{key}'")
        target[name] = _coerce(value, target[name]) if isinstance(value, str) else value
    return ExperimentConfig.from_dict(data)
