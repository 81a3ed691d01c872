"""
Projected Cooling - prepare localized ground states by evolving in a large
volume and post-selecting on the interior
"""

__version__ = "0.1.0"
__author__ = "Janos Velenyak"

from .evolution import NoiseModel, Schedule, evolve, run_adiabatic_sweep
from .harness import ExperimentRunner, RunArtifact
from .lattice import ModelSpec, build_hamiltonian, initial_state, preset
from .config import ExperimentConfig

__all__ = [
    "ModelSpec",
    "Schedule",
    "NoiseModel",
    "ExperimentConfig",
    "ExperimentRunner",
    "RunArtifact",
    "build_hamiltonian",
    "initial_state",
    "preset",
    "evolve",
    "run_adiabatic_sweep",
]
