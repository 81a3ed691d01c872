"""
Error categories for the projected cooling simulator.
"""


class ProjectedCoolingError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(ProjectedCoolingError, ValueError):
    """Invalid model, schedule or experiment parameters."""


class SimulationError(ProjectedCoolingError):
    """Numerical failure during construction or time evolution."""


class DegenerateGroundStateError(SimulationError):
    """The two lowest eigenvalues coincide, so the ground state is ambiguous."""


class FitError(ProjectedCoolingError):
    """A decay-exponent fit has nothing (or too little) to work with."""
