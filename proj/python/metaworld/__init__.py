"""Grid-based wavefunction evolution with sampled world trajectories."""

from ._core import (
    BranchesReinterfered,
    ConfigError,
    Error,
    Grid,
    Hamiltonian,
    Inertia,
    InvalidArgument,
    ModelViolation,
    NumericalFailure,
    Wavefunction,
    WorldEnsemble,
    __version__,
    advance_worlds,
    equivariance_distance,
    evolve,
    inner_product,
    run_scenario,
    sample_worlds,
    states,
    step,
    velocity_field,
    velocity_from_phase,
    verify,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
