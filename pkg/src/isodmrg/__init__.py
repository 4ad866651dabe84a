"""Hybrid quantum-classical DMRG for 2D isometric tensor network states.

The package simulates a sweep optimizer for isometric tensor network states
whose local eigenproblems are solved through measured quantities of a
(simulated) quantum processor: tomography of the effective Hamiltonian at
small bond dimension, or measured Krylov matrix elements at larger ones.
"""

from .errors import ConfigError, GuardError
from .estimators import (
    ApplyResult,
    EffectiveHamiltonian,
    KrylovResult,
    ShotPlan,
    apply_heff,
    exact_effective_hamiltonian,
    krylov_ground,
    tomography_estimate,
)
from .network import IsoTNS, MoveReport
from .pauli import CommutingGroup, PauliString, PauliSum, tfim
from .reference import SpectrumResult, exact_ground
from .runner import RunConfig, run_experiment
from .sweep import SweepConfig, SweepReport, energy_of, optimize, sweep_schedule

__all__ = [
    "ApplyResult",
    "CommutingGroup",
    "ConfigError",
    "EffectiveHamiltonian",
    "GuardError",
    "IsoTNS",
    "KrylovResult",
    "MoveReport",
    "PauliString",
    "PauliSum",
    "RunConfig",
    "ShotPlan",
    "SpectrumResult",
    "SweepConfig",
    "SweepReport",
    "apply_heff",
    "energy_of",
    "exact_effective_hamiltonian",
    "exact_ground",
    "krylov_ground",
    "optimize",
    "sweep_schedule",
    "run_experiment",
    "tfim",
    "tomography_estimate",
]

__version__ = "0.1.0"
