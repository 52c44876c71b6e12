"""Biorthogonal DQPT diagnostics for quenched non-Hermitian Kitaev chains."""

from biodqpt.errors import (
    BranchPointError,
    ConfigError,
    DegeneracyError,
    GridTooCoarseError,
    UndefinedPhaseError,
    ZeroNormError,
)
from biodqpt.model import (
    ModelParams,
    bloch_hamiltonian,
    dispersion,
    min_gap,
    phase_boundary_residual,
)
from biodqpt.spectral import (
    BiorthEigenSystem,
    biortho_eigensystem,
    biortho_inner,
    expand,
    transition_probability_static,
)
from biodqpt.dynamics import (
    ModeAmplitudes,
    QuenchSpec,
    evolve,
    loschmidt_rate,
    mode_amplitudes,
    mode_echo,
    self_normal_rate,
    transition_probability,
)
from biodqpt.topology import dtop, dynamical_phase, geometric_phase
from biodqpt.fisher import DqptEvent, FisherBranch, find_events, fisher_time, trace_branches

__version__ = "0.1.0"

__all__ = [
    "BiorthEigenSystem",
    "BranchPointError",
    "ConfigError",
    "DegeneracyError",
    "DqptEvent",
    "FisherBranch",
    "GridTooCoarseError",
    "ModeAmplitudes",
    "ModelParams",
    "QuenchSpec",
    "UndefinedPhaseError",
    "ZeroNormError",
    "biortho_eigensystem",
    "biortho_inner",
    "bloch_hamiltonian",
    "dispersion",
    "dtop",
    "dynamical_phase",
    "evolve",
    "expand",
    "find_events",
    "fisher_time",
    "geometric_phase",
    "loschmidt_rate",
    "min_gap",
    "mode_amplitudes",
    "mode_echo",
    "phase_boundary_residual",
    "self_normal_rate",
    "trace_branches",
    "transition_probability",
    "transition_probability_static",
]
