"""Isospectral flows of discrete strings and Camassa-Holm peakons."""

from .string_model import (
    BoundaryConditions,
    DiscreteString,
    PeakonString,
    FlowSpec,
    RunParams,
    ConfigError,
    ValidationError,
    validate,
    load_config,
    dump_config,
)
from .greens import (
    g0,
    build_kernels,
    iterated_diag,
    epsilon_resolvent,
    rational_b_fields,
)
from .flows import vector_field, matrix_vector_field, hamiltonian, invariants
from .spectral import SpectralData, transfer, nd_functions, weyl, spectrum, evolve_spectral
from .stieltjes import invert, continued_fraction
from .peakons import peakon_kernels, peakon_field, peakon_conserved
from .integrate import FlowState, StepPolicy, Trajectory, IntegrationError, integrate

__version__ = "0.1.0"

__all__ = [
    "BoundaryConditions", "DiscreteString", "PeakonString", "FlowSpec", "RunParams",
    "ConfigError", "ValidationError", "validate", "load_config", "dump_config",
    "g0", "build_kernels", "iterated_diag", "epsilon_resolvent", "rational_b_fields",
    "vector_field", "matrix_vector_field", "hamiltonian", "invariants",
    "SpectralData", "transfer", "nd_functions", "weyl", "spectrum", "evolve_spectral",
    "invert", "continued_fraction",
    "peakon_kernels", "peakon_field", "peakon_conserved",
    "FlowState", "StepPolicy", "Trajectory", "IntegrationError", "integrate",
]
