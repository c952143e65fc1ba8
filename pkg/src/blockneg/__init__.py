"""Negativity between separated blocks of critical XY spin chains, from DMRG."""

__version__ = "0.1.0"

from .model import ModelParams, critical, build_dense_hamiltonian, bond_term
from .dmrg import DmrgConfig, run_dmrg, schmidt_entropy
from .blocks import extract_rho_se, mu_series, unnest_step
from .entanglement import DensityOperator, negativity, partial_transpose, von_neumann_entropy
from .analysis import ScalingRecord, FitResult, fit_ansatz, mu_sweep, lambda_scan, universality_compare

__all__ = [
    "ModelParams",
    "critical",
    "build_dense_hamiltonian",
    "bond_term",
    "DmrgConfig",
    "run_dmrg",
    "schmidt_entropy",
    "extract_rho_se",
    "mu_series",
    "unnest_step",
    "DensityOperator",
    "negativity",
    "partial_transpose",
    "von_neumann_entropy",
    "ScalingRecord",
    "FitResult",
    "fit_ansatz",
    "mu_sweep",
    "lambda_scan",
    "universality_compare",
]
