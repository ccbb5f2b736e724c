"""Excitation-boson model of a Rydberg-dressed atom chain: exact
diagonalisation by quasimomentum sector and simulation of twisted-W-state
preparation."""

__version__ = "0.1.0"

from .params import (  # noqa: E402
    DerivedParams, PhysicalParams, alpha_for_lambda, derive, lambda_eb_ss, sweet_spot_detuning, sweet_spot_zeta,
)
from .hamiltonian import HamiltonianOperator, realspace_operator, sector_operator, vertex_ss  # noqa: E402
from .eigensolver import dense_spectrum, lowest_eigenpairs  # noqa: E402
from .scan import ground_state_scan, scan_point  # noqa: E402
from .protocol import DriveSpec, FidelityTrace, resonant_drive, simulate_drive  # noqa: E402

__all__ = [
    "DerivedParams", "PhysicalParams", "alpha_for_lambda", "derive", "lambda_eb_ss", "sweet_spot_detuning",
    "sweet_spot_zeta", "HamiltonianOperator", "realspace_operator", "sector_operator", "vertex_ss",
    "dense_spectrum", "lowest_eigenpairs", "ground_state_scan", "scan_point", "DriveSpec", "FidelityTrace",
    "resonant_drive", "simulate_drive",
]
