"""Exact diagonalization of the two-qubit Rabi model with spin-spin coupling."""

from .analytic import Branch, critical_couplings, ground_energy, rescaled_energies, squeeze_param
from .eigen import EigenResult, converge_cutoff, lowest_eigenpairs
from .fock import FockCutoff, OperatorMatrix, StateVector, ladder_operators, squeeze_operator, squeezed_vacuum
from .model import (
    ModelParams,
    PhaseLabel,
    SectorLabel,
    build_full_hamiltonian,
    build_quadratic_effective,
    build_sector_hamiltonian,
    derive_sector_params,
    parity_permutation,
)
from .observables import concurrence, magnetization, mean_photon, partial_trace_boson, state_fidelity

__version__ = "0.1.0"
