"""Spectrum, eigenstates and Berry phase of a driven two-spin XXZ model
with Dzyaloshinskii-Moriya coupling."""

__version__ = "0.1.0"

from .berry import (BerryResult, berry_adiabatic, berry_closed, berry_wilson,
                    berry_wilson_levels, phase_distance, wilson_phase)
from .eigenstates import (EigenState, closed_form_state, gauge_fix,
                          nullspace_state, state_overlap)
from .model import ModelParams, build_hamiltonian, field_vector
from .spectrum import (Spectrum, critical_dm, eigenvalues, jacobi_eigensystem,
                       secular_coefficients, solve_secular,
                       zero_field_eigenvalues)

__all__ = [
    "BerryResult", "EigenState", "ModelParams", "Spectrum",
    "berry_adiabatic", "berry_closed", "berry_wilson", "berry_wilson_levels", "build_hamiltonian",
    "closed_form_state", "critical_dm", "eigenvalues", "field_vector",
    "gauge_fix", "jacobi_eigensystem", "nullspace_state", "phase_distance",
    "secular_coefficients", "solve_secular", "state_overlap", "wilson_phase",
    "zero_field_eigenvalues",
]
