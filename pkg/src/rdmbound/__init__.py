"""Lower bounds to fermionic ground-state energies by dual cone projection.

The reduced two-body Hamiltonian is shifted by a scalar and projected onto
the polar cone of the P, Q, G representability conditions; a damped Newton
iteration on the resulting distance function locates the largest shift
still inside the cone, whose rescaled value is a lower bound to the full
CI ground-state energy in the same basis.  A built-in full CI oracle
verifies every claim at desk scale.
"""

from .hamiltonians import (
    IntegralSet,
    ReducedHamiltonian,
    SpinIntegrals,
    build_reduced_hamiltonian,
    hubbard_dimer,
    load_fcidump,
    parse_fcidump,
    random_two_body,
    reduced_from_integrals,
    spinify,
)
from .newton import NewtonConfig, NewtonTrace, sample_delta_curve, solve_dual
from .pairspace import BasisSpec
from .projection import DualCertificate, ProjectionOptions, ProjectionResult, project

__all__ = [
    "BasisSpec",
    "DualCertificate",
    "IntegralSet",
    "NewtonConfig",
    "NewtonTrace",
    "ProjectionOptions",
    "ProjectionResult",
    "ReducedHamiltonian",
    "SpinIntegrals",
    "build_reduced_hamiltonian",
    "hubbard_dimer",
    "load_fcidump",
    "parse_fcidump",
    "project",
    "random_two_body",
    "reduced_from_integrals",
    "sample_delta_curve",
    "solve_dual",
    "spinify",
]

__version__ = "0.1.0"
