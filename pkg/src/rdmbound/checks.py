"""Self-contained invariant suites: adjoint identities, gradient correctness,
necessity of the positivity conditions on oracle states, and the energy
equivalence chain.  These back the ``check`` command and give a fast
yes/no answer on any installation.

Each suite accepts an optional corruption tag so the harness itself can be
validated: a corrupted run must fail in the named suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fci, projection, representability as rep
from .hamiltonians import hubbard_dimer, random_two_body, reduced_from_integrals
from .pairspace import BasisSpec, inner, min_eigenvalue, norm

CORRUPTION_TAGS = ("adjoint-identity", "gradient", "necessity", "energy-chain")


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str


def _random_symmetric(rng, d):
    m = rng.standard_normal((d, d))
    return 0.5 * (m + m.T)


def adjoint_identity_suite(seed: int, n_pairs: int = 100, corrupt: bool = False) -> SuiteResult:
    """|<L(x), b> - <x, L*(b)>| <= 1e-11 ||x|| ||b|| for the Q and G maps."""
    basis = BasisSpec(6, 3)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_pairs):
        x = _random_symmetric(rng, basis.pair_dim)
        b_q = _random_symmetric(rng, basis.pair_dim)
        b_g = _random_symmetric(rng, basis.tensor_dim)
        adj_q = rep.adjoint_q(basis, b_q)
        adj_g = rep.adjoint_g(basis, b_g)
        if corrupt:
            adj_q = adj_q + 1e-6 * np.eye(basis.pair_dim)
        err_q = abs(inner(basis, rep.apply_q(basis, x), b_q) - inner(basis, x, adj_q))
        err_g = abs(inner(basis, rep.apply_g(basis, x), b_g) - inner(basis, x, adj_g))
        scale_q = norm(basis, x) * norm(basis, b_q)
        scale_g = norm(basis, x) * norm(basis, b_g)
        worst = max(worst, err_q / scale_q, err_g / scale_g)
    passed = worst <= 1e-11
    return SuiteResult("adjoint-identity", passed, f"worst relative defect {worst:.3e} (tol 1e-11)")


def gradient_suite(seed: int, n_points: int = 20, corrupt: bool = False) -> SuiteResult:
    """Analytic factor gradient against central differences of the objective."""
    ints = random_two_body(seed, 6, 3, 1.0)
    k, _ = reduced_from_integrals(ints)
    rng = np.random.default_rng(seed + 1)
    step = 1e-5
    worst = 0.0
    for _ in range(n_points):
        cert = projection.DualCertificate(
            {
                tag: 0.5 * _random_symmetric(rng, rep.block_dim(k.basis, tag))
                for tag in rep.CONDITION_TAGS
            }
        )
        _, grads = projection.objective_and_gradient(k, -0.7, cert)
        for tag in rep.CONDITION_TAGS:
            direction = _random_symmetric(rng, rep.block_dim(k.basis, tag))
            direction /= np.linalg.norm(direction)
            analytic = float(np.tensordot(grads[tag], direction, axes=2))
            if corrupt:
                analytic *= 1.0 + 1e-4
            plus = projection.DualCertificate(dict(cert.factors))
            minus = projection.DualCertificate(dict(cert.factors))
            plus.factors[tag] = cert.factors[tag] + step * direction
            minus.factors[tag] = cert.factors[tag] - step * direction
            j_plus, _ = projection.objective_and_gradient(k, -0.7, plus)
            j_minus, _ = projection.objective_and_gradient(k, -0.7, minus)
            numeric = (j_plus - j_minus) / (2 * step)
            denom = max(abs(numeric), 1e-8)
            worst = max(worst, abs(analytic - numeric) / denom)
    passed = worst <= 1e-6
    return SuiteResult("gradient", passed, f"worst relative gradient defect {worst:.3e} (tol 1e-6)")


def _oracle_corpus(seed: int):
    systems = [hubbard_dimer(1.0, 4.0)]
    specs = [(seed + 10, 4, 2), (seed + 11, 6, 2), (seed + 12, 6, 3), (seed + 13, 8, 4)]
    systems.extend(random_two_body(s, r, n, 1.0) for s, r, n in specs)
    return systems


def necessity_suite(seed: int, corrupt: bool = False) -> SuiteResult:
    """P, Q, G applied to oracle two-body density matrices stay PSD to -1e-8."""
    worst = np.inf
    for ints in _oracle_corpus(seed):
        k, spin = reduced_from_integrals(ints)
        psi = fci.solve_fci(spin)
        gamma = fci.contract_2rdm(psi)
        if corrupt:
            gamma = gamma - 1e-6 * np.eye(gamma.shape[0])
        for tag in rep.CONDITION_TAGS:
            worst = min(worst, min_eigenvalue(rep.apply_condition(spin.basis, tag, gamma)))
    passed = worst >= -1e-8
    return SuiteResult("necessity", passed, f"worst condition eigenvalue {worst:.3e} (tol -1e-8)")


def energy_chain_suite(seed: int, n_states: int = 100, corrupt: bool = False) -> SuiteResult:
    """<Psi|H|Psi> equals inner(K, Gamma_Psi) + e_core for random states."""
    ints = random_two_body(seed + 2, 6, 3, 1.0)
    k, spin = reduced_from_integrals(ints)
    dets = fci.enumerate_basis(spin.basis)
    h = fci.hamiltonian_matrix(dets, spin.h_one, spin.v_anti, spin.e_core)
    rng = np.random.default_rng(seed + 3)
    worst = 0.0
    for _ in range(n_states):
        c = rng.standard_normal(dets.size)
        c /= np.linalg.norm(c)
        e_direct = float(c @ h @ c)
        psi = fci.WaveFunction(dets=dets, coefficients=c, energy=e_direct)
        gamma = fci.contract_2rdm(psi)
        e_lifted = inner(spin.basis, k.k_matrix, gamma) + k.e_core
        if corrupt:
            e_lifted += 1e-8
        worst = max(worst, abs(e_direct - e_lifted) / max(1.0, abs(e_direct)))
    passed = worst <= 1e-10
    return SuiteResult("energy-chain", passed, f"worst relative defect {worst:.3e} (tol 1e-10)")


def run_suites(seed: int = 2024, corrupt: str | None = None) -> list[SuiteResult]:
    """Run all suites; ``corrupt`` names one suite to sabotage (negative control)."""
    if corrupt is not None and corrupt not in CORRUPTION_TAGS:
        raise ValueError(f"unknown corruption tag {corrupt!r}; available: {CORRUPTION_TAGS}")
    return [
        adjoint_identity_suite(seed, corrupt=corrupt == "adjoint-identity"),
        gradient_suite(seed, corrupt=corrupt == "gradient"),
        necessity_suite(seed, corrupt=corrupt == "necessity"),
        energy_chain_suite(seed, corrupt=corrupt == "energy-chain"),
    ]
