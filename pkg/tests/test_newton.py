import numpy as np
import pytest

from rdmbound import fci
from rdmbound.hamiltonians import (
    build_reduced_hamiltonian,
    hubbard_dimer,
    random_two_body,
    reduced_from_integrals,
)
from rdmbound.newton import (
    BracketError,
    NewtonConfig,
    NewtonNonConvergence,
    default_mu0,
    sample_delta_curve,
    solve_dual,
)
from rdmbound.pairspace import BasisSpec, min_eigenvalue
from rdmbound.projection import ProjectionOptions

HUBBARD_EXACT = 2 - 2 * np.sqrt(2)


@pytest.fixture(scope="module")
def hubbard():
    return reduced_from_integrals(hubbard_dimer(1.0, 4.0))


class TestDefaultMu0:
    def test_noninteracting_is_exact(self):
        basis = BasisSpec(6, 3)
        h1 = np.diag([-2.0, -1.0, 0.0, 1.0, 2.0, 3.0])
        v = np.zeros((6,) * 4)
        k = build_reduced_hamiltonian(basis, h1, v)
        diag = fci.aufbau_diagonal(basis, h1, v)
        mu0 = default_mu0(k, diag)
        assert mu0 == pytest.approx(-3.0 / 6.0)  # E = -3 over N(N-1) = 6
        dets = fci.enumerate_basis(basis)
        e0 = fci.ground_state(fci.hamiltonian_matrix(dets, h1, v), dets).energy
        assert mu0 * 6 == pytest.approx(e0)

    def test_upper_bound_for_hubbard(self, hubbard):
        k, spin = hubbard
        diag = fci.aufbau_diagonal(spin.basis, spin.h_one, spin.v_anti, spin.e_core)
        mu0 = default_mu0(k, diag)
        assert mu0 >= HUBBARD_EXACT / 2  # mu* = E / (N(N-1))

    def test_explicit_mu0_overrides(self, hubbard):
        k, spin = hubbard
        trace = solve_dual(k, NewtonConfig(mu0=1.5), spin=spin)
        assert trace.steps[0].mu == 1.5


class TestSolveDual:
    def test_hubbard_band(self, hubbard):
        k, spin = hubbard
        trace = solve_dual(k, NewtonConfig(), spin=spin)
        assert trace.converged
        assert HUBBARD_EXACT - 1e-4 <= trace.energy <= HUBBARD_EXACT + 1e-6

    @pytest.mark.parametrize("seed,r", [(101, 4), (102, 6), (103, 8)])
    def test_n2_exactness(self, seed, r):
        k, spin = reduced_from_integrals(random_two_body(seed, r, 2, 1.0))
        psi = fci.solve_fci(spin)
        trace = solve_dual(k, NewtonConfig(), spin=spin)
        assert abs(trace.energy - psi.energy) <= 1e-6

    def test_lower_bound_n3(self):
        k, spin = reduced_from_integrals(random_two_body(104, 6, 3, 1.0))
        psi = fci.solve_fci(spin)
        trace = solve_dual(k, NewtonConfig(), spin=spin)
        assert trace.energy <= psi.energy + 1e-6

    def test_mu_strictly_decreasing(self, hubbard):
        k, spin = hubbard
        trace = solve_dual(k, NewtonConfig(), spin=spin)
        mus = [s.mu for s in trace.steps]
        assert all(b < a for a, b in zip(mus, mus[1:]))

    def test_delta_positive_on_non_final_steps(self, hubbard):
        k, spin = hubbard
        trace = solve_dual(k, NewtonConfig(), spin=spin)
        for step in trace.steps[:-1]:
            assert step.delta > 0.0

    def test_bracket_error_below_mu_star(self, hubbard):
        k, spin = hubbard
        with pytest.raises(BracketError, match="larger mu0"):
            solve_dual(k, NewtonConfig(mu0=HUBBARD_EXACT / 2 - 0.5), spin=spin)

    def test_outer_limit_raises_with_trace(self):
        # a tiny slope tolerance keeps the stopping test from firing on the
        # still-curved region reached after two heavily damped steps
        k, spin = reduced_from_integrals(random_two_body(105, 6, 3, 1.0))
        cfg = NewtonConfig(damping=0.05, slope_tol=1e-9, max_outer=2, confirm_extrapolation=False)
        with pytest.raises(NewtonNonConvergence) as exc_info:
            solve_dual(k, cfg, spin=spin)
        trace = exc_info.value.trace
        assert not trace.converged
        assert len(trace.steps) >= 2

    def test_requires_mu0_or_spin(self, hubbard):
        k, _ = hubbard
        with pytest.raises(Exception, match="mu0"):
            solve_dual(k, NewtonConfig())

    def test_extrapolation_consistency(self, hubbard):
        from rdmbound.projection import project

        k, spin = hubbard
        trace = solve_dual(k, NewtonConfig(), spin=spin)
        mu_star = trace.mu_star
        above = project(k, mu_star + 1e-6 * abs(mu_star))
        below = project(k, mu_star - 1e-4 * abs(mu_star))
        assert above.distance > 0.0
        assert below.distance <= 1e-9

    def test_scaling_invariance_of_located_zero(self):
        # replacing the inner product by c * (inner product) rescales delta but
        # leaves the located zero unchanged
        ints = random_two_body(106, 6, 3, 1.0)
        from rdmbound.hamiltonians import spinify

        spin1 = spinify(ints)
        k1 = build_reduced_hamiltonian(spin1.basis, spin1.h_one, spin1.v_anti, spin1.e_core)
        tr1 = solve_dual(k1, NewtonConfig(), spin=spin1)

        basis4 = BasisSpec(6, 3, convention_factor=4.0)
        k4 = build_reduced_hamiltonian(basis4, spin1.h_one, spin1.v_anti, spin1.e_core)
        from rdmbound.hamiltonians import SpinIntegrals

        spin4 = SpinIntegrals(basis=basis4, h_one=spin1.h_one, v_anti=spin1.v_anti, e_core=0.0)
        tr4 = solve_dual(k4, NewtonConfig(), spin=spin4)
        assert tr4.mu_star == pytest.approx(tr1.mu_star, abs=5e-7)

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            NewtonConfig(damping=0.0)
        with pytest.raises(ValueError):
            NewtonConfig(damping=1.5)
        with pytest.raises(ValueError):
            NewtonConfig(slope_tol=0.0)


class TestSampleDeltaCurve:
    def test_grid_below_mu_star_all_zero(self, hubbard):
        k, _ = hubbard
        mu_star = min_eigenvalue(k.k_matrix)
        grid = [mu_star - 0.5, mu_star - 0.3, mu_star - 0.1]
        points = sample_delta_curve(k, grid)
        assert [p.mu for p in points] == grid  # input order preserved
        assert all(p.delta == 0.0 for p in points)

    def test_spanning_grid_monotone_and_convex(self, hubbard):
        k, _ = hubbard
        mu_star = min_eigenvalue(k.k_matrix)
        grid = list(np.linspace(mu_star - 0.3, mu_star + 0.7, 21))
        points = sample_delta_curve(k, grid)
        deltas = [p.delta for p in points]
        assert all(b >= a - 1e-8 for a, b in zip(deltas, deltas[1:]))
        for i in range(len(grid) - 2):
            mid = 0.5 * (deltas[i] + deltas[i + 2])
            assert deltas[i + 1] <= mid + 1e-8

    def test_per_point_failure_isolation(self, hubbard):
        k, _ = hubbard
        points = sample_delta_curve(k, [0.5, float("nan"), 1.0])
        assert points[1].error is not None
        assert points[0].error is None and points[2].error is None

    def test_empty_grid(self, hubbard):
        k, _ = hubbard
        assert sample_delta_curve(k, []) == []

    def test_deterministic_against_serial(self, hubbard):
        k, _ = hubbard
        mu_star = min_eigenvalue(k.k_matrix)
        grid = list(np.linspace(mu_star - 0.1, mu_star + 0.4, 8))
        par = sample_delta_curve(k, grid, max_workers=4)
        ser = sample_delta_curve(k, grid, max_workers=1)
        for a, b in zip(par, ser):
            assert a.delta == pytest.approx(b.delta, abs=1e-12)
            assert a.derivative == pytest.approx(b.derivative, abs=1e-12)
