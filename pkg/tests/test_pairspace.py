import numpy as np
import pytest

from rdmbound import fci
from rdmbound.hamiltonians import random_two_body, reduced_from_integrals
from rdmbound.pairspace import (
    BasisSpec,
    PairSpaceError,
    embed_one_body,
    from_tensor4,
    inner,
    min_eigenvalue,
    pair_index,
    pair_table,
    psd_part_sqrt,
    tensor_trace,
    to_tensor4,
    wedge_isometry,
)


def random_pair_matrix(basis, seed):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((basis.pair_dim, basis.pair_dim))
    return 0.5 * (m + m.T)


class TestBasisSpec:
    def test_dimensions(self):
        b = BasisSpec(4, 2)
        assert b.pair_dim == 6
        assert b.tensor_dim == 16

    def test_invalid(self):
        with pytest.raises(PairSpaceError):
            BasisSpec(4, 1)
        with pytest.raises(PairSpaceError):
            BasisSpec(3, 4)
        with pytest.raises(PairSpaceError):
            BasisSpec(4, 2, convention_factor=0.0)


class TestPairIndex:
    def test_first_and_last(self):
        assert pair_index(4, 0, 1) == 0
        assert pair_index(4, 2, 3) == 5

    def test_diagonal_invalid(self):
        with pytest.raises(IndexError):
            pair_index(4, 1, 1)
        with pytest.raises(IndexError):
            pair_index(4, 2, 1)
        with pytest.raises(IndexError):
            pair_index(4, 0, 4)

    @pytest.mark.parametrize("r", [2, 4, 7, 10])
    def test_bijection_roundtrip(self, r):
        pairs = pair_table(r)
        seen = set()
        for p, (i, j) in enumerate(pairs):
            assert pair_index(r, int(i), int(j)) == p
            seen.add(p)
        assert seen == set(range(r * (r - 1) // 2))


class TestInner:
    def test_bilinearity_zero(self):
        b = BasisSpec(4, 2)
        a = random_pair_matrix(b, 1)
        assert inner(b, np.zeros_like(a), a) == 0.0

    def test_identity_gives_dimension(self):
        b = BasisSpec(4, 2)
        assert inner(b, np.eye(6), np.eye(6)) == pytest.approx(6.0)
        b4 = BasisSpec(4, 2, convention_factor=4.0)
        assert inner(b4, np.eye(6), np.eye(6)) == pytest.approx(24.0)

    def test_symmetry(self):
        b = BasisSpec(6, 2)
        a, c = random_pair_matrix(b, 2), random_pair_matrix(b, 3)
        assert abs(inner(b, a, c) - inner(b, c, a)) < 1e-14 * abs(inner(b, a, c))

    def test_dimension_mismatch(self):
        b = BasisSpec(4, 2)
        with pytest.raises(PairSpaceError):
            inner(b, np.eye(6), np.eye(5))
        with pytest.raises(PairSpaceError):
            inner(b, np.eye(5), np.eye(5))

    def test_positivity(self):
        b = BasisSpec(6, 2)
        a = random_pair_matrix(b, 4)
        assert inner(b, a, a) > 0
        assert inner(b, np.zeros_like(a), np.zeros_like(a)) == 0.0

    def test_equals_full_tensor_sum(self):
        b = BasisSpec(5, 2)
        a, c = random_pair_matrix(b, 5), random_pair_matrix(b, 6)
        ta, tc = to_tensor4(b, a), to_tensor4(b, c)
        assert inner(b, a, c) == pytest.approx(float(np.sum(ta * tc)), rel=1e-13)


class TestTensorTrace:
    def test_zero(self):
        b = BasisSpec(4, 2)
        assert tensor_trace(b, np.zeros((6, 6))) == 0.0

    def test_linearity(self):
        b = BasisSpec(6, 3)
        a, c = random_pair_matrix(b, 7), random_pair_matrix(b, 8)
        lhs = tensor_trace(b, 2.5 * a - 1.25 * c)
        rhs = 2.5 * tensor_trace(b, a) - 1.25 * tensor_trace(b, c)
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_determinant_rdm_n2(self):
        # two-electron determinant: the contracted operator has trace N(N-1) = 2
        b = BasisSpec(4, 2)
        dets = fci.enumerate_basis(b)
        c = np.zeros(dets.size)
        c[0] = 1.0
        gamma = fci.contract_2rdm(fci.WaveFunction(dets=dets, coefficients=c, energy=0.0))
        assert tensor_trace(b, gamma) == pytest.approx(2.0, abs=1e-12)

    def test_oracle_contraction_n3(self):
        ints = random_two_body(3, 6, 3, 1.0)
        _, spin = reduced_from_integrals(ints)
        psi = fci.solve_fci(spin)
        gamma = fci.contract_2rdm(psi)
        assert tensor_trace(spin.basis, gamma) == pytest.approx(6.0, abs=1e-10)


class TestMinEigenvalue:
    def test_identity(self):
        assert min_eigenvalue(np.eye(5)) == pytest.approx(1.0)

    def test_diagonal(self):
        assert min_eigenvalue(np.diag([-2.0, 0.0, 3.0])) == pytest.approx(-2.0)

    def test_against_characteristic_polynomial(self):
        rng = np.random.default_rng(11)
        a = rng.standard_normal((6, 6))
        a = 0.5 * (a + a.T)
        roots = np.roots(np.poly(a))
        assert min_eigenvalue(a) == pytest.approx(float(np.min(roots.real)), abs=1e-9)

    def test_requires_square(self):
        with pytest.raises(PairSpaceError):
            min_eigenvalue(np.zeros((2, 3)))


class TestTensorConversion:
    @pytest.mark.parametrize("r,n", [(4, 2), (6, 3), (8, 4)])
    def test_roundtrip_identity(self, r, n):
        b = BasisSpec(r, n)
        m = random_pair_matrix(b, r)
        back = from_tensor4(b, to_tensor4(b, m))
        np.testing.assert_allclose(back, m, atol=1e-14)

    def test_tensor_antisymmetry(self):
        b = BasisSpec(5, 2)
        t = to_tensor4(b, random_pair_matrix(b, 9))
        np.testing.assert_allclose(t, -t.transpose(1, 0, 2, 3), atol=1e-14)
        np.testing.assert_allclose(t, -t.transpose(0, 1, 3, 2), atol=1e-14)

    def test_isometry(self):
        s = wedge_isometry(5)
        np.testing.assert_allclose(s.T @ s, np.eye(10), atol=1e-15)


class TestEmbedOneBody:
    def test_matches_elementwise_formula(self):
        r = 5
        rng = np.random.default_rng(13)
        h = rng.standard_normal((r, r))
        h = 0.5 * (h + h.T)
        eye = np.eye(r)
        full = (
            np.einsum("pr,qs->pqrs", h, eye)
            + np.einsum("pr,qs->pqrs", eye, h)
            - np.einsum("ps,qr->pqrs", h, eye)
            - np.einsum("ps,qr->pqrs", eye, h)
        )
        pairs = pair_table(r)
        pi, pj = pairs[:, 0], pairs[:, 1]
        expected = full[pi[:, None], pj[:, None], pi[None, :], pj[None, :]]
        np.testing.assert_allclose(embed_one_body(r, h), expected, atol=1e-14)


def test_psd_part_sqrt():
    rng = np.random.default_rng(17)
    a = rng.standard_normal((7, 7))
    a = 0.5 * (a + a.T)
    c = psd_part_sqrt(a)
    vals = np.linalg.eigvalsh(a)
    pos_norm = np.sqrt(np.sum(np.clip(vals, 0, None) ** 2))
    assert np.linalg.norm(c @ c) == pytest.approx(pos_norm, rel=1e-12)
    assert min_eigenvalue(c) >= -1e-12
