"""Full configuration interaction at desk scale.

Determinants are bitmasks over spin orbitals; the Hamiltonian is assembled
from one- and two-electron removal maps, which makes the fermionic sign
bookkeeping identical for matrix elements and for the two-body density
matrix contraction.  Systems with more than ``DENSE_LIMIT`` determinants
are handled matrix-free through a Lanczos-type iterative eigensolver.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .pairspace import BasisSpec, EigensolverError, pair_table

DEFAULT_DETERMINANT_CAP = 50_000
DENSE_LIMIT = 2_000


class BasisTooLargeError(ValueError):
    """Determinant count exceeds the configured cap."""


@dataclass(frozen=True)
class DeterminantBasis:
    """All N-electron determinants over r spin orbitals, in lexicographic order."""

    basis: BasisSpec
    determinants: np.ndarray  # (n_det,) uint64 bitmasks
    occupations: np.ndarray  # (n_det, N) ascending orbital indices

    @property
    def size(self) -> int:
        return len(self.determinants)


@dataclass(frozen=True)
class WaveFunction:
    """Real coefficients over a determinant basis, with the state's energy."""

    dets: DeterminantBasis
    coefficients: np.ndarray
    energy: float


def enumerate_basis(basis: BasisSpec, cap: int = DEFAULT_DETERMINANT_CAP) -> DeterminantBasis:
    r, n = basis.n_spin_orbitals, basis.n_electrons
    n_det = comb(r, n)
    if n_det > cap:
        raise BasisTooLargeError(
            f"{n_det} determinants for r={r}, N={n} exceeds the cap of {cap}; use a smaller system"
        )
    occ = np.array(list(combinations(range(r), n)), dtype=np.int64)
    masks = np.bitwise_or.reduce(np.left_shift(np.uint64(1), occ.astype(np.uint64)), axis=1)
    return DeterminantBasis(basis=basis, determinants=masks, occupations=occ)


def _index_map(dets: np.ndarray) -> dict[int, int]:
    return {int(m): i for i, m in enumerate(dets)}


def single_removal_groups(dets: DeterminantBasis):
    """Group determinants by their (N-1)-electron remainder.

    Returns arrays of shape (n_groups, r - N + 1): source determinant index,
    removed orbital, and the fermionic sign of the removal.
    """
    basis = dets.basis
    r, n = basis.n_spin_orbitals, basis.n_electrons
    if n - 1 == 1:
        sub_index = {1 << p: p for p in range(r)}
    else:
        sub_index = _index_map(enumerate_basis(BasisSpec(r, n - 1), cap=10**9).determinants)

    rows = []
    for d, occ in enumerate(dets.occupations):
        mask = int(dets.determinants[d])
        for t, p in enumerate(occ):
            m = sub_index[mask ^ (1 << int(p))]
            sign = -1.0 if t % 2 else 1.0
            rows.append((m, int(p), d, sign))
    rows.sort(key=lambda x: (x[0], x[1]))
    arr = np.array(rows)
    group = r - (n - 1)
    n_groups = len(rows) // group
    return (
        arr[:, 2].astype(np.int64).reshape(n_groups, group),
        arr[:, 1].astype(np.int64).reshape(n_groups, group),
        arr[:, 3].reshape(n_groups, group),
    )


def pair_removal_groups(dets: DeterminantBasis):
    """Group determinants by their (N-2)-electron remainder after removing an ordered pair.

    The sign is that of removing the smaller orbital first; this is the same
    convention used for the two-body density matrix, so the Hamiltonian and
    the contraction share one sign rule.
    """
    basis = dets.basis
    r, n = basis.n_spin_orbitals, basis.n_electrons
    if n == 2:
        sub_index = {0: 0}
    elif n == 3:
        sub_index = {1 << p: p for p in range(r)}
    else:
        sub = enumerate_basis(BasisSpec(r, n - 2), cap=10**9)
        sub_index = _index_map(sub.determinants)

    pidx = {(i, j): p for p, (i, j) in enumerate(pair_table(r))}
    rows = []
    for d, occ in enumerate(dets.occupations):
        mask = int(dets.determinants[d])
        for ti in range(n):
            for tj in range(ti + 1, n):
                i, j = int(occ[ti]), int(occ[tj])
                m = sub_index[mask ^ (1 << i) ^ (1 << j)]
                sign = -1.0 if (ti + tj - 1) % 2 else 1.0
                rows.append((m, pidx[(i, j)], d, sign))
    rows.sort(key=lambda x: (x[0], x[1]))
    arr = np.array(rows)
    group = comb(r - (n - 2), 2)
    n_groups = len(rows) // group
    return (
        arr[:, 2].astype(np.int64).reshape(n_groups, group),
        arr[:, 1].astype(np.int64).reshape(n_groups, group),
        arr[:, 3].reshape(n_groups, group),
    )


def _pair_matrix(v_anti: np.ndarray, r: int) -> np.ndarray:
    pairs = pair_table(r)
    pi, pj = pairs[:, 0], pairs[:, 1]
    return v_anti[pi[:, None], pj[:, None], pi[None, :], pj[None, :]]


def hamiltonian_matrix(
    dets: DeterminantBasis, h_one: np.ndarray, v_anti: np.ndarray, e_core: float = 0.0
) -> np.ndarray:
    """Dense N-body Hamiltonian over the determinant basis.

    Matrix elements realize the Slater-Condon rules; the assembly goes
    through removal maps so parities are computed once.
    """
    n_det = dets.size
    if n_det > 6_000:
        raise BasisTooLargeError(
            f"dense Hamiltonian for {n_det} determinants would be too large; use hamiltonian_operator"
        )
    h = np.zeros((n_det, n_det))

    d1, p1, s1 = single_removal_groups(dets)
    w1 = s1[:, :, None] * s1[:, None, :] * h_one[p1[:, :, None], p1[:, None, :]]
    np.add.at(h, (d1[:, :, None], d1[:, None, :]), w1)

    d2, p2, s2 = pair_removal_groups(dets)
    vp = _pair_matrix(v_anti, dets.basis.n_spin_orbitals)
    w2 = s2[:, :, None] * s2[:, None, :] * vp[p2[:, :, None], p2[:, None, :]]
    np.add.at(h, (d2[:, :, None], d2[:, None, :]), w2)

    h[np.diag_indices_from(h)] += e_core
    return h


def _removal_csr(groups, block: int, n_det: int) -> sp.csr_matrix:
    d, p, s = groups
    n_groups = d.shape[0]
    m_rows = (np.arange(n_groups)[:, None] * block + p).ravel()
    return sp.csr_matrix(
        (s.ravel(), (m_rows, d.ravel())), shape=(n_groups * block, n_det)
    )


def hamiltonian_operator(
    dets: DeterminantBasis, h_one: np.ndarray, v_anti: np.ndarray, e_core: float = 0.0
) -> spla.LinearOperator:
    """Matrix-free Hamiltonian action for basiss too large to store densely."""
    r = dets.basis.n_spin_orbitals
    n_det = dets.size
    d_a = r * (r - 1) // 2
    a = _removal_csr(single_removal_groups(dets), r, n_det)
    b = _removal_csr(pair_removal_groups(dets), d_a, n_det)
    vp = _pair_matrix(v_anti, r)

    def matvec(c):
        c = np.asarray(c).ravel()
        y1 = (a @ c).reshape(-1, r)
        out = a.T @ (y1 @ h_one.T).ravel()
        y2 = (b @ c).reshape(-1, d_a)
        out += b.T @ (y2 @ vp.T).ravel()
        return out + e_core * c

    return spla.LinearOperator((n_det, n_det), matvec=matvec, dtype=np.float64)


def ground_state(h, dets: DeterminantBasis, tol: float = 1e-10) -> WaveFunction:
    """Lowest eigenpair: dense solve for matrices, Lanczos for linear operators."""
    if isinstance(h, np.ndarray):
        vals, vecs = np.linalg.eigh(h)
        energy, coeff = float(vals[0]), vecs[:, 0]
    else:
        try:
            vals, vecs = spla.eigsh(h, k=1, which="SA", tol=tol, maxiter=5000)
        except spla.ArpackNoConvergence as exc:
            raise EigensolverError(f"Lanczos did not converge: {exc}") from exc
        energy, coeff = float(vals[0]), vecs[:, 0]
    # fix the overall sign for reproducibility
    lead = np.flatnonzero(np.abs(coeff) > 1e-12)
    if len(lead) and coeff[lead[0]] < 0:
        coeff = -coeff
    coeff = coeff / np.linalg.norm(coeff)
    return WaveFunction(dets=dets, coefficients=coeff, energy=energy)


def contract_2rdm(psi: WaveFunction) -> np.ndarray:
    """Two-body density matrix of a pure state, as a pair-basis matrix.

    Normalized so that its trace is N(N-1); positive semidefinite by
    construction (it is twice a Gram matrix of pair-removal amplitudes).
    """
    dets = psi.dets
    r = dets.basis.n_spin_orbitals
    d_a = r * (r - 1) // 2
    b = _removal_csr(pair_removal_groups(dets), d_a, dets.size)
    x = (b @ psi.coefficients).reshape(-1, d_a)
    return 2.0 * (x.T @ x)


def aufbau_diagonal(
    basis: BasisSpec, h_one: np.ndarray, v_anti: np.ndarray, e_core: float = 0.0
) -> float:
    """Diagonal Hamiltonian element of the determinant filling the N smallest h_ii.

    A variational upper bound on the ground energy; used to initialize the
    outer dual iteration.
    """
    occ = np.argsort(np.diag(h_one), kind="stable")[: basis.n_electrons]
    e = float(np.sum(np.diag(h_one)[occ]))
    e += 0.5 * float(np.einsum("abab->", v_anti[np.ix_(occ, occ, occ, occ)]))
    return e + e_core


def solve_fci(
    spin, cap: int = DEFAULT_DETERMINANT_CAP, dense_limit: int = DENSE_LIMIT
) -> WaveFunction:
    """Ground state of a spin-orbital integral set (convenience wrapper)."""
    dets = enumerate_basis(spin.basis, cap=cap)
    if dets.size <= dense_limit:
        h = hamiltonian_matrix(dets, spin.h_one, spin.v_anti, spin.e_core)
    else:
        h = hamiltonian_operator(dets, spin.h_one, spin.v_anti, spin.e_core)
    return ground_state(h, dets)
