"""Linear algebra over the one-body, antisymmetric-pair and tensor-pair spaces.

Conventions used throughout the package:

* One-body space: ``r`` real spin orbitals, indices ``0..r-1``.
* Antisymmetric pair space ("A space"): orthonormal wedge basis
  ``w_ij = (e_i (x) e_j - e_j (x) e_i) / sqrt(2)`` for ``i < j``, ordered
  lexicographically.  Operators are stored as real symmetric
  ``d_A x d_A`` matrices on that basis, ``d_A = r(r-1)/2``.
* Full tensor pair space ("G space"): product basis ``e_i (x) e_j`` with
  row index ``i*r + j``; operators are real symmetric ``d_G x d_G``
  matrices, ``d_G = r**2``.
* Tensor components of an A-space operator are recovered through the
  isometry ``S`` whose columns are the wedge vectors: ``T = S M S^T``.
  With this normalization the full tensor sums (trace, Frobenius pairing
  over all index orders) coincide with the plain matrix trace and matrix
  Frobenius product, so the default convention factor is 1.  The factor
  is kept configurable on :class:`BasisSpec` so that scale invariance of
  downstream results can be exercised directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class PairSpaceError(ValueError):
    """Invalid basis data or mismatched operator dimensions."""


class EigensolverError(RuntimeError):
    """The symmetric eigensolver failed to converge."""


@dataclass(frozen=True)
class BasisSpec:
    """Dimensions of the working spaces: r spin orbitals, N electrons."""

    n_spin_orbitals: int
    n_electrons: int
    convention_factor: float = 1.0

    def __post_init__(self):
        r, n = self.n_spin_orbitals, self.n_electrons
        if n < 2:
            raise PairSpaceError(f"need at least 2 electrons, got N={n}")
        if r < n:
            raise PairSpaceError(f"need r >= N, got r={r}, N={n}")
        if self.convention_factor <= 0:
            raise PairSpaceError("convention factor must be positive")

    @property
    def pair_dim(self) -> int:
        r = self.n_spin_orbitals
        return r * (r - 1) // 2

    @property
    def tensor_dim(self) -> int:
        return self.n_spin_orbitals**2


def pair_index(r: int, i: int, j: int) -> int:
    """Position of the ordered pair (i, j), i < j, in the lexicographic basis."""
    if not (0 <= i < j < r):
        raise IndexError(f"invalid orbital pair ({i}, {j}) for r={r}")
    # pairs (0,1)..(0,r-1), (1,2)..(1,r-1), ...
    return i * (2 * r - i - 1) // 2 + (j - i - 1)


@lru_cache(maxsize=None)
def pair_table(r: int) -> np.ndarray:
    """All ordered pairs (i, j) with i < j, row p = pair_index(r, i, j)."""
    pairs = [(i, j) for i in range(r) for j in range(i + 1, r)]
    table = np.array(pairs, dtype=np.int64)
    table.setflags(write=False)
    return table


@lru_cache(maxsize=None)
def _embed_tables(r: int):
    pairs = pair_table(r)
    i, j = pairs[:, 0], pairs[:, 1]
    ic, jc = i[:, None], j[:, None]
    ir, jr = i[None, :], j[None, :]
    eq_jj = (jc == jr).astype(float)
    eq_ii = (ic == ir).astype(float)
    eq_ji = (jc == ir).astype(float)
    eq_ij = (ic == jr).astype(float)
    return (ic, ir), (jc, jr), (ic, jr), (jc, ir), eq_ii, eq_jj, eq_ij, eq_ji


def embed_one_body(r: int, h: np.ndarray) -> np.ndarray:
    """Pair-basis matrix of the symmetrized two-slot action of a one-body operator.

    Entry ((p, q), (r, s)) is ``h_pr d_qs + d_pr h_qs - h_ps d_qr - d_ps h_qr``;
    this is the pair representation of ``h (x) 1 + 1 (x) h`` restricted to
    the antisymmetric subspace.
    """
    ii, jj, ij, ji, eq_ii, eq_jj, eq_ij, eq_ji = _embed_tables(r)
    return h[ii] * eq_jj + h[jj] * eq_ii - h[ij] * eq_ji - h[ji] * eq_ij


@lru_cache(maxsize=None)
def pair_index_table(r: int):
    """Symmetric pair-index lookup PT[a, b] and antisymmetric sign table SG[a, b].

    Tensor components of a pair matrix M are
    ``T[a, b, c, d] = SG[a, b] SG[c, d] M[PT[a, b], PT[c, d]] / 2``.
    """
    pt = np.zeros((r, r), dtype=np.int64)
    sg = np.zeros((r, r))
    for p, (a, b) in enumerate(pair_table(r)):
        pt[a, b] = pt[b, a] = p
        sg[a, b] = 1.0
        sg[b, a] = -1.0
    pt.setflags(write=False)
    sg.setflags(write=False)
    return pt, sg


@lru_cache(maxsize=None)
def wedge_isometry(r: int) -> np.ndarray:
    """Matrix S of shape (r*r, d_A) whose columns are the wedge basis vectors.

    S^T S = Id on the pair space; S M S^T is the tensor representation of a
    pair matrix M, and S^T X S projects any tensor-space matrix X back onto
    the antisymmetric pair space.
    """
    pairs = pair_table(r)
    d_a = len(pairs)
    s = np.zeros((r * r, d_a))
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for p, (i, j) in enumerate(pairs):
        s[i * r + j, p] = inv_sqrt2
        s[j * r + i, p] = -inv_sqrt2
    s.setflags(write=False)
    return s


def _require_square(a: np.ndarray, dim: int, what: str) -> None:
    if a.shape != (dim, dim):
        raise PairSpaceError(f"{what}: expected shape {(dim, dim)}, got {a.shape}")


def inner(basis: BasisSpec, a: np.ndarray, b: np.ndarray) -> float:
    """Inner product of two operators living on the same space.

    Equals the full tensor-component sum times the basis convention factor;
    for the default factor 1 this is the plain Frobenius product of the
    stored matrices.
    """
    if a.shape != b.shape:
        raise PairSpaceError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if a.shape not in ((basis.pair_dim, basis.pair_dim), (basis.tensor_dim, basis.tensor_dim)):
        raise PairSpaceError(f"operator shape {a.shape} does not match basis r={basis.n_spin_orbitals}")
    return basis.convention_factor * float(np.tensordot(a, b, axes=2))


def norm(basis: BasisSpec, a: np.ndarray) -> float:
    return float(np.sqrt(max(inner(basis, a, a), 0.0)))


def tensor_trace(basis: BasisSpec, a: np.ndarray) -> float:
    """Trace in the full-tensor convention (convention factor times matrix trace)."""
    return basis.convention_factor * float(np.trace(a))


def pair_identity(basis: BasisSpec) -> np.ndarray:
    """Identity on the antisymmetric pair space (the embedding of a scalar)."""
    return np.eye(basis.pair_dim)


def to_tensor4(basis: BasisSpec, m: np.ndarray) -> np.ndarray:
    """Tensor components T[i, j, k, l] of a pair matrix, antisymmetric in (i, j) and (k, l)."""
    r = basis.n_spin_orbitals
    _require_square(m, basis.pair_dim, "pair matrix")
    s = wedge_isometry(r)
    return (s @ m @ s.T).reshape(r, r, r, r)


def from_tensor4(basis: BasisSpec, t: np.ndarray) -> np.ndarray:
    """Pair matrix of an antisymmetric 4-index tensor (inverse of :func:`to_tensor4`).

    Applied to a non-antisymmetric tensor this also projects it onto the
    antisymmetric pair space.
    """
    r = basis.n_spin_orbitals
    if t.shape != (r, r, r, r):
        raise PairSpaceError(f"tensor shape {t.shape} does not match r={r}")
    s = wedge_isometry(r)
    return s.T @ t.reshape(r * r, r * r) @ s


def min_eigenvalue(a: np.ndarray, tol: float = 1e-10) -> float:
    """Smallest eigenvalue of a symmetric matrix (dense solve, tolerance `tol`)."""
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise PairSpaceError(f"expected a square matrix, got shape {a.shape}")
    try:
        vals = np.linalg.eigvalsh(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails
        raise EigensolverError(f"eigensolver failed on {a.shape[0]}x{a.shape[0]} matrix: {exc}") from exc
    return float(vals[0])


def psd_part_sqrt(a: np.ndarray) -> np.ndarray:
    """Symmetric square root of the positive-semidefinite part of `a`."""
    vals, vecs = np.linalg.eigh(a)
    pos = np.sqrt(np.clip(vals, 0.0, None))
    return (vecs * pos) @ vecs.T


def symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)
