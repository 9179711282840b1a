"""Linear representability maps (P, Q, G), their adjoints, and the dual-cone lift.

Forward maps act on two-body operators given as pair-basis matrices; Q
returns a pair-basis matrix, G a matrix on the full tensor-pair space.
The trace appearing in Q is divided by N(N-1) so every map is homogeneous.

The kernels below work directly on the stored matrix representations
through cached index tables (no four-index intermediates); the defining
tensor-component formulas are exercised verbatim in the test suite as an
independent oracle.  Adjoints were derived by index manipulation and are
pinned by the identity ``<L(x), b> = <x, L*(b)>``, checked on random
inputs; the Q map is self-adjoint in these inner products.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np

from .pairspace import (
    BasisSpec,
    embed_one_body,
    pair_index_table,
    pair_table,
    symmetrize,
)

CONDITION_TAGS = ("P", "Q", "G")


@lru_cache(maxsize=None)
def _gamma_tables(r: int):
    # gather tables for the pair-diagonal contraction gamma[a,b] ~ sum_m T[a,m,b,m]
    pt, sg = pair_index_table(r)
    a = np.arange(r)
    pa = pt[a[:, None, None], a[None, None, :]]  # PT[a, m] broadcast over b
    pb = pt[a[None, :, None], a[None, None, :]]  # PT[b, m]
    ss = sg[a[:, None, None], a[None, None, :]] * sg[a[None, :, None], a[None, None, :]]
    pa = np.broadcast_to(pa, (r, r, r)).copy()
    pb = np.broadcast_to(pb, (r, r, r)).copy()
    for arr in (pa, pb, ss):
        arr.setflags(write=False)
    return pa, pb, ss


@lru_cache(maxsize=None)
def _g_forward_tables(r: int):
    # entry (x=(i,j), y=(k,l)) of the exchange gather: T[i, l, k, j]
    pt, sg = pair_index_table(r)
    ii = np.arange(r * r) // r
    jj = np.arange(r * r) % r
    pa = pt[ii[:, None], jj[None, :]]
    pb = pt[ii[None, :], jj[:, None]]
    ss = sg[ii[:, None], jj[None, :]] * sg[ii[None, :], jj[:, None]]
    for arr in (pa, pb, ss):
        arr.setflags(write=False)
    return pa, pb, ss


@lru_cache(maxsize=None)
def _g_adjoint_tables(r: int):
    """Flat gathers of B4[a,b,c,d] entries entering the pair-space adjoint.

    At row pair p = (i, j) and column pair q = (k, l) the four patterns are
    B4[i,l,k,j], B4[j,l,k,i], B4[i,k,l,j], B4[j,k,l,i]; the first and last
    tensor slots come from p, the middle two from q.
    """
    pairs = pair_table(r)
    i, j = pairs[:, 0], pairs[:, 1]
    r2, r3 = r * r, r**3

    def flat(a_p, d_p, b_q, c_q):
        idx = (a_p[:, None] * r3 + d_p[:, None]) + (b_q[None, :] * r2 + c_q[None, :] * r)
        idx.setflags(write=False)
        return idx

    f1 = flat(i, j, j, i)  # B4[i, l, k, j]
    f2 = flat(j, i, j, i)  # B4[j, l, k, i]
    f3 = flat(i, j, i, j)  # B4[i, k, l, j]
    f4 = flat(j, i, i, j)  # B4[j, k, l, i]
    return f1, f2, f3, f4


def _gamma_from_pair(basis: BasisSpec, m: np.ndarray) -> np.ndarray:
    pa, pb, ss = _gamma_tables(basis.n_spin_orbitals)
    return (m[pa, pb] * ss).sum(axis=-1) / (2.0 * (basis.n_electrons - 1))


def contract_to_1rdm(basis: BasisSpec, gamma2: np.ndarray) -> np.ndarray:
    """One-body density matrix: pair-index contraction divided by N - 1."""
    return _gamma_from_pair(basis, gamma2)


def apply_p(basis: BasisSpec, gamma2: np.ndarray) -> np.ndarray:
    return gamma2


def _q_from_parts(basis: BasisSpec, m: np.ndarray, gamma1: np.ndarray) -> np.ndarray:
    n = basis.n_electrons
    out = m - 2.0 * embed_one_body(basis.n_spin_orbitals, gamma1)
    coef = 2.0 * float(np.trace(m)) / (n * (n - 1))
    out[np.diag_indices_from(out)] += coef
    return symmetrize(out)


def apply_q(basis: BasisSpec, gamma2: np.ndarray) -> np.ndarray:
    """Particle-hole complement map; positive on every representable operator."""
    return _q_from_parts(basis, gamma2, _gamma_from_pair(basis, gamma2))


def _g_from_parts(basis: BasisSpec, m: np.ndarray, gamma1: np.ndarray) -> np.ndarray:
    r = basis.n_spin_orbitals
    pa, pb, ss = _g_forward_tables(r)
    out = -0.5 * (ss * m[pa, pb])
    view = out.reshape(r, r, r, r)
    idx = np.arange(r)
    view[idx, :, idx, :] += gamma1  # delta_ik gamma_jl block diagonal
    return symmetrize(out)


def apply_g(basis: BasisSpec, gamma2: np.ndarray) -> np.ndarray:
    """Particle-hole mixed map into the full tensor-pair space."""
    return _g_from_parts(basis, gamma2, _gamma_from_pair(basis, gamma2))


def apply_pqg(basis: BasisSpec, gamma2: np.ndarray) -> dict[str, np.ndarray]:
    """All three forward maps with the one-body contraction shared (hot path)."""
    gamma1 = _gamma_from_pair(basis, gamma2)
    return {
        "P": gamma2,
        "Q": _q_from_parts(basis, gamma2, gamma1),
        "G": _g_from_parts(basis, gamma2, gamma1),
    }


def adjoint_p(basis: BasisSpec, b: np.ndarray) -> np.ndarray:
    return b


def adjoint_q(basis: BasisSpec, b: np.ndarray) -> np.ndarray:
    """Adjoint of the Q map (the map is self-adjoint)."""
    return apply_q(basis, b)


def adjoint_g(basis: BasisSpec, b: np.ndarray) -> np.ndarray:
    """Adjoint of the G map, from the tensor-pair space back to the pair space."""
    r = basis.n_spin_orbitals
    n = basis.n_electrons
    b = np.asarray(b)
    one_body = np.trace(b.reshape(r, r, r, r), axis1=0, axis2=2)
    flat = b.ravel()
    f1, f2, f3, f4 = _g_adjoint_tables(r)
    exchange = -flat[f1] + flat[f2] + flat[f3] - flat[f4]
    out = embed_one_body(r, symmetrize(one_body)) / (2.0 * (n - 1)) + 0.5 * exchange
    return symmetrize(out)


_APPLY = {"P": apply_p, "Q": apply_q, "G": apply_g}
_ADJOINT = {"P": adjoint_p, "Q": adjoint_q, "G": adjoint_g}


def block_dim(basis: BasisSpec, tag: str) -> int:
    if tag in ("P", "Q"):
        return basis.pair_dim
    if tag == "G":
        return basis.tensor_dim
    raise KeyError(f"unknown condition tag {tag!r}")


def apply_condition(basis: BasisSpec, tag: str, gamma2: np.ndarray) -> np.ndarray:
    return _APPLY[tag](basis, gamma2)


def adjoint_condition(basis: BasisSpec, tag: str, b: np.ndarray) -> np.ndarray:
    return _ADJOINT[tag](basis, b)


def validate_tags(tags: Iterable[str]) -> tuple[str, ...]:
    tags = tuple(tags)
    unknown = [t for t in tags if t not in CONDITION_TAGS]
    if unknown:
        raise KeyError(f"unsupported condition tags {unknown}; available: {CONDITION_TAGS}")
    if not tags:
        raise ValueError("need at least one representability condition")
    return tags


@dataclass(frozen=True)
class DualBlocks:
    """Positive blocks generating a point of the polar cone through the adjoint lift."""

    b_p: np.ndarray
    b_q: np.ndarray
    b_g: np.ndarray

    def items(self):
        return (("P", self.b_p), ("Q", self.b_q), ("G", self.b_g))


def lift_dual(basis: BasisSpec, blocks) -> np.ndarray:
    """Sum of adjoint-lifted blocks: the generic element of the approximate polar cone."""
    items = blocks.items() if hasattr(blocks, "items") else blocks
    out = np.zeros((basis.pair_dim, basis.pair_dim))
    for tag, b in items:
        out += adjoint_condition(basis, tag, b)
    return out
