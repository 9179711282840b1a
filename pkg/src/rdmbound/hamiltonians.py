"""Physics inputs: FCIDUMP parsing, spin-orbital expansion, reduced two-body
Hamiltonian assembly, and deterministic toy-model generators.

All energies are in Hartree.  Spatial-orbital integrals use chemists'
notation ``(pq|rs)`` with the standard 8-fold permutational symmetry;
spin-orbital two-body tables hold antisymmetrized physicists' elements
``<ij||kl>``.  Spin orbitals are interleaved: spatial orbital ``p`` maps to
spin orbitals ``2p`` (up) and ``2p + 1`` (down).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .pairspace import BasisSpec, embed_one_body, pair_table

_EIGHTFOLD_TOL = 1e-10
_SYMMETRY_CHECK_TOL = 1e-12


class FcidumpParseError(ValueError):
    """Malformed FCIDUMP input (header or token level)."""


class FcidumpDataError(ValueError):
    """Structurally valid FCIDUMP whose values violate integral symmetries."""


@dataclass(frozen=True)
class IntegralSet:
    """Spatial-orbital integrals: one-body table, chemists' two-body table, core energy."""

    n_spatial: int
    n_electrons: int
    h_core: np.ndarray
    two_electron: np.ndarray
    e_core: float

    def __post_init__(self):
        n = self.n_spatial
        if self.h_core.shape != (n, n):
            raise ValueError(f"h_core shape {self.h_core.shape} does not match n_spatial={n}")
        if self.two_electron.shape != (n, n, n, n):
            raise ValueError(f"two_electron shape {self.two_electron.shape} does not match n_spatial={n}")

    @property
    def spin_basis(self) -> BasisSpec:
        return BasisSpec(2 * self.n_spatial, self.n_electrons)

    def validate(self, tol: float = _SYMMETRY_CHECK_TOL) -> None:
        """Check h symmetry and the 8 standard permutations of (pq|rs)."""
        if not np.allclose(self.h_core, self.h_core.T, atol=tol, rtol=0.0):
            raise FcidumpDataError("one-body integrals are not symmetric")
        g = self.two_electron
        for perm in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)):
            if not np.allclose(g, g.transpose(perm), atol=tol, rtol=0.0):
                raise FcidumpDataError("two-body integrals violate 8-fold permutational symmetry")


@dataclass(frozen=True)
class SpinIntegrals:
    """Spin-orbital integrals: block-diagonal one-body matrix and <ij||kl> table."""

    basis: BasisSpec
    h_one: np.ndarray
    v_anti: np.ndarray
    e_core: float


@dataclass(frozen=True)
class ReducedHamiltonian:
    """The two-body operator whose lift reproduces the N-body Hamiltonian.

    ``k_matrix`` excludes ``e_core``; reported energies add it back.
    """

    basis: BasisSpec
    k_matrix: np.ndarray
    e_core: float

    def __post_init__(self):
        d = self.basis.pair_dim
        if self.k_matrix.shape != (d, d):
            raise ValueError(f"k_matrix shape {self.k_matrix.shape} does not match pair dim {d}")
        if not np.all(np.isfinite(self.k_matrix)):
            raise ValueError("k_matrix contains non-finite entries")


_NAMELIST_INT = {"NORB", "NELEC"}


def parse_fcidump(text: str) -> IntegralSet:
    """Parse FCIDUMP-format text into an :class:`IntegralSet`.

    Header: a namelist carrying NORB and NELEC (MS2, ORBSYM, ISYM are
    tolerated and ignored), terminated by ``&END``, ``$END`` or ``/``.
    Body: lines ``value p q r s`` with 1-based indices; ``r = s = 0`` marks
    a one-body element, all-zero indices the core energy, anything else a
    chemists' two-body element completed to its 8 permutation images.
    """
    lines = text.splitlines()
    header_end = None
    header_parts: list[str] = []
    for ln, line in enumerate(lines):
        header_parts.append(line)
        if re.search(r"[&$]END|/", line, flags=re.IGNORECASE):
            header_end = ln
            break
    if header_end is None:
        raise FcidumpParseError("no namelist terminator (&END, $END or /) found")
    header = " ".join(header_parts)

    values: dict[str, int] = {}
    for key in _NAMELIST_INT:
        m = re.search(rf"{key}\s*=\s*(-?\d+)", header, flags=re.IGNORECASE)
        if m:
            values[key] = int(m.group(1))
    if "NORB" not in values:
        raise FcidumpParseError("header does not define NORB")
    if "NELEC" not in values:
        raise FcidumpParseError("header does not define NELEC")
    n = values["NORB"]
    nelec = values["NELEC"]
    if n < 1:
        raise FcidumpParseError(f"NORB={n} is not a positive integer")
    if nelec < 2:
        raise FcidumpParseError(f"NELEC={nelec}: need at least two electrons")

    h = np.zeros((n, n))
    h_seen = np.zeros((n, n), dtype=bool)
    g = np.zeros((n, n, n, n))
    g_seen = np.zeros((n, n, n, n), dtype=bool)
    e_core = 0.0

    for ln in range(header_end + 1, len(lines)):
        tokens = lines[ln].split()
        if not tokens:
            continue
        if len(tokens) != 5:
            raise FcidumpParseError(f"line {ln + 1}: expected 'value p q r s', got {len(tokens)} tokens")
        try:
            val = float(tokens[0].replace("D", "E").replace("d", "e"))
            p, q, r, s = (int(t) for t in tokens[1:])
        except ValueError as exc:
            raise FcidumpParseError(f"line {ln + 1}: non-numeric token ({exc})") from exc
        if max(p, q, r, s) > n or min(p, q, r, s) < 0:
            raise FcidumpParseError(f"line {ln + 1}: orbital index out of range 1..{n}")

        if p == q == r == s == 0:
            e_core = val
        elif r == 0 and s == 0:
            if p == 0 or q == 0:
                raise FcidumpParseError(f"line {ln + 1}: one-body element needs both p and q nonzero")
            i, j = p - 1, q - 1
            for a, b in ((i, j), (j, i)):
                if h_seen[a, b] and abs(h[a, b] - val) > _EIGHTFOLD_TOL:
                    raise FcidumpDataError(
                        f"line {ln + 1}: h({a + 1},{b + 1}) redefined with mismatch "
                        f"{h[a, b]!r} vs {val!r}"
                    )
                h[a, b] = val
                h_seen[a, b] = True
        elif min(p, q, r, s) == 0:
            raise FcidumpParseError(f"line {ln + 1}: partial zero indices are not a valid integral record")
        else:
            i, j, k, l = p - 1, q - 1, r - 1, s - 1
            images = {
                (i, j, k, l), (j, i, k, l), (i, j, l, k), (j, i, l, k),
                (k, l, i, j), (l, k, i, j), (k, l, j, i), (l, k, j, i),
            }
            for idx in images:
                if g_seen[idx] and abs(g[idx] - val) > _EIGHTFOLD_TOL:
                    raise FcidumpDataError(
                        f"line {ln + 1}: ({p}{q}|{r}{s}) conflicts with an earlier "
                        f"symmetry image: {g[idx]!r} vs {val!r}"
                    )
                g[idx] = val
                g_seen[idx] = True

    ints = IntegralSet(n_spatial=n, n_electrons=nelec, h_core=h, two_electron=g, e_core=e_core)
    ints.validate()
    return ints


def load_fcidump(source) -> IntegralSet:
    """Parse an FCIDUMP text stream (any object with ``read()``)."""
    return parse_fcidump(source.read())


def spinify(ints: IntegralSet) -> SpinIntegrals:
    """Expand spatial integrals to interleaved spin orbitals.

    Returns the block-diagonal one-body matrix and the antisymmetrized
    physicists' table ``<ij||kl> = <ij|kl> - <ij|lk>`` with spin-delta
    factors applied.
    """
    n = ints.n_spatial
    r = 2 * n
    sp = np.arange(r) // 2
    sg = np.arange(r) % 2

    same = np.equal.outer(sg, sg).astype(float)
    h_one = ints.h_core[sp[:, None], sp[None, :]] * same
    # <ij|kl> = (P_i P_k | P_j P_l) delta(s_i, s_k) delta(s_j, s_l)
    phys = (
        ints.two_electron[np.ix_(sp, sp, sp, sp)].transpose(0, 2, 1, 3)
        * same[:, None, :, None]
        * same[None, :, None, :]
    )
    v_anti = phys - phys.transpose(0, 1, 3, 2)

    basis = BasisSpec(r, ints.n_electrons)
    return SpinIntegrals(basis=basis, h_one=h_one, v_anti=v_anti, e_core=ints.e_core)


def build_reduced_hamiltonian(
    basis: BasisSpec, h_one: np.ndarray, v_anti: np.ndarray, e_core: float = 0.0
) -> ReducedHamiltonian:
    """Assemble the reduced two-body operator on the pair basis.

    The one-body part is shared between the two slots with weight
    ``1/(2(N-1))``; the interaction enters with weight ``1/2``.  The
    normative check is the lifting identity: for any N-electron state,
    ``inner(K, Gamma) + e_core`` equals the state's Hamiltonian expectation.
    """
    r = basis.n_spin_orbitals
    n = basis.n_electrons
    if n < 2:
        raise ValueError("pair space undefined for fewer than two electrons")
    if h_one.shape != (r, r) or v_anti.shape != (r, r, r, r):
        raise ValueError("integral tables do not match the basis dimension")

    pairs = pair_table(r)
    pi, pj = pairs[:, 0], pairs[:, 1]
    v_pair = v_anti[pi[:, None], pj[:, None], pi[None, :], pj[None, :]]
    k = embed_one_body(r, h_one) / (2.0 * (n - 1)) + 0.5 * v_pair
    k = 0.5 * (k + k.T)
    return ReducedHamiltonian(basis=basis, k_matrix=k, e_core=e_core)


def reduced_from_integrals(ints: IntegralSet) -> tuple[ReducedHamiltonian, SpinIntegrals]:
    spin = spinify(ints)
    return build_reduced_hamiltonian(spin.basis, spin.h_one, spin.v_anti, spin.e_core), spin


def hubbard_dimer(t: float, u: float) -> IntegralSet:
    """Two-site Hubbard model at half filling: hopping -t, on-site repulsion u.

    Two electrons in two spatial sites (four spin orbitals); the exact
    ground energy is ``(u - sqrt(u**2 + 16 t**2)) / 2``.
    """
    if t <= 0:
        raise ValueError("hopping t must be positive")
    if u < 0:
        raise ValueError("on-site repulsion u must be nonnegative")
    h = np.array([[0.0, -t], [-t, 0.0]])
    g = np.zeros((2, 2, 2, 2))
    g[0, 0, 0, 0] = u
    g[1, 1, 1, 1] = u
    return IntegralSet(n_spatial=2, n_electrons=2, h_core=h, two_electron=g, e_core=0.0)


def random_two_body(seed: int, r: int, n: int, scale: float = 1.0) -> IntegralSet:
    """Seeded random integral set over ``r`` spin orbitals (``r`` even) and ``n`` electrons.

    Deterministic across runs and platforms: entries come from
    ``numpy.random.default_rng(seed)`` (the PCG64 generator) and are bounded
    by ``scale`` after symmetrization.
    """
    if r % 2 != 0:
        raise ValueError("r must be even (two spins per spatial orbital)")
    if not (2 <= n <= r):
        raise ValueError(f"need 2 <= N <= r, got N={n}, r={r}")
    n_spatial = r // 2
    rng = np.random.default_rng(seed)
    h = rng.uniform(-scale, scale, size=(n_spatial, n_spatial))
    h = 0.5 * (h + h.T)
    g = rng.uniform(-scale, scale, size=(n_spatial,) * 4)
    g = 0.5 * (g + g.transpose(1, 0, 2, 3))
    g = 0.5 * (g + g.transpose(0, 1, 3, 2))
    g = 0.5 * (g + g.transpose(2, 3, 0, 1))
    return IntegralSet(n_spatial=n_spatial, n_electrons=n, h_core=h, two_electron=g, e_core=0.0)
