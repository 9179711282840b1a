"""Projection of the shifted reduced Hamiltonian onto the approximate polar cone.

The projected point is parametrized through squared symmetric factors, one
per representability condition, and found by limited-memory BFGS on

    J(C) = 1/2 || K - mu - sum_l adjoint_l(C_l @ C_l) ||^2 .

Squaring makes every block positive semidefinite by construction but also
makes the origin of each factor a stationary point, so plain descent can
stall on a non-optimal face.  After each converged inner run the true cone
optimality conditions are checked directly (every forward map applied to
the residual must be negative semidefinite); violations are repaired by a
closed-form rank-one injection into the offending factor and the descent
is resumed.  Convergence additionally enforces the projection
orthogonality between residual and projected point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import representability as rep
from .hamiltonians import ReducedHamiltonian
from .lbfgs import minimize_lbfgs
from .pairspace import BasisSpec, inner, norm, pair_identity, psd_part_sqrt, tensor_trace


class ProjectionError(RuntimeError):
    """Numerical failure inside the cone projection."""


class ProjectionNonConvergence(ProjectionError):
    """Iteration budget exhausted; carries the best result found so far."""

    def __init__(self, message: str, best: "ProjectionResult"):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class ProjectionOptions:
    """Solver knobs for one cone projection.

    ``gradient_tol`` is an absolute max-norm tolerance on the factor
    gradient; when None it defaults to ``1e-7 * max(1, ||K||)`` so stopping
    is scale-free.  ``distance_floor`` collapses numerically-zero distances
    to exactly zero, which keeps the outer root find stable left of the
    optimum.
    """

    gradient_tol: float | None = None
    max_iterations: int = 20_000
    memory: int = 3
    sufficient_decrease: float = 1e-4
    curvature: float = 0.9
    distance_floor: float = 1e-9
    ortho_tol: float = 1e-5
    conditions: tuple[str, ...] = rep.CONDITION_TAGS
    max_refinements: int = 10


@dataclass(frozen=True)
class DualCertificate:
    """Symmetric factors whose squares are the positive blocks of a cone point."""

    factors: dict[str, np.ndarray]

    @property
    def c_p(self) -> np.ndarray:
        return self.factors["P"]

    @property
    def c_q(self) -> np.ndarray:
        return self.factors["Q"]

    @property
    def c_g(self) -> np.ndarray:
        return self.factors["G"]

    def blocks(self) -> dict[str, np.ndarray]:
        return {tag: c @ c for tag, c in self.factors.items()}

    def copy(self) -> "DualCertificate":
        return DualCertificate({tag: c.copy() for tag, c in self.factors.items()})


@dataclass(frozen=True)
class ProjectionResult:
    """Projected point, distance, one-sided derivative and diagnostics."""

    mu: float
    a_mu: np.ndarray
    distance: float
    derivative: float
    certificate: DualCertificate
    inner_iterations: int
    gradient_norm: float
    distance_floor: float = 1e-9


def zero_certificate(basis: BasisSpec, conditions=rep.CONDITION_TAGS) -> DualCertificate:
    return DualCertificate(
        {tag: np.zeros((rep.block_dim(basis, tag),) * 2) for tag in conditions}
    )


def initial_certificate(k: ReducedHamiltonian, mu: float, conditions=rep.CONDITION_TAGS) -> DualCertificate:
    """Seed the identity-condition factor with the positive part of K - mu.

    Exact whenever K - mu is already positive semidefinite; the other
    factors start at zero and are populated by optimality-repair steps.
    """
    cert = zero_certificate(k.basis, conditions)
    shifted = k.k_matrix - mu * pair_identity(k.basis)
    if "P" in cert.factors:
        cert.factors["P"][:] = psd_part_sqrt(shifted)
    return cert


def residual(k: ReducedHamiltonian, mu: float, cert: DualCertificate) -> np.ndarray:
    """K - mu minus the lifted certificate blocks."""
    shifted = k.k_matrix - mu * pair_identity(k.basis)
    return shifted - rep.lift_dual(k.basis, cert.blocks())


def objective_and_gradient(
    k: ReducedHamiltonian, mu: float, cert: DualCertificate
) -> tuple[float, dict[str, np.ndarray]]:
    """J = 1/2 ||residual||^2 and its gradient with respect to each factor."""
    basis = k.basis
    kappa = basis.convention_factor
    r = residual(k, mu, cert)
    j = 0.5 * inner(basis, r, r)
    tags = tuple(cert.factors)
    if set(tags) == set(rep.CONDITION_TAGS):
        fwd = rep.apply_pqg(basis, r)
    else:
        fwd = {tag: rep.apply_condition(basis, tag, r) for tag in tags}
    grads = {}
    for tag, c in cert.factors.items():
        lr = fwd[tag]
        grads[tag] = -kappa * (c @ lr + lr @ c)
    return j, grads


def _pack(factors: Mapping[str, np.ndarray], tags) -> np.ndarray:
    return np.concatenate([np.asarray(factors[t]).ravel() for t in tags])


def _unpack(x: np.ndarray, tags, dims) -> dict[str, np.ndarray]:
    out = {}
    pos = 0
    for tag, d in zip(tags, dims):
        out[tag] = x[pos : pos + d * d].reshape(d, d)
        pos += d * d
    return out


def _kkt_violations(basis: BasisSpec, r: np.ndarray, tags) -> dict[str, tuple[float, np.ndarray, float]]:
    """Largest eigenpair of each forward map applied to the residual.

    At the exact projection every map of the residual is negative
    semidefinite; a positive eigenvalue signals descent available along a
    rank-one direction of that block, with predicted objective decrease
    lam^2 / (2 ||adjoint(v v^T)||^2).
    """
    out = {}
    for tag in tags:
        m = rep.apply_condition(basis, tag, r)
        vals, vecs = np.linalg.eigh(m)
        lam = float(vals[-1])
        v = vecs[:, -1]
        w = rep.adjoint_condition(basis, tag, np.outer(v, v))
        out[tag] = (lam, v, float(np.tensordot(w, w, axes=2)))
    return out


def project(
    k: ReducedHamiltonian,
    mu: float,
    warm: DualCertificate | None = None,
    opts: ProjectionOptions | None = None,
) -> ProjectionResult:
    """Project K - mu onto the approximate polar cone.

    Returns the projected point, the distance delta(mu), and the derivative
    d delta / d mu = -trace(residual) / ||residual|| (zero when the distance
    is below the floor).  Raises :class:`ProjectionNonConvergence` with the
    best result attached if the iteration budget runs out.
    """
    opts = opts or ProjectionOptions()
    basis = k.basis
    tags = rep.validate_tags(opts.conditions)
    dims = [rep.block_dim(basis, t) for t in tags]
    kappa = basis.convention_factor

    scale = max(1.0, norm(basis, k.k_matrix))
    base_gtol = opts.gradient_tol if opts.gradient_tol is not None else 1e-7 * scale
    gtol = base_gtol

    fresh = initial_certificate(k, mu, tags)
    if warm is not None:
        if set(warm.factors) != set(tags):
            raise ProjectionError(f"warm certificate blocks {set(warm.factors)} do not match {tags}")
        # keep the warm start only if it beats the fresh seed; the fresh seed
        # is exactly optimal whenever the positive part alone realizes the
        # projection, and the warm certificate never is after a mu shift
        r_warm = residual(k, mu, warm)
        r_fresh = residual(k, mu, fresh)
        cert = warm.copy() if inner(basis, r_warm, r_warm) <= inner(basis, r_fresh, r_fresh) else fresh
    else:
        cert = fresh
    x = _pack(cert.factors, tags)

    def fg(vec: np.ndarray) -> tuple[float, np.ndarray]:
        c = DualCertificate(_unpack(vec, tags, dims))
        j, grads = objective_and_gradient(k, mu, c)
        return j, _pack(grads, tags)

    total_iters = 0
    budget = opts.max_iterations
    converged = False
    grad_norm = np.inf
    for _ in range(opts.max_refinements + 1):
        res = minimize_lbfgs(
            fg,
            x,
            gtol=gtol,
            max_iterations=max(budget - total_iters, 1),
            memory=opts.memory,
            c1=opts.sufficient_decrease,
            c2=opts.curvature,
        )
        x = res.x
        total_iters += res.iterations
        grad_norm = float(np.max(np.abs(res.grad), initial=0.0))
        # a stalled line search at a sub-base tolerance still counts as converged
        converged = res.converged or grad_norm <= base_gtol
        if not converged and total_iters >= budget:
            break

        cert = DualCertificate(_unpack(x, tags, dims))
        r = residual(k, mu, cert)
        j = 0.5 * inner(basis, r, r)

        # true cone optimality: every forward map of the residual must be <= 0
        violations = _kkt_violations(basis, r, tags)
        worthwhile = {}
        for tag, (lam, v, wnorm2) in violations.items():
            if lam <= 0 or wnorm2 <= 0:
                continue
            gain = 0.5 * kappa * lam * lam / wnorm2
            if gain > max(1e-8 * j, 1e-13 * scale * scale):
                worthwhile[tag] = (lam, v, wnorm2)
        if worthwhile:
            factors = {t: c.copy() for t, c in cert.factors.items()}
            for tag, (lam, v, wnorm2) in worthwhile.items():
                t2 = lam / wnorm2
                factors[tag] = psd_part_sqrt(factors[tag] @ factors[tag] + t2 * np.outer(v, v))
            x = _pack(factors, tags)
            continue

        # projection orthogonality between residual and projected point
        a_mu = rep.lift_dual(basis, cert.blocks())
        delta = norm(basis, r)
        na = norm(basis, a_mu)
        if delta > opts.distance_floor and na > 0:
            ortho = abs(inner(basis, r, a_mu)) / (delta * na)
            if ortho > opts.ortho_tol and gtol > 1e-14 * scale:
                gtol = gtol / 10.0
                continue
        break

    cert = DualCertificate(_unpack(x, tags, dims))
    a_mu = rep.lift_dual(basis, cert.blocks())
    r = residual(k, mu, cert)
    delta = norm(basis, r)
    if not np.isfinite(delta):
        raise ProjectionError("projection produced a non-finite distance")
    if delta <= opts.distance_floor:
        delta_out, deriv = 0.0, 0.0
    else:
        delta_out = delta
        deriv = -tensor_trace(basis, r) / delta
    result = ProjectionResult(
        mu=mu,
        a_mu=a_mu,
        distance=delta_out,
        derivative=deriv,
        certificate=cert,
        inner_iterations=total_iters,
        gradient_norm=grad_norm,
        distance_floor=opts.distance_floor,
    )
    if not converged:
        raise ProjectionNonConvergence(
            f"projection at mu={mu:.10g} used {total_iters} iterations without reaching "
            f"gradient tolerance {gtol:.3e} (best gradient max-norm {grad_norm:.3e})",
            result,
        )
    return result
