"""Outer dual iteration: damped Newton on the cone distance delta(mu).

delta is zero left of the optimal mu and convex, increasing to the right,
so a Newton iteration started above the optimum descends monotonically.
Iterations stop once the secant slope agrees with the tangent slope to a
relative tolerance, at which point the root is extrapolated along the
tangent; an optional confirmation probe re-checks that the extrapolated
value sits at the edge of the zero region and resumes the iteration if
the linearity assumption was premature.  The delta curve itself can be
sampled over a grid, one independent projection per point.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fci import aufbau_diagonal
from .hamiltonians import ReducedHamiltonian, SpinIntegrals
from .projection import (
    DualCertificate,
    ProjectionNonConvergence,
    ProjectionOptions,
    ProjectionResult,
    project,
)

THREADS_ENV_VAR = "RDMBOUND_THREADS"


class NewtonError(RuntimeError):
    """Failure of the outer dual iteration."""


class BracketError(NewtonError):
    """The initial mu is already inside the cone (at or below the optimum)."""


class NewtonNonConvergence(NewtonError):
    """Outer iteration limit reached; carries the trace collected so far."""

    def __init__(self, message: str, trace: "NewtonTrace"):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class NewtonConfig:
    """Outer-loop settings; projection options are embedded."""

    mu0: float | None = None
    damping: float = 0.8
    slope_tol: float = 0.05
    max_outer: int = 50
    confirm_extrapolation: bool = True
    projection: ProjectionOptions = field(default_factory=ProjectionOptions)

    def __post_init__(self):
        if not (0.0 < self.damping <= 1.0):
            raise ValueError("damping fraction must lie in (0, 1]")
        if self.slope_tol <= 0:
            raise ValueError("slope tolerance must be positive")


@dataclass(frozen=True)
class NewtonStep:
    """One recorded outer evaluation of delta."""

    mu: float
    delta: float
    derivative: float
    slope: float | None
    inner_iterations: int
    kind: str  # "init" | "newton" | "probe"


@dataclass(frozen=True)
class NewtonTrace:
    steps: list[NewtonStep]
    mu_star: float
    energy: float
    certificate: DualCertificate
    converged: bool
    reason: str

    @property
    def newton_iterations(self) -> int:
        return sum(1 for s in self.steps if s.kind == "newton")

    @property
    def inner_iteration_total(self) -> int:
        return sum(s.inner_iterations for s in self.steps)


def default_mu0(k: ReducedHamiltonian, oracle_diag: float) -> float:
    """Initial mu from a determinant upper bound on the ground energy.

    ``oracle_diag`` is a diagonal Hamiltonian element (core energy included),
    so the returned value is guaranteed to sit at or above the optimum.
    """
    n = k.basis.n_electrons
    return (oracle_diag - k.e_core) / (n * (n - 1))


def _energy(k: ReducedHamiltonian, mu_star: float) -> float:
    n = k.basis.n_electrons
    return n * (n - 1) * mu_star + k.e_core


def solve_dual(
    k: ReducedHamiltonian,
    cfg: NewtonConfig | None = None,
    spin: SpinIntegrals | None = None,
) -> NewtonTrace:
    """Run the damped Newton iteration and return the trace and dual energy.

    When ``cfg.mu0`` is omitted, the starting value is derived from the
    lowest-levels determinant diagonal, which requires ``spin``.
    """
    cfg = cfg or NewtonConfig()
    if cfg.mu0 is not None:
        mu0 = cfg.mu0
    else:
        if spin is None:
            raise NewtonError("no mu0 configured and no spin integrals to derive one from")
        mu0 = default_mu0(k, aufbau_diagonal(k.basis, spin.h_one, spin.v_anti, spin.e_core))

    opts = cfg.projection
    steps: list[NewtonStep] = []

    def _fail(best: ProjectionResult, mu: float, kind: str, why: str) -> NewtonNonConvergence:
        steps.append(
            NewtonStep(mu, best.distance, best.derivative, None, best.inner_iterations, kind)
        )
        trace = NewtonTrace(
            steps=steps, mu_star=mu, energy=_energy(k, mu),
            certificate=best.certificate, converged=False, reason=why,
        )
        return NewtonNonConvergence(why, trace)

    try:
        res0 = project(k, mu0, None, opts)
    except ProjectionNonConvergence as exc:
        raise _fail(exc.best, mu0, "init", f"projection did not converge at mu0: {exc}") from exc
    steps.append(
        NewtonStep(mu0, res0.distance, res0.derivative, None, res0.inner_iterations, "init")
    )
    if res0.distance == 0.0:
        raise BracketError(
            f"delta(mu0) = 0 at mu0 = {mu0:.10g}: initial value at or below the optimum; "
            "supply a larger mu0"
        )
    if res0.derivative <= 0.0:
        raise NewtonError(
            f"derivative {res0.derivative:.3e} is not positive at mu0 while delta > 0"
        )

    warm = res0.certificate
    mu_prev, d_prev = mu0, res0.distance
    mu = mu0 - res0.distance / res0.derivative  # first step is a full Newton step
    preset: ProjectionResult | None = None

    for _ in range(cfg.max_outer):
        if preset is not None:
            res, preset = preset, None
        else:
            try:
                res = project(k, mu, warm, opts)
            except ProjectionNonConvergence as exc:
                raise _fail(
                    exc.best, mu, "newton",
                    f"projection did not converge at mu = {mu:.10g}: {exc}",
                ) from exc
            warm = res.certificate

        if res.distance == 0.0:
            # landed inside the cone: mu itself certifies the bound
            steps.append(NewtonStep(mu, 0.0, 0.0, None, res.inner_iterations, "newton"))
            return NewtonTrace(
                steps=steps, mu_star=mu, energy=_energy(k, mu),
                certificate=res.certificate, converged=True, reason="entered cone",
            )

        slope = (d_prev - res.distance) / (mu_prev - mu)
        steps.append(
            NewtonStep(mu, res.distance, res.derivative, slope, res.inner_iterations, "newton")
        )
        if res.derivative <= 0.0:
            raise NewtonError(
                f"derivative {res.derivative:.3e} is not positive at mu = {mu:.10g}"
            )

        if slope <= (1.0 + cfg.slope_tol) * res.derivative:
            mu_star = mu - res.distance / res.derivative
            if cfg.confirm_extrapolation:
                mu_probe = mu_star - 1e-4 * max(abs(mu_star), 1e-3)
                try:
                    probe = project(k, mu_probe, warm, opts)
                except ProjectionNonConvergence as exc:
                    raise _fail(
                        exc.best, mu_probe, "probe",
                        f"confirmation probe did not converge at mu = {mu_probe:.10g}: {exc}",
                    ) from exc
                steps.append(
                    NewtonStep(
                        mu_probe, probe.distance, probe.derivative, None,
                        probe.inner_iterations, "probe",
                    )
                )
                if probe.distance > 0.0:
                    # linearity assumption not yet valid: resume from the probe
                    warm = probe.certificate
                    mu_prev, d_prev = mu, res.distance
                    mu = mu_probe
                    preset = probe
                    continue
            return NewtonTrace(
                steps=steps, mu_star=mu_star, energy=_energy(k, mu_star),
                certificate=res.certificate, converged=True, reason="slope test",
            )

        mu_prev, d_prev = mu, res.distance
        mu = mu - cfg.damping * res.distance / res.derivative

    trace = NewtonTrace(
        steps=steps, mu_star=mu_prev, energy=_energy(k, mu_prev),
        certificate=warm, converged=False, reason="outer iteration limit",
    )
    raise NewtonNonConvergence(
        f"no convergence within {cfg.max_outer} outer iterations", trace
    )


@dataclass(frozen=True)
class CurvePoint:
    mu: float
    delta: float
    derivative: float
    inner_iterations: int
    error: str | None = None


def _worker_count(n_points: int, max_workers: int | None) -> int:
    if max_workers is None:
        env = os.environ.get(THREADS_ENV_VAR, "")
        max_workers = int(env) if env.strip().isdigit() and int(env) > 0 else (os.cpu_count() or 1)
    return max(1, min(max_workers, n_points))


def sample_delta_curve(
    k: ReducedHamiltonian,
    mu_grid,
    opts: ProjectionOptions | None = None,
    max_workers: int | None = None,
) -> list[CurvePoint]:
    """Evaluate delta over a grid, one independent projection per point.

    Points are processed concurrently (thread count from the
    RDMBOUND_THREADS environment variable unless given explicitly) and
    returned in input order; per-point failures are recorded, not raised.
    """
    mu_grid = [float(m) for m in mu_grid]
    opts = opts or ProjectionOptions()

    def one(mu: float) -> CurvePoint:
        try:
            res = project(k, mu, None, opts)
            return CurvePoint(mu, res.distance, res.derivative, res.inner_iterations)
        except ProjectionNonConvergence as exc:
            best = exc.best
            return CurvePoint(mu, best.distance, best.derivative, best.inner_iterations, str(exc))
        except Exception as exc:  # per-point isolation
            return CurvePoint(mu, float("nan"), float("nan"), 0, str(exc))

    if not mu_grid:
        return []
    workers = _worker_count(len(mu_grid), max_workers)
    if workers == 1:
        return [one(m) for m in mu_grid]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, mu_grid))
