"""FastAPI service wrapping the solver package.

Endpoints mirror the CLI commands: solve, fci, curve, dissociate, check.
Problem input arrives inline (FCIDUMP text or generator parameters), so the
service is stateless and filesystem-free.  Error mapping: malformed input
is a 400 with a typed payload; solver non-convergence is a normal 200
response with ``status="not_converged"`` and the partial trace; numerical
failures are a 500 with a typed payload.
"""

from __future__ import annotations

import time

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from . import checks, fci, newton
from .hamiltonians import (
    FcidumpDataError,
    FcidumpParseError,
    ReducedHamiltonian,
    SpinIntegrals,
    hubbard_dimer,
    parse_fcidump,
    random_two_body,
    reduced_from_integrals,
)
from .pairspace import EigensolverError, PairSpaceError
from .projection import ProjectionError, ProjectionOptions
from .schemas import (
    CheckRequest,
    CheckResponse,
    CheckSuiteModel,
    CurvePointModel,
    CurveRequest,
    CurveResponse,
    DissociateRequest,
    DissociateResponse,
    DissociateRow,
    ErrorPayload,
    FciRequest,
    FciResponse,
    NewtonStepModel,
    ProblemSource,
    ProjectionSettings,
    NewtonSettings,
    SolveRequest,
    SolveResponse,
)

app = FastAPI(
    title="rdmbound",
    description="Lower bounds to fermionic ground-state energies by dual cone projection",
)


class InputError(ValueError):
    pass


def build_problem(source: ProblemSource) -> tuple[ReducedHamiltonian, SpinIntegrals]:
    if source.fcidump is not None:
        ints = parse_fcidump(source.fcidump)
    elif source.hubbard_dimer is not None:
        ints = hubbard_dimer(source.hubbard_dimer.t, source.hubbard_dimer.u)
    else:
        rnd = source.random
        ints = random_two_body(rnd.seed, rnd.r, rnd.n, rnd.scale)
    return reduced_from_integrals(ints)


def projection_options(settings: ProjectionSettings) -> ProjectionOptions:
    return ProjectionOptions(
        gradient_tol=settings.gradient_tol,
        max_iterations=settings.max_iterations,
        memory=settings.memory,
        sufficient_decrease=settings.sufficient_decrease,
        curvature=settings.curvature,
        distance_floor=settings.distance_floor,
        ortho_tol=settings.ortho_tol,
        conditions=tuple(settings.conditions),
    )


def newton_config(settings: NewtonSettings, proj: ProjectionSettings) -> newton.NewtonConfig:
    return newton.NewtonConfig(
        mu0=settings.mu0,
        damping=settings.damping,
        slope_tol=settings.slope_tol,
        max_outer=settings.max_outer,
        confirm_extrapolation=settings.confirm_extrapolation,
        projection=projection_options(proj),
    )


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status, content=ErrorPayload(code=code, message=message).model_dump()
    )


@app.exception_handler(FcidumpParseError)
async def _parse_handler(request, exc):
    return _error(400, "parse_error", str(exc))


@app.exception_handler(FcidumpDataError)
async def _data_handler(request, exc):
    return _error(400, "data_error", str(exc))


@app.exception_handler(PairSpaceError)
async def _pairspace_handler(request, exc):
    return _error(400, "input_error", str(exc))


@app.exception_handler(ValueError)
async def _value_handler(request, exc):
    return _error(400, "input_error", str(exc))


@app.exception_handler(KeyError)
async def _key_handler(request, exc):
    return _error(400, "input_error", str(exc))


@app.exception_handler(newton.BracketError)
async def _bracket_handler(request, exc):
    return _error(400, "bracket_error", str(exc))


@app.exception_handler(ProjectionError)
async def _projection_handler(request, exc):
    return _error(500, "numerical_error", str(exc))


@app.exception_handler(EigensolverError)
async def _eigen_handler(request, exc):
    return _error(500, "numerical_error", str(exc))


@app.exception_handler(newton.NewtonError)
async def _newton_handler(request, exc):
    return _error(500, "numerical_error", str(exc))


def _steps_to_models(steps) -> list[NewtonStepModel]:
    return [
        NewtonStepModel(
            kind=s.kind, mu=s.mu, delta=s.delta, derivative=s.derivative,
            slope=s.slope, inner_iterations=s.inner_iterations,
        )
        for s in steps
    ]


def _solve_response(
    trace: newton.NewtonTrace,
    k: ReducedHamiltonian,
    spin: SpinIntegrals,
    req: SolveRequest,
    elapsed: float,
    detail: str | None = None,
) -> SolveResponse:
    e_fci = req.reference_fci
    if e_fci is None and req.compute_fci:
        e_fci = fci.solve_fci(spin).energy
    correlation = None
    if e_fci is not None and req.reference_hf is not None:
        denom = req.reference_hf - e_fci
        if abs(denom) > 1e-15:
            correlation = (req.reference_hf - trace.energy) / denom * 100.0
    basis = k.basis
    return SolveResponse(
        status="converged" if trace.converged else "not_converged",
        energy=trace.energy,
        mu_star=trace.mu_star,
        e_core=k.e_core,
        n_spin_orbitals=basis.n_spin_orbitals,
        n_electrons=basis.n_electrons,
        newton_iterations=trace.newton_iterations,
        inner_iteration_total=trace.inner_iteration_total,
        steps=_steps_to_models(trace.steps),
        wall_time_s=elapsed,
        e_fci=e_fci,
        correlation_percent=correlation,
        detail=detail,
    )


@app.get("/api/health")
def health():
    return {"status": "ok"}


@app.post("/api/solve", response_model=SolveResponse, responses={400: {"model": ErrorPayload}})
def solve(req: SolveRequest):
    t0 = time.perf_counter()
    k, spin = build_problem(req.source)
    cfg = newton_config(req.newton, req.projection)
    try:
        trace = newton.solve_dual(k, cfg, spin=spin)
        detail = None
    except newton.NewtonNonConvergence as exc:
        trace = exc.trace
        detail = str(exc)
    return _solve_response(trace, k, spin, req, time.perf_counter() - t0, detail)


@app.post("/api/fci", response_model=FciResponse, responses={400: {"model": ErrorPayload}})
def full_ci(req: FciRequest):
    t0 = time.perf_counter()
    _, spin = build_problem(req.source)
    try:
        psi = fci.solve_fci(spin, cap=req.determinant_cap)
    except fci.BasisTooLargeError as exc:
        return _error(400, "input_error", str(exc))
    rdm = fci.contract_2rdm(psi).tolist() if req.with_rdm else None
    return FciResponse(
        energy=psi.energy,
        dimension=psi.dets.size,
        n_spin_orbitals=spin.basis.n_spin_orbitals,
        n_electrons=spin.basis.n_electrons,
        wall_time_s=time.perf_counter() - t0,
        rdm=rdm,
    )


@app.post("/api/curve", response_model=CurveResponse, responses={400: {"model": ErrorPayload}})
def curve(req: CurveRequest):
    t0 = time.perf_counter()
    k, _ = build_problem(req.source)
    points = newton.sample_delta_curve(
        k, req.grid(), projection_options(req.projection), max_workers=req.max_workers
    )
    return CurveResponse(
        points=[
            CurvePointModel(
                mu=p.mu, delta=p.delta, derivative=p.derivative,
                inner_iterations=p.inner_iterations, error=p.error,
            )
            for p in points
        ],
        wall_time_s=time.perf_counter() - t0,
    )


@app.post(
    "/api/dissociate", response_model=DissociateResponse, responses={400: {"model": ErrorPayload}}
)
def dissociate(req: DissociateRequest):
    t0 = time.perf_counter()
    rows: list[DissociateRow] = []
    for item in req.items:
        try:
            k, spin = build_problem(item.source)
            cfg = newton_config(req.newton, req.projection)
            try:
                trace = newton.solve_dual(k, cfg, spin=spin)
                e_app, err = trace.energy, None
            except newton.NewtonNonConvergence as exc:
                e_app, err = exc.trace.energy, str(exc)
            e_fci = fci.solve_fci(spin).energy if req.compute_fci else None
            gap = (e_fci - e_app) if (e_fci is not None and e_app is not None) else None
            rows.append(DissociateRow(label=item.label, e_app=e_app, e_fci=e_fci, gap=gap, error=err))
        except Exception as exc:  # per-geometry isolation
            rows.append(DissociateRow(label=item.label, error=str(exc)))
    return DissociateResponse(rows=rows, wall_time_s=time.perf_counter() - t0)


@app.post("/api/check", response_model=CheckResponse, responses={400: {"model": ErrorPayload}})
def check(req: CheckRequest):
    t0 = time.perf_counter()
    suites = checks.run_suites(seed=req.seed, corrupt=req.corrupt)
    return CheckResponse(
        passed=all(s.passed for s in suites),
        suites=[CheckSuiteModel(name=s.name, passed=s.passed, detail=s.detail) for s in suites],
        wall_time_s=time.perf_counter() - t0,
    )
