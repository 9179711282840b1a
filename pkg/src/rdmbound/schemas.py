"""Request/response models for the HTTP service.

A problem source is exactly one of: inline FCIDUMP text, a named toy model,
or a seeded random two-body system.  The CLI reads files and inlines their
content, so the service itself never touches the filesystem.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator


class HubbardDimerSource(BaseModel):
    t: float = 1.0
    u: float = 4.0


class RandomSource(BaseModel):
    seed: int = 0
    r: int = Field(6, description="number of spin orbitals (even)")
    n: int = Field(2, description="number of electrons")
    scale: float = 1.0


class ProblemSource(BaseModel):
    """Exactly one of the fields must be set."""

    fcidump: Optional[str] = Field(None, description="FCIDUMP file content")
    hubbard_dimer: Optional[HubbardDimerSource] = None
    random: Optional[RandomSource] = None

    @model_validator(mode="after")
    def _exactly_one(self):
        given = [
            name
            for name in ("fcidump", "hubbard_dimer", "random")
            if getattr(self, name) is not None
        ]
        if len(given) != 1:
            raise ValueError(f"exactly one input source required, got {given or 'none'}")
        return self


class ProjectionSettings(BaseModel):
    gradient_tol: Optional[float] = None
    max_iterations: int = 20_000
    memory: int = 3
    sufficient_decrease: float = 1e-4
    curvature: float = 0.9
    distance_floor: float = 1e-9
    ortho_tol: float = 1e-5
    conditions: list[str] = ["P", "Q", "G"]


class NewtonSettings(BaseModel):
    mu0: Optional[float] = None
    damping: float = Field(0.8, gt=0.0, le=1.0)
    slope_tol: float = Field(0.05, gt=0.0)
    max_outer: int = 50
    confirm_extrapolation: bool = True


class SolveRequest(BaseModel):
    source: ProblemSource
    newton: NewtonSettings = NewtonSettings()
    projection: ProjectionSettings = ProjectionSettings()
    compute_fci: bool = False
    reference_fci: Optional[float] = None
    reference_hf: Optional[float] = None


class NewtonStepModel(BaseModel):
    kind: str
    mu: float
    delta: float
    derivative: float
    slope: Optional[float] = None
    inner_iterations: int


class SolveResponse(BaseModel):
    status: Literal["converged", "not_converged"]
    energy: float
    mu_star: float
    e_core: float
    n_spin_orbitals: int
    n_electrons: int
    newton_iterations: int
    inner_iteration_total: int
    steps: list[NewtonStepModel]
    wall_time_s: float
    e_fci: Optional[float] = None
    correlation_percent: Optional[float] = None
    detail: Optional[str] = None


class FciRequest(BaseModel):
    source: ProblemSource
    determinant_cap: int = 50_000
    with_rdm: bool = False


class FciResponse(BaseModel):
    energy: float
    dimension: int
    n_spin_orbitals: int
    n_electrons: int
    wall_time_s: float
    rdm: Optional[list[list[float]]] = Field(
        None, description="two-body density matrix on the ordered-pair basis"
    )


class CurveRequest(BaseModel):
    source: ProblemSource
    mu_min: Optional[float] = None
    mu_max: Optional[float] = None
    points: Optional[int] = Field(None, ge=2)
    mu_values: Optional[list[float]] = None
    projection: ProjectionSettings = ProjectionSettings()
    max_workers: Optional[int] = None

    @model_validator(mode="after")
    def _grid_given(self):
        explicit = self.mu_values is not None
        ranged = self.mu_min is not None and self.mu_max is not None and self.points is not None
        if not explicit and not ranged:
            raise ValueError("provide either mu_values or mu_min/mu_max/points")
        if ranged and self.mu_min >= self.mu_max:
            raise ValueError("mu_min must be smaller than mu_max")
        return self

    def grid(self) -> list[float]:
        if self.mu_values is not None:
            return [float(m) for m in self.mu_values]
        step = (self.mu_max - self.mu_min) / (self.points - 1)
        return [self.mu_min + i * step for i in range(self.points)]


class CurvePointModel(BaseModel):
    mu: float
    delta: float
    derivative: float
    inner_iterations: int
    error: Optional[str] = None


class CurveResponse(BaseModel):
    points: list[CurvePointModel]
    wall_time_s: float


class DissociateItem(BaseModel):
    label: str
    source: ProblemSource


class DissociateRequest(BaseModel):
    items: list[DissociateItem]
    newton: NewtonSettings = NewtonSettings()
    projection: ProjectionSettings = ProjectionSettings()
    compute_fci: bool = False


class DissociateRow(BaseModel):
    label: str
    e_app: Optional[float] = None
    e_fci: Optional[float] = None
    gap: Optional[float] = None
    error: Optional[str] = None


class DissociateResponse(BaseModel):
    rows: list[DissociateRow]
    wall_time_s: float


class CheckRequest(BaseModel):
    seed: int = 2024
    corrupt: Optional[str] = None


class CheckSuiteModel(BaseModel):
    name: str
    passed: bool
    detail: str


class CheckResponse(BaseModel):
    passed: bool
    suites: list[CheckSuiteModel]
    wall_time_s: float


class ErrorPayload(BaseModel):
    code: Literal[
        "parse_error", "data_error", "input_error", "bracket_error", "numerical_error"
    ]
    message: str
