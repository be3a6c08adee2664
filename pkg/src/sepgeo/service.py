"""HTTP service wrapping the library; the CLI shares its request/response handlers.

All payloads are versioned with ``format_version``.  Matrices travel in the
exchange schema {"dim": n, "entries": [[[re, im], ...], ...]} with the upper
triangle authoritative for hermitian data.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import states as _states
from . import solver as _solver
from .bipartite import BipartiteState, peres_check
from .errors import NonConvergence
from .linalg import DensityMatrix, HermitianOperator, matrix_from_json, matrix_to_json
from .qubit import octahedron_separable, schmidt_2x2
from .schmidt import transform_to_schmidt

FORMAT_VERSION = 1


def _complex_entries(m: np.ndarray) -> list:
    return [[[float(x.real), float(x.imag)] for x in row] for row in np.asarray(m, dtype=complex)]


def _vector_entries(v: np.ndarray) -> list:
    return [[float(x.real), float(x.imag)] for x in np.asarray(v, dtype=complex)]


def _vector_from_entries(pairs) -> np.ndarray:
    return np.array([complex(p[0], p[1]) for p in pairs], dtype=complex)


class MatrixPayload(BaseModel):
    """Hermitian matrix in the exchange schema."""

    dim: int
    entries: list[list[list[float]]]

    def to_operator(self) -> HermitianOperator:
        return matrix_from_json(self.model_dump())

    def to_state(self, dims: tuple[int, int]) -> BipartiteState:
        return BipartiteState(DensityMatrix(self.to_operator()), dims)

    @classmethod
    def from_matrix(cls, m) -> "MatrixPayload":
        return cls(**matrix_to_json(m))


class ComplexMatrixPayload(BaseModel):
    """General complex matrix (no hermiticity constraint), same entry encoding."""

    entries: list[list[list[float]]]

    @classmethod
    def from_matrix(cls, m) -> "ComplexMatrixPayload":
        return cls(entries=_complex_entries(m))


class PeresRequest(BaseModel):
    matrix: MatrixPayload
    dims: tuple[int, int]
    tol: float = 1e-10


class PeresResponse(BaseModel):
    format_version: int = FORMAT_VERSION
    passed: bool
    min_eigenvalue: float


class StandardFormRequest(BaseModel):
    matrix: MatrixPayload
    strictness_tol: float = 1e-8


class StandardFormResponse(BaseModel):
    format_version: int = FORMAT_VERSION
    d: list[float]
    v_a: ComplexMatrixPayload
    v_b: ComplexMatrixPayload
    residual: float
    separable: bool


class SchmidtRequest(BaseModel):
    matrix: MatrixPayload
    dims: tuple[int, int]
    tol: float = 1e-8
    seed: int = 0


class SchmidtResponse(BaseModel):
    format_version: int = FORMAT_VERSION
    xi: list[float]
    basis_a: list[ComplexMatrixPayload]
    basis_b: list[ComplexMatrixPayload]
    t_a: ComplexMatrixPayload
    t_b: ComplexMatrixPayload
    residual: float
    gentrace_residual: float


class AtomModel(BaseModel):
    weight: float = Field(serialization_alias="lambda", validation_alias="lambda")
    phi: list[list[float]]
    chi: list[list[float]]

    model_config = {"populate_by_name": True}


class DistanceRequest(BaseModel):
    matrix: MatrixPayload
    dims: tuple[int, int]
    tol: float = 1e-7
    max_iter: int = 5000
    seed: int = 0
    restarts: int = 8


class DistanceResponse(BaseModel):
    format_version: int = FORMAT_VERSION
    distance: float
    converged: bool
    iterations: int
    gap: float
    atoms: list[AtomModel]


class MakeStateRequest(BaseModel):
    family: str
    param: float | None = None
    n: int | None = None
    dims: tuple[int, int] | None = None
    phi: list[list[float]] | None = None
    chi: list[list[float]] | None = None
    verify: bool = True
    seed: int = 0


class MakeStateResponse(BaseModel):
    format_version: int = FORMAT_VERSION
    family: str
    dims: tuple[int, int]
    matrix: MatrixPayload
    checks: dict


class SectionRowModel(BaseModel):
    ray: int
    angle: float
    boundary: str
    u: float | None
    v: float | None
    residual: float | None
    initial_distance: float | None = None
    status: str


class MapSectionRequest(BaseModel):
    plane: str = "horodecki3x3"
    param: float = 0.5
    rays: int = 72
    tol: float = 1e-6
    seed: int = 0
    coords: str = "hs"
    solver_tol: float = 1e-7
    max_iter: int = 5000
    restarts: int = 8
    anchor1: MatrixPayload | None = None
    anchor2: MatrixPayload | None = None
    dims: tuple[int, int] | None = None


class MapSectionResponse(BaseModel):
    format_version: int = FORMAT_VERSION
    meta: dict
    rows: list[SectionRowModel]


def run_peres(req: PeresRequest) -> PeresResponse:
    state = req.matrix.to_state(tuple(req.dims))
    res = peres_check(state, tol=req.tol)
    return PeresResponse(passed=res.passed, min_eigenvalue=res.min_eigenvalue)


def run_standard_form(req: StandardFormRequest) -> StandardFormResponse:
    state = req.matrix.to_state((2, 2))
    form = schmidt_2x2(state, strictness_tol=req.strictness_tol)
    return StandardFormResponse(
        d=[float(x) for x in form.d],
        v_a=ComplexMatrixPayload.from_matrix(form.v_a),
        v_b=ComplexMatrixPayload.from_matrix(form.v_b),
        residual=form.residual,
        separable=octahedron_separable(form.d),
    )


def run_schmidt(req: SchmidtRequest) -> SchmidtResponse:
    state = req.matrix.to_state(tuple(req.dims))
    dec = transform_to_schmidt(state, tol=req.tol, seed=req.seed)
    return SchmidtResponse(
        xi=[float(x) for x in dec.xi],
        basis_a=[ComplexMatrixPayload.from_matrix(b) for b in dec.basis_a],
        basis_b=[ComplexMatrixPayload.from_matrix(b) for b in dec.basis_b],
        t_a=ComplexMatrixPayload.from_matrix(dec.t_a),
        t_b=ComplexMatrixPayload.from_matrix(dec.t_b),
        residual=dec.residual,
        gentrace_residual=dec.gentrace_residual,
    )


def run_distance(req: DistanceRequest) -> DistanceResponse:
    state = req.matrix.to_state(tuple(req.dims))
    approx = _solver.closest_separable(
        state, tol=req.tol, max_iter=req.max_iter, restarts=req.restarts, seed=req.seed
    )
    return DistanceResponse(
        distance=approx.distance,
        converged=approx.converged,
        iterations=approx.iterations,
        gap=approx.gap,
        atoms=[
            AtomModel(
                weight=w,
                phi=_vector_entries(p.phi),
                chi=_vector_entries(p.chi),
            )
            for w, p in approx.atoms
        ],
    )


def run_make_state(req: MakeStateRequest) -> MakeStateResponse:
    phi = _vector_from_entries(req.phi) if req.phi is not None else None
    chi = _vector_from_entries(req.chi) if req.chi is not None else None
    state = _states.make_state(
        req.family,
        dims=tuple(req.dims) if req.dims is not None else None,
        n=req.n,
        param=req.param,
        phi=phi,
        chi=chi,
        verify=req.verify,
        seed=req.seed,
    )
    check = peres_check(state)
    checks = {"peres_passed": check.passed, "pt_min_eigenvalue": check.min_eigenvalue}
    return MakeStateResponse(
        family=req.family,
        dims=state.dims,
        matrix=MatrixPayload.from_matrix(state.matrix),
        checks=checks,
    )


def run_map_section(req: MapSectionRequest) -> MapSectionResponse:
    if req.coords not in ("hs", "fig5"):
        raise ValueError(f"coords must be 'hs' or 'fig5', got {req.coords!r}")
    if req.anchor1 is not None or req.anchor2 is not None:
        if req.anchor1 is None or req.anchor2 is None or req.dims is None:
            raise ValueError("custom planes need anchor1, anchor2 and dims")
        plane = _states.plane_through(
            req.anchor1.to_state(tuple(req.dims)),
            req.anchor2.to_state(tuple(req.dims)),
            names=("custom1", "custom2"),
        )
    else:
        plane = _states.builtin_plane(req.plane, param=req.param, seed=req.seed)
    data = _states.map_section(
        plane, rays=req.rays, tol=req.tol, seed=req.seed,
        solver_tol=req.solver_tol, max_iter=req.max_iter, restarts=req.restarts,
    )
    # Plot coordinates of the reproduced figure carry an extra sqrt(2) relative
    # to Hilbert-Schmidt distance coordinates.
    scale = np.sqrt(2.0) if req.coords == "fig5" else 1.0
    rows = [
        SectionRowModel(
            ray=r.ray,
            angle=r.angle,
            boundary=r.boundary,
            u=None if r.u is None else r.u * scale,
            v=None if r.v is None else r.v * scale,
            residual=r.residual,
            initial_distance=r.initial_distance,
            status=r.status,
        )
        for r in data.rows
    ]
    meta = dict(data.meta)
    meta["coords"] = req.coords
    return MapSectionResponse(meta=meta, rows=rows)


app = FastAPI(title="sepgeo", description="Separability geometry toolkit service")


@app.exception_handler(ValueError)
async def _invalid_input(request: Request, exc: ValueError):
    return JSONResponse(status_code=400, content={"error": "invalid_input", "detail": str(exc)})


@app.exception_handler(NonConvergence)
async def _non_convergence(request: Request, exc: NonConvergence):
    return JSONResponse(status_code=409, content={"error": "non_convergence", "detail": str(exc)})


@app.get("/health")
def health():
    return {"status": "ok", "format_version": FORMAT_VERSION}


@app.post("/peres", response_model=PeresResponse)
def peres_endpoint(req: PeresRequest):
    return run_peres(req)


@app.post("/standard-form", response_model=StandardFormResponse)
def standard_form_endpoint(req: StandardFormRequest):
    return run_standard_form(req)


@app.post("/schmidt", response_model=SchmidtResponse)
def schmidt_endpoint(req: SchmidtRequest):
    return run_schmidt(req)


@app.post("/distance", response_model=DistanceResponse)
def distance_endpoint(req: DistanceRequest):
    return run_distance(req)


@app.post("/make-state", response_model=MakeStateResponse)
def make_state_endpoint(req: MakeStateRequest):
    return run_make_state(req)


@app.post("/map-section", response_model=MapSectionResponse)
def map_section_endpoint(req: MapSectionRequest):
    return run_map_section(req)
