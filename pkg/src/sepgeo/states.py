"""Canonical state families and two-dimensional section mapping.

The one-parameter 3x3 family here is the classic construction of
P. Horodecki, Phys. Lett. A 232, 333 (1997): it stays positive under partial
transposition for every parameter value yet is entangled in the interior of
the parameter range.  Both defining properties are verified numerically at
generation time rather than trusted from transcription.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bipartite import (
    BipartiteState,
    PureProductState,
    first_boundary_crossing,
    partial_transpose_matrix,
    peres_check,
)
from .errors import NonConvergence
from .linalg import DensityMatrix, HermitianOperator, hs_inner, maximally_mixed
from . import solver as _solver

FAMILIES = ("maximally_mixed", "bell", "werner", "ppt_entangled_3x3", "pure_product")

ENTANGLEMENT_PROBE_FLOOR = 1e-5


def maximally_mixed_state(dims: tuple[int, int]) -> BipartiteState:
    n_a, n_b = dims
    return BipartiteState(maximally_mixed(n_a * n_b), dims)


def bell_state(n: int = 2) -> BipartiteState:
    """Projector onto the maximally entangled vector sum_i |ii> / sqrt(n)."""
    if n < 2:
        raise ValueError(f"local dimension must be >= 2, got {n}")
    vec = np.zeros(n * n, dtype=complex)
    for i in range(n):
        vec[i * n + i] = 1.0
    vec /= np.sqrt(n)
    return BipartiteState(DensityMatrix(HermitianOperator(np.outer(vec, vec.conj()))), (n, n))


def werner_state(p: float) -> BipartiteState:
    """Two-qubit mixture p |Phi+><Phi+| + (1-p) 1/4; positive for -1/3 <= p <= 1."""
    if not -1 / 3 <= p <= 1:
        raise ValueError(f"werner parameter must lie in [-1/3, 1], got {p}")
    bell = bell_state(2).matrix
    m = p * bell + (1 - p) * np.eye(4) / 4
    return BipartiteState(DensityMatrix(HermitianOperator(m)), (2, 2))


def pure_product_state(phi, chi) -> BipartiteState:
    phi = np.asarray(phi, dtype=complex)
    chi = np.asarray(chi, dtype=complex)
    if np.linalg.norm(phi) == 0 or np.linalg.norm(chi) == 0:
        raise ValueError("factor vectors must be nonzero")
    pps = PureProductState(phi / np.linalg.norm(phi), chi / np.linalg.norm(chi))
    return pps.density()


def ppt_entangled_3x3_matrix(a: float) -> np.ndarray:
    """Unverified matrix of the one-parameter 3x3 family, basis order |00>..|22>."""
    if not 0.0 < a < 1.0:
        raise ValueError(f"parameter must lie strictly inside (0, 1), got {a}")
    c = np.sqrt(1.0 - a * a) / 2
    d = (1.0 + a) / 2
    m = np.zeros((9, 9))
    for k in (0, 4, 8):
        for l in (0, 4, 8):
            m[k, l] = a
    for k in (1, 2, 3, 5, 7):
        m[k, k] = a
    m[6, 6] = d
    m[8, 8] = d
    m[6, 8] = c
    m[8, 6] = c
    return m / (8 * a + 1)


def ppt_entangled_3x3(a: float, verify: bool = True, seed: int = 0,
                      probe_max_iter: int = 4000) -> BipartiteState:
    """One-parameter PPT-entangled 3x3 state.

    With ``verify`` (the default) the two defining properties are checked at
    generation time: the partial transpose must be positive, and a bounded
    closest-separable-state probe must find a distance above 1e-5.  The probe
    can fail within roughly 1e-2 of the endpoints a = 0, 1, where the
    entanglement becomes numerically unresolvable.
    """
    m = ppt_entangled_3x3_matrix(a)
    state = BipartiteState(DensityMatrix(HermitianOperator(m)), (3, 3))
    if verify:
        check = peres_check(state)
        if not check.passed:
            raise ValueError(
                f"construction error: partial transpose eigenvalue {check.min_eigenvalue:.3e} < 0"
            )
        try:
            probe = _solver.closest_separable(state, max_iter=probe_max_iter, seed=seed)
            distance = probe.distance
        except _solver.IterationBudgetExceeded as exc:
            distance = exc.best.distance if exc.best is not None else 0.0
        if distance <= ENTANGLEMENT_PROBE_FLOOR:
            raise ValueError(
                f"entanglement probe failed at a={a}: distance {distance:.3e} <= "
                f"{ENTANGLEMENT_PROBE_FLOOR:.0e}"
            )
    return state


def make_state(family: str, *, dims: tuple[int, int] | None = None, n: int | None = None,
               param: float | None = None, phi=None, chi=None, verify: bool = True,
               seed: int = 0) -> BipartiteState:
    """Build a named canonical state; raises ValueError for unknown families or bad parameters."""
    if family == "maximally_mixed":
        if dims is None:
            raise ValueError("maximally_mixed requires dims")
        return maximally_mixed_state(dims)
    if family == "bell":
        return bell_state(2 if n is None else n)
    if family == "werner":
        if param is None:
            raise ValueError("werner requires the mixing parameter")
        return werner_state(param)
    if family == "ppt_entangled_3x3":
        if param is None:
            raise ValueError("ppt_entangled_3x3 requires the parameter a")
        return ppt_entangled_3x3(param, verify=verify, seed=seed)
    if family == "pure_product":
        if phi is None or chi is None:
            raise ValueError("pure_product requires phi and chi")
        return pure_product_state(phi, chi)
    raise ValueError(f"unknown family {family!r}; choose from {FAMILIES}")


@dataclass(frozen=True)
class SectionPlane:
    """A two-dimensional affine section rho_0 + u e1 + v e2 of the hermitian space.

    The directions are traceless and normalized with Tr(e_i^2) = 2, so the
    (u, v) coordinates are Hilbert-Schmidt distances from the origin.
    """

    origin: BipartiteState
    e1: np.ndarray
    e2: np.ndarray
    dims: tuple[int, int]
    anchor_names: tuple[str, str]

    def point(self, u: float, v: float) -> np.ndarray:
        return self.origin.matrix + u * self.e1 + v * self.e2


def plane_through(anchor1: BipartiteState, anchor2: BipartiteState,
                  names: tuple[str, str] = ("anchor1", "anchor2")) -> SectionPlane:
    """Section through the maximally mixed state and two anchor states."""
    if anchor1.dims != anchor2.dims:
        raise ValueError("anchors must share subsystem dimensions")
    dims = anchor1.dims
    origin = maximally_mixed_state(dims)
    t1 = anchor1.matrix - origin.matrix
    norm1 = np.linalg.norm(t1)
    if norm1 < 1e-12:
        raise ValueError("first anchor coincides with the maximally mixed state")
    e1 = np.sqrt(2.0) * t1 / norm1
    t2 = anchor2.matrix - origin.matrix
    t2 = t2 - (hs_inner(t2, e1) / 2.0) * e1
    norm2 = np.linalg.norm(t2)
    if norm2 < 1e-10:
        raise ValueError("anchors are collinear; they span no plane")
    e2 = np.sqrt(2.0) * t2 / norm2
    e1.setflags(write=False)
    e2.setflags(write=False)
    return SectionPlane(origin=origin, e1=e1, e2=e2, dims=dims, anchor_names=names)


def builtin_plane(name: str, param: float = 0.5, verify: bool = True, seed: int = 0) -> SectionPlane:
    """Named planes: 'horodecki3x3' (Bell + PPT-entangled anchors) and 'corners2x2'."""
    if name == "horodecki3x3":
        return plane_through(
            bell_state(3),
            ppt_entangled_3x3(param, verify=verify, seed=seed),
            names=("bell(3)", f"ppt_entangled_3x3({param})"),
        )
    if name == "corners2x2":
        from .qubit import standard_form_matrix

        c1 = BipartiteState(DensityMatrix(HermitianOperator(standard_form_matrix([0, 0, 1]))), (2, 2))
        c2 = BipartiteState(DensityMatrix(HermitianOperator(standard_form_matrix([1, 0, 0]))), (2, 2))
        return plane_through(c1, c2, names=("corner(3,+)", "corner(1,+)"))
    raise ValueError(f"unknown plane {name!r}; choose 'horodecki3x3' or 'corners2x2'")


@dataclass(frozen=True)
class SectionRow:
    ray: int
    angle: float
    boundary: str
    u: float | None
    v: float | None
    residual: float | None
    initial_distance: float | None
    status: str


@dataclass(frozen=True)
class SectionDataset:
    meta: dict
    rows: tuple


def map_section(plane: SectionPlane, rays: int = 72, tol: float = 1e-6, seed: int = 0,
                solver_tol: float = _solver.DEFAULT_GAP_TOL, max_iter: int = 5000,
                restarts: int = _solver.DEFAULT_RESTARTS) -> SectionDataset:
    """Trace the boundaries of D, of the Peres set and of the separable set on radial rays.

    For each ray the state-set and partial-transpose boundaries are bisected to
    ``tol`` from the minimum-eigenvalue sign change; the separable boundary is
    then walked inward from the Peres boundary with the distance-step scheme.
    Solver failures are recorded per ray instead of aborting the sweep.  The
    whole dataset is reproducible for a fixed seed.
    """
    if rays < 1:
        raise ValueError("rays must be >= 1")
    dims = plane.dims
    rho0 = plane.origin.matrix
    rows = []
    for r in range(rays):
        angle = 2.0 * np.pi * r / rays
        direction = np.cos(angle) * plane.e1 + np.sin(angle) * plane.e2
        t_d_lo, t_d_hi = first_boundary_crossing(rho0, direction, tol=tol)
        t_pt_lo, t_pt_hi = first_boundary_crossing(
            rho0, partial_transpose_matrix(direction, dims), tol=tol
        )
        t_d = 0.5 * (t_d_lo + t_d_hi)
        rows.append(
            SectionRow(r, angle, "D", t_d * np.cos(angle), t_d * np.sin(angle),
                       0.5 * (t_d_hi - t_d_lo), None, "ok")
        )
        t_p = min(0.5 * (t_d_lo + t_d_hi), 0.5 * (t_pt_lo + t_pt_hi))
        t_p_lo = min(t_d_lo, t_pt_lo)
        rows.append(
            SectionRow(r, angle, "P", t_p * np.cos(angle), t_p * np.sin(angle),
                       abs(t_p - t_p_lo), None, "ok")
        )
        try:
            start = BipartiteState(
                DensityMatrix(HermitianOperator(rho0 + t_p_lo * direction)), dims
            )
            trace = _solver.boundary_trace(
                start, tol=tol, seed=[seed, r], solver_tol=solver_tol,
                max_iter=max_iter, restarts=restarts,
            )
            t_s = trace.t_star * t_p_lo
            rows.append(
                SectionRow(r, angle, "S", t_s * np.cos(angle), t_s * np.sin(angle),
                           trace.distance, trace.initial_distance, "ok")
            )
        except (NonConvergence, ValueError) as exc:
            rows.append(SectionRow(r, angle, "S", None, None, None, None, f"error: {exc}"))
    meta = {
        "rays": rays,
        "tol": tol,
        "seed": seed,
        "dims": list(dims),
        "anchors": list(plane.anchor_names),
    }
    return SectionDataset(meta=meta, rows=tuple(rows))
