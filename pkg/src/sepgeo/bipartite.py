"""Tensor product structure, partial transposition and the Peres criterion.

Index convention: the product basis is |ij> = |i>_A (x) |j>_B, so a state of
an (n_A, n_B) system is an (n_A*n_B) x (n_A*n_B) matrix whose elements can be
viewed as the 4-index array rho[i, j, k, l] = <ij|rho|kl>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import (
    POSITIVITY_TOL,
    DensityMatrix,
    HermitianOperator,
    _as_matrix,
    maximally_mixed,
)

UNIT_NORM_TOL = 1e-12


@dataclass(frozen=True)
class BipartiteState:
    """A density matrix together with the subsystem dimensions fixing its factorization."""

    rho: DensityMatrix
    dims: tuple[int, int]

    def __post_init__(self):
        n_a, n_b = self.dims
        object.__setattr__(self, "dims", (int(n_a), int(n_b)))
        if not isinstance(self.rho, DensityMatrix):
            object.__setattr__(self, "rho", DensityMatrix(self.rho))
        if n_a < 2 or n_b < 2:
            raise ValueError(f"subsystem dimensions must be >= 2, got {self.dims}")
        if self.rho.dim != n_a * n_b:
            raise ValueError(
                f"state dimension {self.rho.dim} does not match dims {n_a}x{n_b}"
            )

    @property
    def matrix(self) -> np.ndarray:
        return self.rho.matrix

    def tensor(self) -> np.ndarray:
        """The state as the 4-index array rho[i, j, k, l] = <ij|rho|kl>."""
        n_a, n_b = self.dims
        return self.rho.matrix.reshape(n_a, n_b, n_a, n_b)


@dataclass(frozen=True)
class PureProductState:
    """A product vector |phi> (x) |chi>, both factors normalized."""

    phi: np.ndarray
    chi: np.ndarray

    def __post_init__(self):
        for name in ("phi", "chi"):
            v = np.array(getattr(self, name), dtype=complex).reshape(-1)
            if abs(np.linalg.norm(v) - 1.0) > UNIT_NORM_TOL:
                raise ValueError(f"{name} must be a unit vector")
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def dims(self) -> tuple[int, int]:
        return (len(self.phi), len(self.chi))

    def vector(self) -> np.ndarray:
        return np.kron(self.phi, self.chi)

    def projector(self) -> np.ndarray:
        v = self.vector()
        return np.outer(v, v.conj())

    def density(self) -> BipartiteState:
        return BipartiteState(DensityMatrix(HermitianOperator(self.projector())), self.dims)


def partial_transpose_matrix(m: np.ndarray, dims: tuple[int, int]) -> np.ndarray:
    """Raw partial transpose on subsystem B: rho^P[ij;kl] = rho[il;kj]."""
    n_a, n_b = dims
    t = m.reshape(n_a, n_b, n_a, n_b).transpose(0, 3, 2, 1)
    return t.reshape(n_a * n_b, n_a * n_b)


def partial_transpose(state: BipartiteState) -> HermitianOperator:
    """Partial transpose of a state on subsystem B.

    The result is hermitian and unit-trace but not necessarily positive, so it
    is returned as a bare HermitianOperator; its indefiniteness is exactly the
    informative case.
    """
    return HermitianOperator(partial_transpose_matrix(state.matrix, state.dims))


@dataclass(frozen=True)
class PeresResult:
    passed: bool
    min_eigenvalue: float


def peres_check(state: BipartiteState, tol: float = POSITIVITY_TOL) -> PeresResult:
    """Positivity test of the partial transpose; failure certifies entanglement."""
    w = np.linalg.eigvalsh(partial_transpose_matrix(state.matrix, state.dims))
    return PeresResult(passed=bool(w[0] >= -tol), min_eigenvalue=float(w[0]))


def product_embed(rho_a: DensityMatrix, rho_b: DensityMatrix) -> BipartiteState:
    """Kronecker product rho_A (x) rho_B in the |ij> convention."""
    m = np.kron(_as_matrix(rho_a), _as_matrix(rho_b))
    return BipartiteState(
        DensityMatrix(HermitianOperator(m)), (np.shape(_as_matrix(rho_a))[0], np.shape(_as_matrix(rho_b))[0])
    )


def _det_normalized(v: np.ndarray) -> np.ndarray:
    det = np.linalg.det(v)
    if abs(det) < 1e-14:
        raise ValueError("factor transformation matrix is singular")
    return v / det ** (1.0 / v.shape[0])


def product_transform(state: BipartiteState, v_a: np.ndarray, v_b: np.ndarray, renormalize: bool = True):
    """Apply (V_A (x) V_B) rho (V_A (x) V_B)^dagger with det-1 normalized factors.

    Positivity is preserved for any invertible factors, and so is the sign
    pattern of the partial-transpose spectrum.  With ``renormalize`` the
    result is returned as a BipartiteState; otherwise as a HermitianOperator.
    """
    v_a = _det_normalized(np.asarray(v_a, dtype=complex))
    v_b = _det_normalized(np.asarray(v_b, dtype=complex))
    v = np.kron(v_a, v_b)
    m = v @ state.matrix @ v.conj().T
    m = (m + m.conj().T) / 2
    if renormalize:
        return BipartiteState(DensityMatrix(HermitianOperator(m / np.trace(m).real)), state.dims)
    return HermitianOperator(m)


def _min_eig_along(base: np.ndarray, direction: np.ndarray, t: float) -> float:
    return float(np.linalg.eigvalsh(base + t * direction)[0])


def first_boundary_crossing(base: np.ndarray, direction: np.ndarray, tol: float,
                            t_cap: float = 1e12) -> tuple[float, float]:
    """Smallest t > 0 where the minimum eigenvalue of base + t*direction drops to zero.

    The minimum eigenvalue is concave along the line, so the positive set is an
    interval and bisection is safe once a sign change is bracketed.  Returns
    the bracket (t_inside, t_outside); math.inf twice if no crossing below t_cap.
    """
    t_lo, t_hi = 0.0, 1.0
    while _min_eig_along(base, direction, t_hi) > 0.0:
        t_lo = t_hi
        t_hi *= 2.0
        if t_hi > t_cap:
            return math.inf, math.inf
    while t_hi - t_lo > tol:
        mid = 0.5 * (t_lo + t_hi)
        if _min_eig_along(base, direction, mid) > 0.0:
            t_lo = mid
        else:
            t_hi = mid
    return t_lo, t_hi


@dataclass(frozen=True)
class SegmentMembership:
    in_d: bool
    in_p: bool
    boundary_t_d: float
    boundary_t_pt: float


def segment_membership(op, dims: tuple[int, int], tol: float = POSITIVITY_TOL) -> SegmentMembership:
    """Locate where the segment from the maximally mixed state through ``op`` leaves D and D^P.

    ``op`` may be any hermitian unit-trace matrix (positivity is not assumed).
    The scan tracks the minimum eigenvalue of rho(t) = (1-t) rho_0 + t op and
    of its partial transpose; the first sign changes are bisected to ``tol``
    and reported as boundary parameters (possibly > 1, or inf on the ray
    through rho_0 itself).  Membership of ``op`` (t = 1) is judged with the
    same eigenvalue tolerance.
    """
    if isinstance(op, BipartiteState):
        m = op.matrix
    else:
        m = _as_matrix(op)
        if abs(np.trace(m).real - 1.0) > 1e-9:
            raise ValueError("segment endpoint must have unit trace")
    n_a, n_b = dims
    n = n_a * n_b
    if m.shape[0] != n:
        raise ValueError(f"operator dimension {m.shape[0]} does not match dims {dims}")
    rho0 = maximally_mixed(n).matrix
    direction = m - rho0
    t_d = 0.5 * sum(first_boundary_crossing(rho0, direction, tol))
    pt_dir = partial_transpose_matrix(direction, dims)
    t_pt = 0.5 * sum(first_boundary_crossing(rho0, pt_dir, tol))
    in_d = bool(np.linalg.eigvalsh(m)[0] >= -tol)
    in_p = in_d and bool(np.linalg.eigvalsh(partial_transpose_matrix(m, dims))[0] >= -tol)
    return SegmentMembership(in_d=in_d, in_p=in_p, boundary_t_d=t_d, boundary_t_pt=t_pt)
