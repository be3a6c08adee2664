"""Iterative computation of the closest separable state.

The outer loop alternates two subproblems: a linked-eigenvalue search for the
pure product state with maximal overlap against the current residual
direction, and a quadratic program over the convex hull of all product states
collected so far.  Convergence is declared on the overlap gap
s = Tr((rho_p - rho_s) sigma), which certifies that no product state improves
the approximation.
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
from .errors import FailsPrecondition, IterationBudgetExceeded, NonConvergence
from .linalg import POSITIVITY_TOL, DensityMatrix, HermitianOperator, _as_matrix, hs_distance

DEFAULT_GAP_TOL = 1e-7
DEFAULT_RESTARTS = 8
ESCALATED_RESTARTS = 64
ATOM_CAP = 2000
KKT_TOL = 1e-10


def _hermitize_batch(m: np.ndarray) -> np.ndarray:
    return (m + np.conj(np.swapaxes(m, -1, -2))) / 2


def _overlap_sweeps(sigma4: np.ndarray, chis: np.ndarray, tol: float,
                    max_sweeps: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Run batched alternating eigenvector sweeps; returns (phis, chis, values)."""
    s_prev = np.full(chis.shape[0], -np.inf)
    phis = None
    s_now = s_prev
    for _ in range(max_sweeps):
        a = _hermitize_batch(np.einsum("ijkl,rj,rl->rik", sigma4, chis.conj(), chis))
        _, vec_a = np.linalg.eigh(a)
        phis = vec_a[:, :, -1]
        b = _hermitize_batch(np.einsum("ijkl,ri,rk->rjl", sigma4, phis.conj(), phis))
        w_b, vec_b = np.linalg.eigh(b)
        chis = vec_b[:, :, -1]
        s_now = w_b[:, -1]
        if np.any(s_now < s_prev - 1e-9 * max(1.0, float(np.max(np.abs(s_now))))):
            raise AssertionError("overlap sequence decreased; eigen-iteration is inconsistent")
        if np.max(np.abs(s_now - s_prev)) < tol:
            break
        s_prev = s_now
    return phis, chis, s_now


def _overlap_search(sigma4: np.ndarray, dims: tuple[int, int], restarts: int,
                    rng: np.random.Generator, tol: float, max_sweeps: int,
                    warm_chis: np.ndarray | None, coarse_sweeps: int = 60):
    """Coarse batched search over random + warm starts, then polish the winner.

    The full batch is iterated with a coarse threshold; only the best chain is
    driven to the final |delta s'| < tol, which preserves the value contract
    without paying full precision on every restart.
    """
    n_a, n_b = dims
    chis = rng.standard_normal((restarts, n_b)) + 1j * rng.standard_normal((restarts, n_b))
    if warm_chis is not None and len(warm_chis):
        chis = np.vstack([np.asarray(warm_chis, dtype=complex).reshape(-1, n_b), chis])
    chis /= np.linalg.norm(chis, axis=1, keepdims=True)

    coarse_tol = max(tol, 1e-9)
    phis, chis, s_now = _overlap_sweeps(sigma4, chis, coarse_tol, min(coarse_sweeps, max_sweeps))
    best = int(np.argmax(s_now))
    phi_b, chi_b, s_b = _overlap_sweeps(
        sigma4, chis[best:best + 1], tol, max_sweeps
    )
    phis[best], chis[best], s_now[best] = phi_b[0], chi_b[0], s_b[0]
    return phis, chis, s_now, best


def max_product_overlap(sigma, dims: tuple[int, int], restarts: int = DEFAULT_RESTARTS,
                        rng: np.random.Generator | None = None, tol: float = 1e-12,
                        max_sweeps: int = 500,
                        init_chi: np.ndarray | None = None) -> tuple[PureProductState, float]:
    """Pure product state maximizing s' = Tr(rho_p sigma) for hermitian sigma.

    Alternates the two linked eigenvalue problems: with chi fixed, phi is the
    top eigenvector of A_ik = sum chi*_j sigma_ij;kl chi_l, and vice versa.
    Each half-step maximizes s' exactly in one factor, so the value sequence
    is non-decreasing and converges to a (possibly local) maximum; the best
    over ``restarts`` random unit starting vectors (plus optional warm starts)
    is returned, iterated as one batch.
    """
    n_a, n_b = dims
    m = _as_matrix(sigma)
    sigma4 = m.reshape(n_a, n_b, n_a, n_b)
    if rng is None:
        rng = np.random.default_rng()
    warm = None
    if init_chi is not None:
        warm = np.asarray(init_chi, dtype=complex).reshape(-1, n_b)
    phis, chis, s_now, best = _overlap_search(
        sigma4, dims, restarts, rng, tol, max_sweeps, warm
    )
    return PureProductState(phis[best], chis[best]), float(s_now[best])


def _refit_candidates(sigma4: np.ndarray, vectors: list, weights: np.ndarray,
                      phis0: np.ndarray, chis0: np.ndarray, active: list,
                      sweeps: int = 6) -> tuple[np.ndarray, np.ndarray]:
    """Re-optimized versions of the active atoms against their own residuals.

    Atom k with weight w_k minimizes the full objective exactly when it
    maximizes Tr(P_k R_k) with R_k = sigma + w_k P_k, so a few warm-started
    alternating sweeps per atom produce strictly better candidates near the
    optimum; all atoms are swept as one batch and returned for appending.
    """
    res = np.stack([
        sigma4 + weights[k] * np.outer(vectors[k], vectors[k].conj()).reshape(sigma4.shape)
        for k in active
    ])
    phis, chis = phis0.copy(), chis0.copy()
    vals = None
    for _ in range(sweeps):
        a = _hermitize_batch(np.einsum("kijml,kj,kl->kim", res, chis.conj(), chis))
        _, vec_a = np.linalg.eigh(a)
        phis = vec_a[:, :, -1]
        b = _hermitize_batch(np.einsum("kijml,ki,km->kjl", res, phis.conj(), phis))
        w_b, vec_b = np.linalg.eigh(b)
        chis = vec_b[:, :, -1]
        vals = w_b[:, -1]
    return phis, chis, vals


@dataclass(frozen=True)
class HullProjection:
    weights: np.ndarray
    f_min: float


def _simplex_qp(gram: np.ndarray, lin: np.ndarray, warm: np.ndarray | None = None,
                kkt_tol: float = KKT_TOL) -> np.ndarray:
    """Minimize lam^T G lam - 2 lin^T lam over the probability simplex.

    Active-set method: conjugate gradient steps inside the current face (the
    gradient projected onto the face's tangent space), with pinned coordinates
    added when a weight hits zero and released when their Lagrange multiplier
    test fails.  G is positive semidefinite, so the exact line step of CG is
    always defined or the direction runs into a bound.
    """
    m = len(lin)
    if m == 1:
        return np.ones(1)
    if warm is not None and len(warm) == m and np.all(warm >= 0) and warm.sum() > 0:
        lam = warm / warm.sum()
    else:
        lam = np.full(m, 1.0 / m)
    active = lam <= 0.0
    if active.all():
        lam = np.full(m, 1.0 / m)
        active[:] = False

    def project(vec, free):
        out = np.zeros_like(vec)
        out[free] = vec[free] - vec[free].mean()
        return out

    scale = max(1.0, float(np.max(np.abs(lin))), float(np.max(np.abs(gram))))
    cg_tol = 1e-12 * scale
    max_outer = 20 + 12 * m
    for _ in range(max_outer):
        free = ~active
        # conjugate gradient on the current face
        grad = 2.0 * (gram @ lam - lin)
        resid = -project(grad, free)
        direction = resid.copy()
        rs_old = resid @ resid
        for _ in range(3 * m + 10):
            if np.sqrt(rs_old) <= cg_tol:
                break
            h_d = 2.0 * (gram @ direction)
            curv = direction @ h_d
            shrinking = direction < -1e-16
            if np.any(shrinking):
                blocks = -lam[shrinking] / direction[shrinking]
                alpha_block = float(np.min(blocks))
            else:
                alpha_block = np.inf
            if curv > 1e-30:
                alpha_cg = rs_old / curv
            else:
                alpha_cg = np.inf
            if alpha_cg <= alpha_block:
                lam = lam + alpha_cg * direction
                resid = resid - alpha_cg * project(h_d, free)
                rs_new = resid @ resid
                direction = resid + (rs_new / rs_old) * direction
                rs_old = rs_new
            else:
                if not np.isfinite(alpha_block):
                    break
                lam = lam + alpha_block * direction
                # pin only coordinates that hit zero while shrinking; a freshly
                # released coordinate sitting at zero with ascent direction
                # must stay free or release/pin cycles forever
                hit = free & (lam <= 1e-15) & shrinking
                lam[hit] = 0.0
                active |= hit
                free = ~active
                lam[free] /= lam[free].sum()
                grad = 2.0 * (gram @ lam - lin)
                resid = -project(grad, free)
                direction = resid.copy()
                rs_old = resid @ resid
        # KKT test: free gradients share the multiplier mu; pinned coordinates
        # may only be released if their gradient undercuts it.
        grad = 2.0 * (gram @ lam - lin)
        free = ~active
        mu = grad[free].mean()
        violations = active & (grad < mu - kkt_tol)
        if not np.any(violations):
            return lam
        active[violations] = False
    return lam


def hull_project(rho, atoms: list[PureProductState],
                 warm: np.ndarray | None = None) -> HullProjection:
    """Weights minimizing F = Tr(rho - sum_k lam_k rho_pk)^2 over the simplex."""
    if len(atoms) == 0:
        raise ValueError("atom list must be non-empty")
    m = _as_matrix(rho)
    vectors = np.stack([p.vector() for p in atoms])
    gram = np.abs(vectors @ vectors.conj().T) ** 2
    lin = np.einsum("ri,ij,rj->r", vectors.conj(), m, vectors).real
    lam = _simplex_qp(gram, lin, warm=warm)
    const = float(np.sum(np.abs(m) ** 2).real)
    f_min = float(lam @ gram @ lam - 2 * lin @ lam + const)
    return HullProjection(weights=lam, f_min=max(f_min, 0.0))


@dataclass(frozen=True)
class SeparableApproximation:
    """Convex combination of pure product states approximating the closest separable state."""

    atoms: tuple
    rho_s: DensityMatrix
    sigma: HermitianOperator
    distance: float
    gap: float
    iterations: int
    converged: bool

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.atoms])


def _basis_product_states(dims: tuple[int, int]) -> list[PureProductState]:
    n_a, n_b = dims
    states = []
    for i in range(n_a):
        for j in range(n_b):
            phi = np.zeros(n_a, dtype=complex)
            chi = np.zeros(n_b, dtype=complex)
            phi[i] = 1.0
            chi[j] = 1.0
            states.append(PureProductState(phi, chi))
    return states


MAX_APPENDS_PER_ITER = 6
DUPLICATE_FIDELITY = 1.0 - 1e-8


def closest_separable(state: BipartiteState, tol: float = DEFAULT_GAP_TOL,
                      max_iter: int = 5000, restarts: int = DEFAULT_RESTARTS,
                      seed: int = 0, atom_cap: int = ATOM_CAP,
                      initial_atoms: tuple | None = None) -> SeparableApproximation:
    """Closest separable state in Hilbert-Schmidt distance, with a gap certificate.

    Starts from the maximally mixed state (realized as the uniform mixture of
    the computational product basis, so it lies in the initial hull and the
    distance sequence is non-increasing).  Each outer iteration searches for
    product states maximizing the overlap with sigma = rho - rho_s, batching
    random restarts with warm starts taken from the active atoms, appends the
    distinct improvers, re-solves the hull projection warm-started from the
    previous weights, and prunes zero-weight atoms.  Convergence is declared
    when the gap s = Tr((rho_p - rho_s) sigma) falls to ``tol``, re-verified
    with an escalated restart count.

    ``initial_atoms`` seeds the candidate list (weights start at zero so the
    initial mixture is still the maximally mixed state); callers solving many
    nearby states pass the previous solution's atoms here.

    Raises IterationBudgetExceeded (with the best approximation attached) if
    the iteration or atom budget runs out first.
    """
    rho = state.matrix
    dims = state.dims
    n = rho.shape[0]
    rng = np.random.default_rng(seed)
    sigma4_shape = (dims[0], dims[1], dims[0], dims[1])

    atoms = _basis_product_states(dims)
    weights = np.full(len(atoms), 1.0 / len(atoms))
    if initial_atoms:
        atoms = atoms + [p for _, p in initial_atoms]
        weights = np.concatenate([weights, np.zeros(len(initial_atoms))])
    vectors = [p.vector() for p in atoms]
    gram = np.abs(np.stack(vectors) @ np.stack(vectors).conj().T) ** 2
    lin = np.array([float(np.real(v.conj() @ rho @ v)) for v in vectors])

    def mixture(w):
        m = np.zeros((n, n), dtype=complex)
        for wk, vk in zip(w, vectors):
            if wk > 0:
                m += wk * np.outer(vk, vk.conj())
        return (m + m.conj().T) / 2

    rho_s = mixture(weights)
    distance = hs_distance(rho, rho_s)
    gap = np.inf
    iterations = 0
    converged = False

    def result(conv):
        kept = [(float(w), atoms[k]) for k, w in enumerate(weights) if w > 0]
        total = sum(w for w, _ in kept)
        kept = tuple((w / total, p) for w, p in kept)
        rs = DensityMatrix(HermitianOperator(rho_s / np.trace(rho_s).real))
        return SeparableApproximation(
            atoms=kept,
            rho_s=rs,
            sigma=HermitianOperator(rho - rs.matrix),
            distance=distance,
            gap=float(gap),
            iterations=iterations,
            converged=conv,
        )

    def warm_start_block():
        active = [p.chi for w, p in zip(weights, atoms) if w > 0]
        return np.stack(active[-ESCALATED_RESTARTS:]) if active else None

    for iterations in range(1, max_iter + 1):
        sigma = rho - rho_s
        sigma4 = sigma.reshape(sigma4_shape)
        trace_ss = float(np.sum(sigma.conj() * rho_s).real)
        phis, chis, svals, best = _overlap_search(
            sigma4, dims, restarts, rng, 1e-12, 80, warm_start_block(), coarse_sweeps=35
        )
        gap = float(svals[best]) - trace_ss
        if gap <= tol:
            # escalated, fully polished verification pass
            phis, chis, svals, best = _overlap_search(
                sigma4, dims, ESCALATED_RESTARTS, rng, 1e-12, 2000, warm_start_block()
            )
            gap = float(svals[best]) - trace_ss
            if gap <= tol:
                converged = True
                break

        # Append the distinct improving candidates, best first.  The best one
        # is always appended (even if near a current atom) so the hull keeps
        # moving when the optimum sits between two near-duplicates.
        order = np.argsort(-svals)
        stacked = np.stack(vectors)

        def append_atom(cand, dedup_fidelity, force=False):
            nonlocal gram, lin, weights, stacked
            v_new = cand.vector()
            cross = np.abs(stacked @ v_new.conj()) ** 2
            if not force and np.max(cross) >= dedup_fidelity:
                return False
            if len(atoms) >= atom_cap:
                raise IterationBudgetExceeded(
                    f"atom cap {atom_cap} reached at gap {gap:.3e}", best=result(False)
                )
            atoms.append(cand)
            vectors.append(v_new)
            stacked = np.vstack([stacked, v_new[None, :]])
            gram = np.block([[gram, cross[:, None]], [cross[None, :], np.array([[1.0]])]])
            lin = np.append(lin, float(np.real(v_new.conj() @ rho @ v_new)))
            weights = np.append(weights, 0.0)
            return True

        appended = 0
        for idx in order:
            if svals[idx] - trace_ss <= tol or appended >= MAX_APPENDS_PER_ITER:
                break
            if append_atom(PureProductState(phis[idx], chis[idx]), DUPLICATE_FIDELITY,
                           force=(appended == 0)):
                appended += 1

        # Block-coordinate refreshes of the active atoms; these target the
        # full objective directly and keep the tail of the iteration from
        # zigzagging between near-duplicate search results.  Only candidates
        # that actually improve their own residual overlap are appended.
        active = [k for k, w in enumerate(weights) if w > 0]
        if active:
            r_phis, r_chis, r_vals = _refit_candidates(
                sigma4, vectors, weights,
                np.stack([atoms[k].phi for k in active]),
                np.stack([atoms[k].chi for k in active]),
                active,
            )
            g_lam = gram @ weights
            for row, k in enumerate(active):
                old_val = lin[k] - g_lam[k] + weights[k]
                if r_vals[row] - old_val > 1e-13:
                    append_atom(PureProductState(r_phis[row], r_chis[row]), 1.0 - 1e-14)

        weights = _simplex_qp(gram, lin, warm=weights)
        keep = weights > 0
        if not np.all(keep):
            atoms = [a for a, k in zip(atoms, keep) if k]
            vectors = [v for v, k in zip(vectors, keep) if k]
            gram = gram[np.ix_(keep, keep)]
            lin = lin[keep]
            weights = weights[keep]
            weights /= weights.sum()
        rho_s = mixture(weights)
        new_distance = hs_distance(rho, rho_s)
        if new_distance > distance + 1e-10:
            raise AssertionError(
                f"distance increased from {distance:.3e} to {new_distance:.3e}"
            )
        distance = new_distance

    if not converged:
        raise IterationBudgetExceeded(
            f"gap {gap:.3e} above tolerance {tol:.1e} after {max_iter} iterations",
            best=result(False),
        )

    # S is contained in the Peres set, so a vanishing distance must be
    # consistent with the partial-transpose spectrum at numerical precision.
    if distance < 1e-6:
        pt_min = float(np.linalg.eigvalsh(partial_transpose_matrix(rho, dims))[0])
        if pt_min < -(np.sqrt(2.0) * distance + 1e-8):
            raise AssertionError(
                f"distance {distance:.3e} inconsistent with PT eigenvalue {pt_min:.3e}"
            )
    return result(True)


@dataclass(frozen=True)
class BoundaryTrace:
    t_star: float
    boundary_state: BipartiteState
    steps: int
    distance: float
    initial_distance: float


def boundary_trace(direction_state: BipartiteState, tol: float = 1e-6,
                   seed: int = 0, max_steps: int = 500,
                   solver_tol: float = DEFAULT_GAP_TOL, max_iter: int = 5000,
                   restarts: int = DEFAULT_RESTARTS) -> BoundaryTrace:
    """Locate the separable-set boundary on the segment from the maximally mixed state.

    The walk starts at the Peres-boundary end of the segment (or at the
    direction state itself when that lies inside the Peres set), evaluates the
    distance d to the closest separable state, and moves toward the maximally
    mixed state by exactly d in Hilbert-Schmidt length; it stops once
    d < ``tol``, which brackets the boundary crossing within the same error.
    """
    dims = direction_state.dims
    n = dims[0] * dims[1]
    rho_dir = direction_state.matrix
    if np.linalg.eigvalsh(rho_dir)[0] < -POSITIVITY_TOL:
        raise FailsPrecondition("direction state is not a density matrix")
    rho0 = np.eye(n, dtype=complex) / n
    direction = rho_dir - rho0
    length = hs_distance(rho0, rho_dir)
    if length < 1e-12:
        return BoundaryTrace(1.0, direction_state, 0, 0.0, 0.0)

    t_d, _ = first_boundary_crossing(rho0, direction, tol=min(tol, 1e-8))
    t_pt, _ = first_boundary_crossing(
        rho0, partial_transpose_matrix(direction, dims), tol=min(tol, 1e-8)
    )
    t = min(1.0, t_d, t_pt)

    def state_at(tt: float) -> BipartiteState:
        m = rho0 + tt * direction
        return BipartiteState(DensityMatrix(HermitianOperator(m)), dims)

    initial_distance = None
    carried_atoms = None
    for steps in range(max_steps + 1):
        approx = closest_separable(
            state_at(t), tol=solver_tol, max_iter=max_iter, restarts=restarts,
            seed=seed, initial_atoms=carried_atoms,
        )
        carried_atoms = approx.atoms
        if initial_distance is None:
            initial_distance = approx.distance
        if approx.distance < tol:
            return BoundaryTrace(
                t_star=float(t),
                boundary_state=state_at(t),
                steps=steps,
                distance=approx.distance,
                initial_distance=float(initial_distance),
            )
        t = t - approx.distance / length
        if t <= 0.0:
            raise NonConvergence("walk passed the maximally mixed state; no boundary found")
    raise NonConvergence(f"separable boundary not bracketed in {max_steps} steps")
