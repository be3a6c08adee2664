"""Two-qubit four-vector geometry and the diagonal standard form.

A 2x2 hermitian matrix A = x^mu sigma_mu / 2 is encoded by a real four-vector
with 4 det A = x.x in the metric g = diag(1, -1, -1, -1).  Determinant-one
product transformations act as independent Lorentz transformations on the two
factors and are used to bring any strictly positive two-qubit state to the
diagonal form (1 + sum_k d_k sigma_k (x) sigma_k) / 4, where separability
reduces to a single octahedron inequality.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bipartite import BipartiteState, PureProductState, peres_check
from .errors import NonConvergence, NotStrictlyPositive
from .linalg import DensityMatrix, HermitianOperator, _as_matrix, sqrtm_psd

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_3 = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = np.stack([SIGMA_0, SIGMA_1, SIGMA_2, SIGMA_3])

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])

# Space inversion is transposition followed by a pi rotation about the y axis.
_R_Y_PI = np.array([[0, -1], [1, 0]], dtype=complex)

STATIONARITY_TOL = 1e-10
MAX_OUTER_STEPS = 500


def _require_2x2(m: np.ndarray):
    if m.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")


def to_four_vector(a) -> np.ndarray:
    """Components x^mu = Tr(A sigma_mu) of a 2x2 hermitian matrix."""
    m = _as_matrix(a)
    _require_2x2(m)
    return np.einsum("ij,mji->m", m, PAULI).real


def from_four_vector(x) -> HermitianOperator:
    """The matrix x^mu sigma_mu / 2."""
    x = np.asarray(x, dtype=float)
    if x.shape != (4,):
        raise ValueError("four-vector must have 4 real components")
    return HermitianOperator(np.einsum("m,mij->ij", x, PAULI) / 2)


def minkowski(x, y) -> float:
    """Lorentz scalar product x^mu y_mu."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    return float(x[0] * y[0] - x[1:] @ y[1:])


def bar(a) -> HermitianOperator:
    """Space inversion: sigma_mu -> (1, -sigma); implemented as R A^T R^dagger."""
    m = _as_matrix(a)
    _require_2x2(m)
    return HermitianOperator(_R_Y_PI @ m.T @ _R_Y_PI.conj().T)


def boost(xi) -> np.ndarray:
    """The hermitian determinant-one boost exp(xi . sigma / 2)."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (3,):
        raise ValueError("rapidity must be a real 3-vector")
    r = np.linalg.norm(xi)
    if r == 0.0:
        return SIGMA_0.copy()
    n = xi / r
    return np.cosh(r / 2) * SIGMA_0 + np.sinh(r / 2) * (
        n[0] * SIGMA_1 + n[1] * SIGMA_2 + n[2] * SIGMA_3
    )


def pauli_coefficients(state) -> np.ndarray:
    """Coefficients c[mu, nu] = Tr(rho sigma_mu (x) sigma_nu) / 4 of a two-qubit matrix."""
    m = state.matrix if isinstance(state, BipartiteState) else _as_matrix(state)
    if m.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {m.shape}")
    rho4 = m.reshape(2, 2, 2, 2)
    return np.einsum("ijkl,mki,nlj->mn", rho4, PAULI, PAULI).real / 4


def su2_from_so3(r: np.ndarray) -> np.ndarray:
    """SU(2) matrix U with U sigma_k U^dagger = sum_l R[l, k] sigma_l.

    Quaternion extraction picks the numerically dominant component first, so
    the result is stable for all proper rotations.
    """
    r = np.asarray(r, dtype=float)
    t = np.trace(r)
    choices = [t, r[0, 0], r[1, 1], r[2, 2]]
    case = int(np.argmax(choices))
    if case == 0:
        w = 0.5 * np.sqrt(1.0 + t)
        x = (r[2, 1] - r[1, 2]) / (4 * w)
        y = (r[0, 2] - r[2, 0]) / (4 * w)
        z = (r[1, 0] - r[0, 1]) / (4 * w)
    elif case == 1:
        x = 0.5 * np.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2])
        w = (r[2, 1] - r[1, 2]) / (4 * x)
        y = (r[0, 1] + r[1, 0]) / (4 * x)
        z = (r[0, 2] + r[2, 0]) / (4 * x)
    elif case == 2:
        y = 0.5 * np.sqrt(1.0 - r[0, 0] + r[1, 1] - r[2, 2])
        w = (r[0, 2] - r[2, 0]) / (4 * y)
        x = (r[0, 1] + r[1, 0]) / (4 * y)
        z = (r[1, 2] + r[2, 1]) / (4 * y)
    else:
        z = 0.5 * np.sqrt(1.0 - r[0, 0] - r[1, 1] + r[2, 2])
        w = (r[1, 0] - r[0, 1]) / (4 * z)
        x = (r[0, 2] + r[2, 0]) / (4 * z)
        y = (r[1, 2] + r[2, 1]) / (4 * z)
    return w * SIGMA_0 - 1j * (x * SIGMA_1 + y * SIGMA_2 + z * SIGMA_3)


@dataclass(frozen=True)
class StandardForm:
    """Diagonal coefficients d and the det-1 product factors that reached them."""

    d: np.ndarray
    v_a: np.ndarray
    v_b: np.ndarray
    residual: float

    def __post_init__(self):
        d = np.array(self.d, dtype=float)
        d.setflags(write=False)
        object.__setattr__(self, "d", d)
        if not (d[0] >= d[1] - 1e-9 and d[1] >= abs(d[2]) - 1e-9):
            raise ValueError(f"coefficients not in canonical order d1 >= d2 >= |d3|: {d}")
        if np.min(standard_form_eigenvalues(d)) < -1e-9:
            raise ValueError("coefficients do not describe a positive matrix")
        for name in ("v_a", "v_b"):
            v = np.array(getattr(self, name), dtype=complex)
            v.setflags(write=False)
            object.__setattr__(self, name, v)


def standard_form_matrix(d) -> np.ndarray:
    """The 4x4 matrix (1 + sum_k d_k sigma_k (x) sigma_k) / 4."""
    d = np.asarray(d, dtype=float)
    m = np.eye(4, dtype=complex)
    for k in range(3):
        m = m + d[k] * np.kron(PAULI[k + 1], PAULI[k + 1])
    return m / 4


def standard_form_eigenvalues(d) -> np.ndarray:
    """Spectrum of the standard-form matrix, descending: (1 +- (d1-d2) + d3)/4, (1 +- (d1+d2) - d3)/4."""
    d1, d2, d3 = np.asarray(d, dtype=float)
    lam = np.array(
        [
            (1 + (d1 - d2) + d3) / 4,
            (1 - (d1 - d2) + d3) / 4,
            (1 + (d1 + d2) - d3) / 4,
            (1 - (d1 + d2) - d3) / 4,
        ]
    )
    return np.sort(lam)[::-1]


def octahedron_separable(d, tol: float = 1e-12) -> bool:
    """Separability of a standard-form state: |d1| + |d2| + |d3| <= 1."""
    d = np.asarray(d, dtype=float)
    return bool(np.sum(np.abs(d)) <= 1.0 + tol)


_SIGMA_EIGENVECTORS = {
    1: {+1: np.array([1, 1]) / np.sqrt(2), -1: np.array([1, -1]) / np.sqrt(2)},
    2: {+1: np.array([1, 1j]) / np.sqrt(2), -1: np.array([1, -1j]) / np.sqrt(2)},
    3: {+1: np.array([1, 0], dtype=complex), -1: np.array([0, 1], dtype=complex)},
}


def corner_decomposition(k: int, sign: int) -> list[tuple[float, PureProductState]]:
    """Two-term product decomposition of the octahedron corner (1 + sign sigma_k (x) sigma_k)/4."""
    if k not in (1, 2, 3):
        raise ValueError(f"axis index must be 1, 2 or 3, got {k}")
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    vecs = _SIGMA_EIGENVECTORS[k]
    return [
        (0.5, PureProductState(vecs[+1], vecs[sign])),
        (0.5, PureProductState(vecs[-1], vecs[-sign])),
    ]


def _boost_factors(tau_a: np.ndarray, tau_b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    v_a = sqrtm_psd(tau_a / np.sqrt(np.linalg.det(tau_a).real))
    v_b = sqrtm_psd(tau_b / np.sqrt(np.linalg.det(tau_b).real))
    return v_a, v_b


def _transformed(rho: np.ndarray, v_a: np.ndarray, v_b: np.ndarray) -> np.ndarray:
    big = np.kron(v_a, v_b)
    m = big @ rho @ big.conj().T
    m = (m + m.conj().T) / 2
    return m / np.trace(m).real


def schmidt_2x2(state: BipartiteState, strictness_tol: float = 1e-8,
                max_iter: int = MAX_OUTER_STEPS) -> StandardForm:
    """Bring a strictly positive two-qubit state to the diagonal standard form.

    Stage one alternates exact single-factor minimizations of the product
    overlap functional; each half-step has the closed-form solution
    tau_A proportional to (Tr_B[rho (1 (x) tau_B)])^(-1), so the objective is
    non-increasing by construction.  The resulting hermitian det-1 boosts kill
    the local Bloch components.  Stage two aligns the remaining 3x3
    correlation block with proper rotations obtained from its singular value
    decomposition, with determinant signs pushed into d3, which lands the
    coefficients directly in the canonical order d1 >= d2 >= |d3|.

    Raises NotStrictlyPositive below the positivity margin and NonConvergence
    if the Bloch components do not reach 1e-10 within the iteration budget.
    """
    if state.dims != (2, 2):
        raise ValueError(f"expected a two-qubit state, got dims {state.dims}")
    rho = state.matrix
    if np.linalg.eigvalsh(rho)[0] <= strictness_tol:
        raise NotStrictlyPositive(
            f"minimum eigenvalue {np.linalg.eigvalsh(rho)[0]:.3e} <= {strictness_tol:.1e}"
        )
    rho4 = rho.reshape(2, 2, 2, 2)

    tau_a = SIGMA_0 / 2
    tau_b = SIGMA_0 / 2
    v_a, v_b = SIGMA_0.copy(), SIGMA_0.copy()
    converged = False
    for _ in range(max_iter):
        m_a = np.einsum("ijkl,lj->ik", rho4, tau_b)
        tau_a = np.linalg.inv(m_a)
        tau_a = (tau_a + tau_a.conj().T) / 2
        tau_a /= np.trace(tau_a).real
        m_b = np.einsum("ijkl,ki->jl", rho4, tau_a)
        tau_b = np.linalg.inv(m_b)
        tau_b = (tau_b + tau_b.conj().T) / 2
        tau_b /= np.trace(tau_b).real
        v_a, v_b = _boost_factors(tau_a, tau_b)
        c = pauli_coefficients(_transformed(rho, v_a, v_b))
        if max(np.max(np.abs(c[0, 1:])), np.max(np.abs(c[1:, 0]))) < STATIONARITY_TOL:
            converged = True
            break
    if not converged:
        raise NonConvergence(
            f"local Bloch components not below {STATIONARITY_TOL:.0e} after {max_iter} steps"
        )

    c = pauli_coefficients(_transformed(rho, v_a, v_b))
    u, s, vt = np.linalg.svd(c[1:, 1:])
    v = vt.T
    f_u = np.diag([1.0, 1.0, np.linalg.det(u)])
    f_v = np.diag([1.0, 1.0, np.linalg.det(v)])
    u_a = su2_from_so3(f_u @ u.T)
    u_b = su2_from_so3(f_v @ v.T)
    v_a_final = u_a @ v_a
    v_b_final = u_b @ v_b

    c_final = pauli_coefficients(_transformed(rho, v_a_final, v_b_final))
    d = 4 * np.diag(c_final)[1:]
    off_form = 4 * c_final.copy()
    np.fill_diagonal(off_form, 0.0)
    residual = float(np.linalg.norm(off_form))
    return StandardForm(d=d, v_a=v_a_final, v_b=v_b_final, residual=residual)


@dataclass(frozen=True)
class SeparabilityResult:
    """Verdict for a two-qubit state with an explicit certificate."""

    separable: bool
    standard_form: StandardForm
    perturbation: float
    decomposition: tuple = field(default=None, repr=False)
    negative_pt_eigenvalue: float = None


def _pull_back_atoms(atoms, v_a: np.ndarray, v_b: np.ndarray):
    """Map standard-frame product atoms back through the inverse factors."""
    inv_a = np.linalg.inv(v_a)
    inv_b = np.linalg.inv(v_b)
    pulled = []
    for weight, pps in atoms:
        phi = inv_a @ pps.phi
        chi = inv_b @ pps.chi
        scale = float((np.linalg.norm(phi) * np.linalg.norm(chi)) ** 2)
        pulled.append(
            (weight * scale, PureProductState(phi / np.linalg.norm(phi), chi / np.linalg.norm(chi)))
        )
    total = sum(w for w, _ in pulled)
    return tuple((w / total, pps) for w, pps in pulled if w / total > 0.0)


def separable_2x2(state: BipartiteState, strictness_tol: float = 1e-8) -> SeparabilityResult:
    """Exact separability verdict for a two-qubit state.

    Singular inputs are nudged toward the maximally mixed state by 1e-7 (the
    reported perturbation) so the standard-form transformation applies.  A
    separable verdict carries an explicit convex decomposition into pure
    product states, built from the octahedron corners and mapped back through
    the inverse factors; an entangled verdict carries the negative
    partial-transpose eigenvalue.
    """
    if state.dims != (2, 2):
        raise ValueError(f"expected a two-qubit state, got dims {state.dims}")
    working = state
    perturbation = 0.0
    if np.linalg.eigvalsh(state.matrix)[0] <= strictness_tol:
        perturbation = 1e-7
        m = (1 - perturbation) * state.matrix + perturbation * np.eye(4) / 4
        working = BipartiteState(DensityMatrix(HermitianOperator(m)), (2, 2))

    form = schmidt_2x2(working, strictness_tol=strictness_tol)
    if not octahedron_separable(form.d):
        return SeparabilityResult(
            separable=False,
            standard_form=form,
            perturbation=perturbation,
            negative_pt_eigenvalue=peres_check(state).min_eigenvalue,
        )

    atoms = []
    weight_spent = 0.0
    for k in range(3):
        if abs(form.d[k]) > 0.0:
            sign = 1 if form.d[k] > 0 else -1
            for half, pps in corner_decomposition(k + 1, sign):
                atoms.append((abs(form.d[k]) * half, pps))
            weight_spent += abs(form.d[k])
    remainder = max(1.0 - weight_spent, 0.0)
    if remainder > 0.0:
        basis0 = _SIGMA_EIGENVECTORS[3][+1]
        basis1 = _SIGMA_EIGENVECTORS[3][-1]
        for va in (basis0, basis1):
            for vb in (basis0, basis1):
                atoms.append((remainder / 4, PureProductState(va, vb)))
    decomposition = _pull_back_atoms(atoms, form.v_a, form.v_b)
    return SeparabilityResult(
        separable=True,
        standard_form=form,
        perturbation=perturbation,
        decomposition=decomposition,
    )
