"""Hermitian matrix algebra, orthonormal operator bases and the Hilbert-Schmidt metric.

All matrices are dense complex arrays in double precision.  The domain types
are immutable value objects; every operation is a pure function, so concurrent
read-only use is safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = 1e-10


def _as_matrix(obj) -> np.ndarray:
    """Accept HermitianOperator, DensityMatrix or a raw array."""
    if isinstance(obj, DensityMatrix):
        return obj.op.matrix
    if isinstance(obj, HermitianOperator):
        return obj.matrix
    return np.asarray(obj, dtype=complex)


@dataclass(frozen=True)
class HermitianOperator:
    """An n x n complex hermitian matrix, element of the real vector space of observables."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"matrix must be square, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
            raise ValueError("matrix is not hermitian within 1e-12")
        m = (m + m.conj().T) / 2
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace state."""

    op: HermitianOperator

    def __post_init__(self):
        if not isinstance(self.op, HermitianOperator):
            object.__setattr__(self, "op", HermitianOperator(_as_matrix(self.op)))
        m = self.op.matrix
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace must be 1, got {tr!r}")
        w = np.linalg.eigvalsh(m)
        if w[0] < -POSITIVITY_TOL:
            raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {w[0]:.3e})")

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix

    @property
    def dim(self) -> int:
        return self.op.dim


@dataclass(frozen=True)
class OperatorBasis:
    """Orthonormal hermitian basis: Tr(J_a J_b) = delta_ab, J_0 proportional to identity."""

    dim: int
    elements: tuple = field(repr=False)

    def __len__(self) -> int:
        return len(self.elements)

    def __getitem__(self, a: int) -> np.ndarray:
        return self.elements[a]

    def stack(self) -> np.ndarray:
        """All n^2 basis matrices as one (n^2, n, n) array."""
        return np.stack(self.elements)


def su_basis(n: int) -> OperatorBasis:
    """Generalized Gell-Mann basis of hermitian n x n matrices, Tr(J_a J_b) = delta_ab.

    Ordering is fixed: J_0 = 1/sqrt(n) * identity, then symmetric off-diagonal
    pairs (j < k, lexicographic), antisymmetric pairs, then the diagonal
    traceless matrices.  This makes expansion coefficients reproducible.
    """
    if n < 2:
        raise ValueError(f"dimension must be >= 2, got {n}")
    elements = [np.eye(n, dtype=complex) / np.sqrt(n)]
    for j in range(n):
        for k in range(j + 1, n):
            m = np.zeros((n, n), dtype=complex)
            m[j, k] = m[k, j] = 1 / np.sqrt(2)
            elements.append(m)
    for j in range(n):
        for k in range(j + 1, n):
            m = np.zeros((n, n), dtype=complex)
            m[j, k] = -1j / np.sqrt(2)
            m[k, j] = 1j / np.sqrt(2)
            elements.append(m)
    for ell in range(1, n):
        m = np.zeros((n, n), dtype=complex)
        m[np.arange(ell), np.arange(ell)] = 1.0
        m[ell, ell] = -float(ell)
        elements.append(m / np.sqrt(ell * (ell + 1)))
    for m in elements:
        m.setflags(write=False)
    return OperatorBasis(dim=n, elements=tuple(elements))


def spectral_decompose(a) -> list[tuple[float, np.ndarray]]:
    """Eigenvalues (descending) with orthonormal eigenvectors of a hermitian matrix."""
    m = _as_matrix(a)
    w, v = np.linalg.eigh(m)
    return [(float(w[i]), v[:, i].copy()) for i in range(len(w) - 1, -1, -1)]


def hs_inner(a, b) -> float:
    """Scalar product Tr(AB) of two hermitian matrices."""
    ma, mb = _as_matrix(a), _as_matrix(b)
    if ma.shape != mb.shape:
        raise ValueError(f"dimension mismatch: {ma.shape} vs {mb.shape}")
    return float(np.tensordot(ma, mb.T, axes=2).real)


def hs_distance(rho, sigma) -> float:
    """Hilbert-Schmidt distance sqrt(Tr((rho-sigma)^2)/2)."""
    d = _as_matrix(rho) - _as_matrix(sigma)
    return float(np.sqrt(max(np.sum(np.abs(d) ** 2) / 2, 0.0)))


def entropy(rho) -> float:
    """Von Neumann entropy -Tr(rho ln rho), with 0 ln 0 = 0."""
    w = np.linalg.eigvalsh(_as_matrix(rho))
    w = np.clip(w, 0.0, None)
    nz = w[w > 0]
    return float(-np.sum(nz * np.log(nz)))


def conjugate(rho, v: np.ndarray, renormalize: bool = True):
    """Map rho to V rho V^dagger.

    With ``renormalize`` the result is divided by its trace and returned as a
    DensityMatrix; otherwise the raw (positive, non-unit-trace) matrix comes
    back as a HermitianOperator.  Unitary V preserves spectrum and entropy.
    """
    v = np.asarray(v, dtype=complex)
    if abs(np.linalg.det(v)) < 1e-14:
        raise ValueError("transformation matrix is singular")
    m = v @ _as_matrix(rho) @ v.conj().T
    m = (m + m.conj().T) / 2
    if renormalize:
        return DensityMatrix(HermitianOperator(m / np.trace(m).real))
    return HermitianOperator(m)


def transpose(rho: DensityMatrix) -> DensityMatrix:
    """Matrix transposition; an involution that preserves the spectrum."""
    return DensityMatrix(HermitianOperator(_as_matrix(rho).T))


def maximally_mixed(n: int) -> DensityMatrix:
    """The state 1/n, centroid of the set of density matrices."""
    return DensityMatrix(HermitianOperator(np.eye(n, dtype=complex) / n))


def basis_coefficients(a, basis: OperatorBasis) -> np.ndarray:
    """Expansion coefficients xi_a = Tr(A J_a) in an orthonormal basis."""
    m = _as_matrix(a)
    return np.einsum("ij,aji->a", m, basis.stack()).real


def sqrtm_psd(m: np.ndarray) -> np.ndarray:
    """Hermitian square root of a positive semidefinite matrix."""
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


# --- matrix JSON format ----------------------------------------------------
#
# {"dim": n, "entries": [[[re, im], ...], ...]} row-major.  The upper triangle
# is authoritative; writers emit the lower triangle as its exact conjugate and
# force the diagonal imaginary parts to zero.


def matrix_to_json(a) -> dict:
    """Serialize a hermitian matrix to the exchange dict."""
    m = _as_matrix(a)
    n = m.shape[0]
    entries = [[None] * n for _ in range(n)]
    for i in range(n):
        entries[i][i] = [float(m[i, i].real), 0.0]
        for j in range(i + 1, n):
            re, im = float(m[i, j].real), float(m[i, j].imag)
            entries[i][j] = [re, im]
            entries[j][i] = [re, -im]
    return {"dim": n, "entries": entries}


def matrix_from_json(data: dict) -> HermitianOperator:
    """Parse the exchange dict back into a HermitianOperator."""
    if not isinstance(data, dict) or "dim" not in data or "entries" not in data:
        raise ValueError("matrix JSON must have 'dim' and 'entries' fields")
    n = int(data["dim"])
    entries = data["entries"]
    if len(entries) != n or any(len(row) != n for row in entries):
        raise ValueError(f"entries must form a {n} x {n} grid")
    m = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            pair = entries[i][j]
            if len(pair) != 2:
                raise ValueError("each entry must be a [re, im] pair")
            m[i, j] = complex(float(pair[0]), float(pair[1]))
    return HermitianOperator(m)
