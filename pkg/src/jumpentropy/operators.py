"""Dense complex linear algebra for small open systems.

Operators, state vectors and density matrices are plain ``numpy`` arrays
(``complex128``): operators and density matrices are ``(d, d)``, state
vectors ``(d,)``.  The functions here validate at the boundary and never
mutate their inputs.

Eigen-decompositions use a cyclic complex Jacobi sweep.  It is slow in
absolute terms but the matrices handled here are at most a few rows wide,
and Jacobi gives eigenvalues accurate to the unit roundoff of ``||m||``.

Logarithms of singular density matrices are taken on a floored spectrum
(``ln max(lambda, floor)``).  In every traced expression the floor multiplies
a (near-)zero population, so its contribution is bounded by
``d * floor * |ln floor|``.
"""
from __future__ import annotations

import math

import numpy as np

from .exceptions import InvalidStateError, ValidationError

HERMITIAN_TOL = 1e-9
TRACE_TOL = 1e-9
PSD_TOL = 1e-9
NORM_TOL = 1e-10
LOG_FLOOR = 1e-12

_JACOBI_MAX_SWEEPS = 100


def as_operator(m, name: str = "operator") -> np.ndarray:
    """Return ``m`` as a square complex matrix, or raise ValidationError."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValidationError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(m))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def trace(m: np.ndarray) -> complex:
    return complex(np.trace(m))


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    """True when ``max|m - m^dagger| <= tol`` (``tol=0`` demands exact equality)."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.max(np.abs(m - dagger(m)), initial=0.0) <= tol)


def is_positive_semidefinite(m: np.ndarray, tol: float = PSD_TOL) -> bool:
    if not is_hermitian(m, HERMITIAN_TOL):
        return False
    evals, _ = hermitian_eigen(m)
    return bool(evals[0] >= -tol)


def hermitian_eigen(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    m : array_like, shape (d, d)
        Hermitian within ``1e-9``.

    Returns
    -------
    evals : ndarray, shape (d,)
        Real eigenvalues in ascending order.
    vecs : ndarray, shape (d, d)
        Unitary matrix whose columns are the eigenvectors, so that
        ``m = vecs @ diag(evals) @ vecs^dagger``.
    """
    a_np = as_operator(m, "matrix")
    if not is_hermitian(a_np, HERMITIAN_TOL):
        raise ValidationError("hermitian_eigen requires a Hermitian matrix")
    d = a_np.shape[0]
    # plain Python scalars: far cheaper than numpy slicing at d <= 8
    a = (0.5 * (a_np + dagger(a_np))).tolist()
    v = [[1.0 + 0j if i == j else 0j for j in range(d)] for i in range(d)]
    scale = max(float(np.max(np.abs(a_np))), np.finfo(float).tiny)
    threshold = 1e-17 * scale

    for _ in range(_JACOBI_MAX_SWEEPS):
        off = 0.0
        for i in range(d):
            for j in range(i + 1, d):
                off += abs(a[i][j]) ** 2
        if math.sqrt(2.0 * off) <= threshold:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p][q]
                mag = abs(apq)
                if mag <= threshold * 1e-3:
                    continue
                phc = (apq / mag).conjugate()
                zeta = (a[q][q].real - a[p][p].real) / (2.0 * mag)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # u = [[c, s], [-s*conj(phase), c*conj(phase)]] on the (p, q) plane
                u10 = -s * phc
                u11 = c * phc
                for k in range(d):
                    akp = a[k][p]
                    akq = a[k][q]
                    a[k][p] = akp * c + akq * u10
                    a[k][q] = akp * s + akq * u11
                    vkp = v[k][p]
                    vkq = v[k][q]
                    v[k][p] = vkp * c + vkq * u10
                    v[k][q] = vkp * s + vkq * u11
                cu10 = u10.conjugate()
                cu11 = u11.conjugate()
                for k in range(d):
                    apk = a[p][k]
                    aqk = a[q][k]
                    a[p][k] = c * apk + cu10 * aqk
                    a[q][k] = s * apk + cu11 * aqk
                a[p][q] = 0j
                a[q][p] = 0j
    else:  # pragma: no cover - Jacobi converges quadratically
        raise ValidationError("Jacobi iteration did not converge")

    a = np.array(a, dtype=np.complex128)
    v = np.array(v, dtype=np.complex128)
    evals = np.real(np.diag(a)).copy()
    order = np.argsort(evals, kind="stable")
    return evals[order], v[:, order]


def validate_density(rho) -> np.ndarray:
    """Check Hermiticity, unit trace and positivity; return the matrix."""
    _density_spectrum(rho)
    return as_operator(rho, "density matrix")


def validate_state(psi, tol: float = NORM_TOL) -> np.ndarray:
    v = np.asarray(psi, dtype=np.complex128)
    if v.ndim != 1 or v.size < 1:
        raise ValidationError(f"state vector must be one-dimensional, got shape {v.shape}")
    nrm = float(np.linalg.norm(v))
    if abs(nrm - 1.0) > tol:
        raise InvalidStateError(f"state vector has norm {nrm!r}, expected 1")
    return v


def projector(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=np.complex128)
    return np.outer(v, np.conj(v))


def _density_spectrum(rho) -> tuple[np.ndarray, np.ndarray]:
    r = as_operator(rho, "density matrix")
    if not is_hermitian(r, HERMITIAN_TOL):
        raise InvalidStateError("density matrix is not Hermitian")
    tr = np.trace(r).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise InvalidStateError(f"density matrix has trace {tr!r}, expected 1")
    evals, vecs = hermitian_eigen(r)
    if evals[0] < -PSD_TOL:
        raise InvalidStateError(f"density matrix has negative eigenvalue {evals[0]:.3e}")
    return evals, vecs


def von_neumann_entropy(rho) -> float:
    """Entropy ``-tr(rho ln rho)`` in nats, with ``0 ln 0 = 0``."""
    evals, _ = _density_spectrum(rho)
    lam = np.clip(evals, 0.0, None)
    nz = lam[lam > 0.0]
    return float(-np.sum(nz * np.log(nz))) + 0.0  # no negative zero


def matrix_log_on_support(rho, floor: float = LOG_FLOOR) -> np.ndarray:
    """``V diag(ln max(lambda_k, floor)) V^dagger`` for a density matrix."""
    if not floor > 0.0:
        raise ValidationError("floor must be positive")
    evals, vecs = _density_spectrum(rho)
    logs = np.log(np.maximum(evals, floor))
    out = (vecs * logs) @ dagger(vecs)
    return 0.5 * (out + dagger(out))


def trace_distance(a, b) -> float:
    """Half the trace norm of ``a - b``."""
    a = as_operator(a, "a")
    b = as_operator(b, "b")
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    evals, _ = hermitian_eigen(0.5 * (diff + dagger(diff)))
    return float(0.5 * np.sum(np.abs(evals)))


def maximally_mixed(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=np.complex128) / dim


def basis_state(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=np.complex128)
    v[index] = 1.0
    return v


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Ginibre-distributed density matrix (full rank unless ``rank`` given)."""
    k = dim if rank is None else rank
    g = rng.standard_normal((dim, k)) + 1j * rng.standard_normal((dim, k))
    r = g @ dagger(g)
    r = r / np.trace(r).real
    return 0.5 * (r + dagger(r))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph
