import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jumpentropy import operators as ops
from jumpentropy.exceptions import InvalidStateError, ValidationError


def _hermitian(seed, d):
    r = np.random.default_rng(seed)
    a = r.standard_normal((d, d)) + 1j * r.standard_normal((d, d))
    return a + a.conj().T


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 8))
def test_eigen_matches_numpy(seed, d):
    m = _hermitian(seed, d)
    evals, vecs = ops.hermitian_eigen(m)
    np.testing.assert_allclose(evals, np.linalg.eigvalsh(m), atol=1e-11 * max(1, np.abs(m).max()))
    np.testing.assert_allclose(vecs @ np.diag(evals) @ vecs.conj().T, m, atol=1e-11 * np.abs(m).max())
    np.testing.assert_allclose(vecs.conj().T @ vecs, np.eye(d), atol=1e-12)


def test_eigen_degenerate_and_diagonal():
    evals, vecs = ops.hermitian_eigen(np.diag([2.0, 2.0, -1.0]))
    np.testing.assert_allclose(evals, [-1.0, 2.0, 2.0])
    np.testing.assert_allclose(np.abs(vecs.conj().T @ vecs), np.eye(3), atol=1e-14)


def test_eigen_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        ops.hermitian_eigen(np.array([[0, 1], [0, 0]]))


def test_entropy_pure_and_mixed():
    assert ops.von_neumann_entropy(ops.projector([1, 0, 0])) == 0.0
    assert math.isclose(ops.von_neumann_entropy(ops.maximally_mixed(3)), math.log(3), rel_tol=1e-14)
    # diag(p, 1-p): binary entropy
    p = 0.3
    h = -(p * math.log(p) + (1 - p) * math.log(1 - p))
    assert math.isclose(ops.von_neumann_entropy(np.diag([p, 1 - p])), h, rel_tol=1e-14)


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 5))
def test_entropy_bounds_and_unitary_invariance(seed, d):
    r = np.random.default_rng(seed)
    rho = ops.random_density_matrix(d, r)
    u = ops.random_unitary(d, r)
    s = ops.von_neumann_entropy(rho)
    assert -1e-12 <= s <= math.log(d) + 1e-12
    assert math.isclose(ops.von_neumann_entropy(u @ rho @ u.conj().T), s, abs_tol=1e-10)


@given(st.integers(0, 2 ** 32 - 1))
def test_matrix_log_inverts_exp(seed):
    rho = ops.random_density_matrix(3, np.random.default_rng(seed))
    log = ops.matrix_log_on_support(rho)
    w, v = np.linalg.eigh(log)
    np.testing.assert_allclose((v * np.exp(w)) @ v.conj().T, rho, atol=1e-10)


def test_matrix_log_floors_zero_eigenvalues():
    log = ops.matrix_log_on_support(np.diag([1.0, 0.0]), floor=1e-12)
    np.testing.assert_allclose(np.diag(log).real, [0.0, math.log(1e-12)])


def test_validate_density_errors():
    with pytest.raises(InvalidStateError):
        ops.validate_density(np.diag([0.6, 0.6]))
    with pytest.raises(InvalidStateError):
        ops.validate_density(np.diag([1.5, -0.5]))
    with pytest.raises(InvalidStateError):
        ops.validate_density(np.array([[0.5, 0.1], [0.3, 0.5]]))
    with pytest.raises(ValidationError):
        ops.validate_density(np.ones((2, 3)))
    with pytest.raises(InvalidStateError):
        ops.validate_state([1.0, 1.0])


def test_trace_distance():
    a = ops.projector([1, 0])
    b = ops.projector([0, 1])
    assert math.isclose(ops.trace_distance(a, b), 1.0)
    assert ops.trace_distance(a, a) == 0.0
    plus = ops.projector(np.array([1, 1]) / math.sqrt(2))
    assert math.isclose(ops.trace_distance(a, plus), math.sqrt(0.5), rel_tol=1e-12)


def test_commutators():
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    z = np.diag([1.0, -1.0]).astype(complex)
    y = np.array([[0, -1j], [1j, 0]])
    np.testing.assert_allclose(ops.commutator(x, y), 2j * z)
    np.testing.assert_allclose(ops.anticommutator(x, y), 0)
